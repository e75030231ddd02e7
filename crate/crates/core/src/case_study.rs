//! The one-mode robotic-arm plant and the integral resonant controller used
//! throughout the examples and tests.
//!
//! The plant is `G(s) = C0 / s^2 + C1 / (s^2 + p1^2)` with inputs (hub
//! torque, actuator voltage) and outputs (hub angle, sensor voltage).

use nalgebra::DMatrix;

use crate::irc::{make_irc, IrcController};
use crate::lti::{ModalModel, Mode, StateSpaceModel};
use crate::Result;

/// Rigid-body gain `(C0)_11`, often quoted rounded as `0.14`. This value
/// reproduces `J = [0.3751; 0]`.
pub const RIGID_BODY_GAIN: f64 = 0.140679;

/// First flexible mode frequency (rad/s).
pub const MODE_FREQUENCY: f64 = 3.4;

/// First flexible mode coefficient `C1` (row-major).
pub const MODE_COEFFICIENT: [f64; 4] = [3.0907, 3.5573e-4, 3.5573e-4, 2.35];

pub const IRC_GAMMA: [f64; 4] = [35.0, 15.0, 15.0, 20.0];
pub const IRC_PHI: [f64; 4] = [0.745, 0.521, 0.521, 1.021];
pub const IRC_DELTA: [f64; 4] = [4.29, 0.0, 0.0, 2.22];

fn m2(v: [f64; 4]) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &v)
}

/// `C0 = diag(RIGID_BODY_GAIN, 0)`.
pub fn rigid_body_coefficient() -> DMatrix<f64> {
    m2([RIGID_BODY_GAIN, 0.0, 0.0, 0.0])
}

pub fn plant_modal() -> ModalModel {
    let mut mm = ModalModel::new(2);
    mm.g2 = Some(rigid_body_coefficient());
    mm.modes.push(Mode::undamped(MODE_FREQUENCY, m2(MODE_COEFFICIENT)));
    mm
}

/// Minimal six-state realization of [`plant_modal`].
pub fn plant() -> Result<StateSpaceModel> {
    plant_modal().to_state_space()
}

pub fn controller() -> Result<IrcController> {
    make_irc(&m2(IRC_GAMMA), &m2(IRC_PHI), &m2(IRC_DELTA))
}
