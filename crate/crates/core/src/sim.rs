//! Step responses of the positive-feedback loop `u = Gbar e`, `e = y + ...`
//! by exact zero-order-hold discretization of the closed-loop state equation.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::linalg::{self, expm};
use crate::lti::{self, StateSpaceModel};
use crate::{Error, Result};

/// Where the step enters the loop.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Wiring {
    /// Controller input `e = y - r e_1`: the controller sees the tracking
    /// error on the first output (the hub angle) and the raw remaining outputs.
    #[default]
    ReferenceOnFirstOutput,
    /// Plant input `u = Gbar y + r e_1`: a step on the first input.
    InputDisturbance,
}

impl Wiring {
    pub fn name(self) -> &'static str {
        match self {
            Wiring::ReferenceOnFirstOutput => "reference_on_first_output",
            Wiring::InputDisturbance => "input_disturbance",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub wiring: Wiring,
    pub t_end: f64,
    pub dt: f64,
    /// Step amplitude `r`.
    pub amplitude: f64,
}

impl SimulationConfig {
    pub fn new(wiring: Wiring, t_end: f64, dt: f64) -> Self {
        Self { wiring, t_end, dt, amplitude: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub config: SimulationConfig,
    /// Sample times `k dt`.
    pub t: Vec<f64>,
    /// `outputs[i][k]`: plant output `i` at `t[k]`.
    pub outputs: Vec<Vec<f64>>,
    /// Euclidean norm of the closed-loop state at each sample.
    pub state_norm: Vec<f64>,
    pub spectral_abscissa: f64,
    pub hurwitz: bool,
    /// Set when the state becomes non-finite or its envelope grows by more
    /// than [`DIVERGENCE_GROWTH`] between the first half and the last tenth.
    pub diverged: bool,
}

/// Envelope growth treated as divergence.
pub const DIVERGENCE_GROWTH: f64 = 10.0;

impl SimulationResult {
    /// Hub angle (first output).
    pub fn theta(&self) -> &[f64] {
        &self.outputs[0]
    }

    /// Sensor voltage (second output), if the plant has one.
    pub fn vs(&self) -> Option<&[f64]> {
        self.outputs.get(1).map(|v| v.as_slice())
    }
}

/// Closed loop driven by the scalar step `r`: `(A, B, C, D)` with outputs the
/// plant outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivenLoop {
    pub a: DMatrix<f64>,
    pub b: DMatrix<f64>,
    pub c: DMatrix<f64>,
    pub d: DMatrix<f64>,
}

impl DrivenLoop {
    /// Steady state `(x, y)` for a constant input `r` when `A` is invertible.
    pub fn equilibrium(&self, r: f64) -> Option<(DVector<f64>, DVector<f64>)> {
        let ainv = linalg::try_inverse(&self.a)?;
        let x = -(ainv * &self.b) * r;
        let y = &self.c * &x + &self.d * r;
        Some((x.column(0).into_owned(), y.column(0).into_owned()))
    }
}

pub fn driven_loop(g: &StateSpaceModel, gbar: &StateSpaceModel, wiring: Wiring) -> Result<DrivenLoop> {
    let m = g.ports();
    if gbar.ports() != m {
        return Err(Error::DimensionMismatch(alloc::format!("plant has {m} ports, controller has {}", gbar.ports())));
    }
    if m == 0 {
        return Err(Error::InvalidArgument("plant has no ports".into()));
    }
    let (n, nc) = (g.states(), gbar.states());
    let mut e_ref = DMatrix::zeros(m, 1);
    let mut u_ref = DMatrix::zeros(m, 1);
    match wiring {
        Wiring::ReferenceOnFirstOutput => e_ref[(0, 0)] = -1.0,
        Wiring::InputDisturbance => u_ref[(0, 0)] = 1.0,
    }
    let ident = DMatrix::identity(m, m);
    let mi = linalg::try_inverse(&(&ident - gbar.d() * g.d())).ok_or(Error::IllPosed)?;
    // u = Ku [x; xc; r]
    let mut ku = DMatrix::zeros(m, n + nc + 1);
    ku.view_mut((0, 0), (m, n)).copy_from(&(&mi * gbar.d() * g.c()));
    ku.view_mut((0, n), (m, nc)).copy_from(&(&mi * gbar.c()));
    ku.view_mut((0, n + nc), (m, 1)).copy_from(&(&mi * (gbar.d() * &e_ref + &u_ref)));
    // y = Ky [x; xc; r]
    let mut ky = g.d() * &ku;
    {
        let mut v = ky.view_mut((0, 0), (m, n));
        v += g.c();
    }
    let mut ke = ky.clone();
    {
        let mut v = ke.view_mut((0, n + nc), (m, 1));
        v += &e_ref;
    }
    let mut full = DMatrix::zeros(n + nc, n + nc + 1);
    {
        let mut top = full.view_mut((0, 0), (n, n + nc + 1));
        top += g.b() * &ku;
        let mut ax = top.view_mut((0, 0), (n, n));
        ax += g.a();
    }
    {
        let mut bottom = full.view_mut((n, 0), (nc, n + nc + 1));
        bottom += gbar.b() * &ke;
        let mut ac = bottom.view_mut((0, n), (nc, nc));
        ac += gbar.a();
    }
    Ok(DrivenLoop {
        a: full.columns(0, n + nc).into_owned(),
        b: full.columns(n + nc, 1).into_owned(),
        c: ky.columns(0, n + nc).into_owned(),
        d: ky.columns(n + nc, 1).into_owned(),
    })
}

/// Zero-order-hold pair `(Phi, Gamma)` with `Phi = e^{A dt}` and
/// `Gamma = int_0^dt e^{A t} dt B`, from one exponential of `[[A, B], [0, 0]] dt`.
pub fn discretize(a: &DMatrix<f64>, b: &DMatrix<f64>, dt: f64) -> (DMatrix<f64>, DMatrix<f64>) {
    let (n, k) = (a.nrows(), b.ncols());
    let mut aug = DMatrix::zeros(n + k, n + k);
    aug.view_mut((0, 0), (n, n)).copy_from(&(a * dt));
    aug.view_mut((0, n), (n, k)).copy_from(&(b * dt));
    let e = expm(&aug);
    (e.view((0, 0), (n, n)).into_owned(), e.view((0, n), (n, k)).into_owned())
}

/// Step response from the zero state on `t = 0, dt, .., N dt` with
/// `N = round(t_end / dt)`.
pub fn step_response(
    g: &StateSpaceModel,
    gbar: &StateSpaceModel,
    config: SimulationConfig,
) -> Result<SimulationResult> {
    let SimulationConfig { wiring, t_end, dt, amplitude } = config;
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument("t_end must be non-negative".into()));
    }
    if !amplitude.is_finite() {
        return Err(Error::InvalidArgument("amplitude must be finite".into()));
    }
    let steps = libm::round(t_end / dt) as usize;
    if steps > 50_000_000 {
        return Err(Error::InvalidArgument("too many steps".into()));
    }
    let lp = driven_loop(g, gbar, wiring)?;
    let alpha = lti::spectral_abscissa(&lp.a);
    let hurwitz = lti::is_hurwitz(&lp.a, lti::HURWITZ_MARGIN);
    let (phi, gamma) = discretize(&lp.a, &lp.b, dt);
    let drive = gamma.column(0) * amplitude;
    let m = lp.c.nrows();
    let mut x = DVector::zeros(lp.a.nrows());
    let mut t = Vec::with_capacity(steps + 1);
    let mut outputs = alloc::vec![Vec::with_capacity(steps + 1); m];
    let mut state_norm = Vec::with_capacity(steps + 1);
    let mut finite = true;
    for k in 0..=steps {
        let y = &lp.c * &x + lp.d.column(0) * amplitude;
        t.push(k as f64 * dt);
        for (i, out) in outputs.iter_mut().enumerate() {
            out.push(y[i]);
        }
        let nx = x.norm();
        state_norm.push(nx);
        if !nx.is_finite() {
            finite = false;
            break;
        }
        x = &phi * &x + &drive;
    }
    let diverged = !finite || envelope_grows(&state_norm);
    Ok(SimulationResult { config, t, outputs, state_norm, spectral_abscissa: alpha, hurwitz, diverged })
}

fn envelope_grows(norms: &[f64]) -> bool {
    let n = norms.len();
    if n < 20 {
        return false;
    }
    let early = norms[..n / 2].iter().copied().fold(0.0, f64::max);
    let late = norms[n - n / 10..].iter().copied().fold(0.0, f64::max);
    late > DIVERGENCE_GROWTH * early && late > 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::case_study;

    fn ss(a: &[f64], b: &[f64], c: &[f64], d: &[f64], n: usize, m: usize) -> StateSpaceModel {
        StateSpaceModel::new(
            DMatrix::from_row_slice(n, n, a),
            DMatrix::from_row_slice(n, m, b),
            DMatrix::from_row_slice(m, n, c),
            DMatrix::from_row_slice(m, m, d),
        )
        .unwrap()
    }

    fn double_integrator() -> StateSpaceModel {
        ss(&[0.0, 1.0, 0.0, 0.0], &[0.0, 1.0], &[1.0, 0.0], &[0.0], 2, 1)
    }

    fn irc(delta: f64) -> StateSpaceModel {
        ss(&[-1.0], &[1.0], &[1.0], &[-delta], 1, 1)
    }

    #[test]
    fn zero_reference_gives_zero_output() {
        let mut cfg = SimulationConfig::new(Wiring::default(), 5.0, 0.01);
        cfg.amplitude = 0.0;
        let r = step_response(&double_integrator(), &irc(2.0), cfg).unwrap();
        assert!(r.theta().iter().all(|&v| v == 0.0));
        assert!(!r.diverged);
    }

    #[test]
    fn scalar_loop_tracks_reference() {
        let r = step_response(&double_integrator(), &irc(2.0), SimulationConfig::new(Wiring::default(), 150.0, 0.01))
            .unwrap();
        assert!(r.hurwitz && !r.diverged);
        assert!((r.theta().last().unwrap() - 1.0).abs() < 1e-6);
        assert_eq!(r.t.len(), 15001);
    }

    #[test]
    fn halving_dt_matches_at_common_samples() {
        let (g, k) = (case_study::plant().unwrap(), case_study::controller().unwrap().realization);
        let a = step_response(&g, &k, SimulationConfig::new(Wiring::default(), 10.0, 0.02)).unwrap();
        let b = step_response(&g, &k, SimulationConfig::new(Wiring::default(), 10.0, 0.01)).unwrap();
        for i in 0..a.t.len() {
            for ch in 0..2 {
                let (x, y) = (a.outputs[ch][i], b.outputs[ch][2 * i]);
                assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()), "{i} {ch}: {x} {y}");
            }
        }
    }

    #[test]
    fn unstable_loop_flagged() {
        let r = step_response(&double_integrator(), &irc(0.5), SimulationConfig::new(Wiring::default(), 20.0, 0.01))
            .unwrap();
        assert!(!r.hurwitz);
        assert!(r.diverged);
    }

    #[test]
    fn input_disturbance_wiring_equilibrium() {
        let lp = driven_loop(&double_integrator(), &irc(2.0), Wiring::InputDisturbance).unwrap();
        let (_, y) = lp.equilibrium(1.0).unwrap();
        let r = step_response(
            &double_integrator(),
            &irc(2.0),
            SimulationConfig::new(Wiring::InputDisturbance, 150.0, 0.01),
        )
        .unwrap();
        assert!((r.theta().last().unwrap() - y[0]).abs() < 1e-6);
    }

    #[test]
    fn ill_posed_loop_rejected() {
        let g = ss(&[-1.0], &[1.0], &[1.0], &[1.0], 1, 1);
        let k = ss(&[-1.0], &[1.0], &[1.0], &[1.0], 1, 1);
        assert!(matches!(driven_loop(&g, &k, Wiring::default()), Err(Error::IllPosed)));
    }

    #[test]
    fn rejects_bad_timestep() {
        let cfg = SimulationConfig::new(Wiring::default(), 1.0, 0.0);
        assert!(step_response(&double_integrator(), &irc(2.0), cfg).is_err());
    }
}
