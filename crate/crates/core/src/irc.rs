//! Integral resonant controllers `Gbar(s) = (sI + Gamma Phi)^{-1} Gamma - Delta`.
//!
//! With `Gamma > 0`, `Phi > 0` and `Delta` symmetric the controller is SNI.

use alloc::string::ToString;

use nalgebra::DMatrix;

use crate::linalg::{self, DefinitenessKind};
use crate::lti::StateSpaceModel;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct IrcController {
    pub gamma: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub delta: DMatrix<f64>,
    pub realization: StateSpaceModel,
}

fn require_pd(m: &DMatrix<f64>, name: &str) -> Result<DMatrix<f64>> {
    let sym = linalg::symmetrize(m)?;
    let d = linalg::definiteness(&sym)?;
    if d.kind != DefinitenessKind::PositiveDefinite {
        return Err(Error::NotPd { name: name.to_string(), min_eig: d.min_eig });
    }
    Ok(sym)
}

/// Builds the controller with realization `(A, B, C, D) = (-Gamma Phi, Gamma, I, -Delta)`.
pub fn make_irc(gamma: &DMatrix<f64>, phi: &DMatrix<f64>, delta: &DMatrix<f64>) -> Result<IrcController> {
    let m = gamma.nrows();
    for (x, name) in [(gamma, "Gamma"), (phi, "Phi"), (delta, "Delta")] {
        if x.shape() != (m, m) {
            return Err(Error::DimensionMismatch(alloc::format!("{name} must be {m}x{m}")));
        }
    }
    let gamma = require_pd(gamma, "Gamma")?;
    let phi = require_pd(phi, "Phi")?;
    let delta = linalg::symmetrize(delta)?;
    let realization = StateSpaceModel::new(-(&gamma * &phi), gamma.clone(), DMatrix::identity(m, m), -delta.clone())?;
    Ok(IrcController { gamma, phi, delta, realization })
}

impl IrcController {
    /// `Gbar(0) = Phi^{-1} - Delta`.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        let phi_inv =
            linalg::try_inverse(&self.phi).ok_or_else(|| Error::NumericalBreakdown("Phi is singular".into()))?;
        Ok(phi_inv - &self.delta)
    }

    /// Controller with `Delta` chosen so that `Gbar(0) = target`.
    pub fn with_dc_gain(gamma: &DMatrix<f64>, phi: &DMatrix<f64>, target: &DMatrix<f64>) -> Result<Self> {
        let phi_inv = linalg::try_inverse(phi).ok_or_else(|| Error::NotPd { name: "Phi".to_string(), min_eig: 0.0 })?;
        make_irc(gamma, phi, &(phi_inv - target))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ni::{classify_sni, FrequencyGrid};
    use approx::assert_relative_eq;
    use nalgebra::Complex;
    use proptest::prelude::*;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    #[test]
    fn scalar_irc() {
        let k = make_irc(&mat(1, 1, &[1.0]), &mat(1, 1, &[1.0]), &mat(1, 1, &[2.0])).unwrap();
        assert_eq!(k.dc_gain().unwrap()[(0, 0)], -1.0);
        let s = Complex::new(0.5, 2.0);
        let want = Complex::new(1.0, 0.0) / (s + 1.0) - 2.0;
        assert!((k.realization.eval_tf(s).unwrap()[(0, 0)] - want).norm() < 1e-14);
    }

    #[test]
    fn indefinite_gamma_rejected() {
        let r = make_irc(&mat(2, 2, &[1.0, 2.0, 2.0, 1.0]), &DMatrix::identity(2, 2), &DMatrix::zeros(2, 2));
        match r {
            Err(Error::NotPd { name, .. }) => assert_eq!(name, "Gamma"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn asymmetric_delta_rejected() {
        let r = make_irc(&DMatrix::identity(2, 2), &DMatrix::identity(2, 2), &mat(2, 2, &[1.0, 0.5, 0.0, 1.0]));
        assert!(matches!(r, Err(Error::NonSymmetric { .. })));
    }

    #[test]
    fn dc_gain_target_round_trip() {
        let target = mat(2, 2, &[-1.0, 0.2, 0.2, -0.5]);
        let k =
            IrcController::with_dc_gain(&DMatrix::identity(2, 2), &mat(2, 2, &[2.0, 0.1, 0.1, 1.0]), &target).unwrap();
        assert_relative_eq!(k.realization.dc_gain().unwrap(), target, epsilon = 1e-12);
    }

    fn pd_strategy(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        (proptest::collection::vec(-1.0f64..1.0, m * m), 0.05f64..2.0).prop_map(move |(v, shift)| {
            let a = DMatrix::from_vec(m, m, v);
            &a * a.transpose() + DMatrix::identity(m, m) * shift
        })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]
        #[test]
        fn valid_parameters_give_sni_controllers(
            gamma in pd_strategy(2),
            phi in pd_strategy(2),
            dv in proptest::collection::vec(-3.0f64..3.0, 4),
        ) {
            let d = DMatrix::from_vec(2, 2, dv);
            let delta = (&d + d.transpose()) * 0.5;
            let k = make_irc(&gamma, &phi, &delta).unwrap();
            let report = classify_sni(&k.realization, &FrequencyGrid::default());
            prop_assert!(report.is_sni, "{:?}", report.reason);
            let dc = k.realization.dc_gain().unwrap();
            prop_assert!(linalg::norm2(&(dc - k.dc_gain().unwrap())) <= 1e-10 * (1.0 + linalg::norm2(&k.dc_gain().unwrap())));
        }
    }
}
