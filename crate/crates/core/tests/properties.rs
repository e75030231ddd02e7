//! Randomized invariants of the free-body analysis on generated NI plants.

use ni_freebody::freebody::{self, laurent_coefficients};
use ni_freebody::linalg::{self, norm2};
use ni_freebody::montecarlo::{self, FreeBodyKind, GeneratorSpec};
use ni_freebody::ni::{classify_ni, classify_sni, FrequencyGrid};
use ni_freebody::verdict::{stability_verdict, Outcome, VerdictOptions};
use ni_freebody::DMatrix;
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

fn well_conditioned(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
    loop {
        let t = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0)) + DMatrix::identity(n, n) * 1.5;
        if linalg::reciprocal_condition(&t) > 0.05 {
            return t;
        }
    }
}

fn gauge_width(l: &freebody::LaurentCoefficients) -> usize {
    let zero = 1e-8 * (1.0 + norm2(&l.g0));
    match (norm2(&l.g2) <= zero, norm2(&l.g1) <= zero) {
        (true, true) => 0,
        (false, true) => linalg::numerical_rank(&l.g2, 1e-9),
        (true, false) => linalg::numerical_rank(&l.g1, 1e-9),
        (false, false) => freebody::build_f_matrix(l).unwrap().ncols(),
    }
}

fn kind() -> impl Strategy<Value = FreeBodyKind> {
    proptest::sample::select(FreeBodyKind::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn generated_plants_are_ni_and_controllers_sni(seed in any::<u64>(), kind in kind()) {
        let spec = GeneratorSpec::default();
        let mut rng = montecarlo::trial_rng(seed, 0);
        let plant = montecarlo::random_plant(&mut rng, kind, &spec).to_state_space().unwrap();
        let report = classify_ni(&plant, &FrequencyGrid::default()).unwrap();
        prop_assert!(report.is_ni, "{:?}: {:?}", kind, report.reason);
        let ctrl = montecarlo::random_controller(&mut rng, plant.ports(), &spec).unwrap();
        let sni = classify_sni(&ctrl.realization, &FrequencyGrid::default());
        prop_assert!(sni.is_sni, "{:?}", sni.reason);
    }

    #[test]
    fn realization_and_contour_laurent_agree(seed in any::<u64>(), kind in kind()) {
        let mut rng = montecarlo::trial_rng(seed, 1);
        let plant = montecarlo::random_plant(&mut rng, kind, &GeneratorSpec::default()).to_state_space().unwrap();
        let (_, _, d) = freebody::laurent_cross_checked(&plant).unwrap();
        prop_assert!(d <= 1e-6, "relative difference {d:e}");
    }

    #[test]
    fn similarity_preserves_laurent_and_verdict(seed in any::<u64>(), index in 0usize..8) {
        let spec = GeneratorSpec::default();
        let trial = montecarlo::run_trial(seed, index, &spec, &VerdictOptions::default()).unwrap();
        prop_assume!(trial.verdict.outcome != Outcome::PreconditionFailed);
        let mut rng = montecarlo::trial_rng(seed ^ 0x5a5a, index);
        let t = well_conditioned(&mut rng, trial.plant.states());
        let moved = trial.plant.similarity(&t).unwrap();
        let a = laurent_coefficients(&trial.plant).unwrap();
        let b = laurent_coefficients(&moved).unwrap();
        prop_assert!(a.relative_difference(&b) <= 1e-7);
        let v = stability_verdict(&moved, &trial.controller.realization, &VerdictOptions::default());
        prop_assert_eq!(v.outcome, trial.verdict.outcome);
    }

    #[test]
    fn subspace_gauge_leaves_verdict_unchanged(seed in any::<u64>(), index in 0usize..8) {
        let spec = GeneratorSpec::default();
        let trial = montecarlo::run_trial(seed, index, &spec, &VerdictOptions::default()).unwrap();
        prop_assume!(trial.verdict.outcome != Outcome::PreconditionFailed);
        let width = gauge_width(&laurent_coefficients(&trial.plant).unwrap());
        prop_assume!(width > 0);
        let mut rng = montecarlo::trial_rng(seed ^ 0xa5a5, index);
        let opts = VerdictOptions { gauge: Some(well_conditioned(&mut rng, width)), ..VerdictOptions::default() };
        let v = stability_verdict(&trial.plant, &trial.controller.realization, &opts);
        prop_assert_eq!(v.outcome, trial.verdict.outcome);
    }

    #[test]
    fn conclusive_verdicts_match_eigenvalue_oracle(seed in any::<u64>(), index in 0usize..8) {
        let trial = montecarlo::run_trial(seed, index, &GeneratorSpec::default(), &VerdictOptions::default()).unwrap();
        if let Some(agrees) = trial.verdict.oracle_agrees {
            prop_assert!(agrees, "{:?} {:?}", trial.kind, trial.verdict.reason);
        }
    }

    #[test]
    fn projector_annihilates_y(seed in any::<u64>()) {
        let mut rng = montecarlo::trial_rng(seed, 2);
        let n = rng.gen_range(2..=5);
        let k = rng.gen_range(1..n);
        let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
        let x = (&a + a.transpose()) * 0.5;
        let y = DMatrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0));
        prop_assume!(linalg::reciprocal_condition(&(y.transpose() * &x * &y)) >= 1e-3);
        let p = freebody::projector_p(&x, &y).unwrap();
        prop_assert!(norm2(&(&p * &y)) <= 1e-10 * norm2(&x).max(1.0));
        prop_assert!(norm2(&(&p - p.transpose())) <= 1e-10 * norm2(&x).max(1.0));
    }
}
