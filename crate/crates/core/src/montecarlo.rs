//! Random NI plants and SNI controllers for checking the stability dispatch
//! against the closed-loop eigenvalues.
//!
//! Plants are drawn in modal form, which makes them NI by construction:
//! symmetric PSD mode coefficients, a PSD `G2`, and a `G1 = C2 R C2^T` with
//! `R` symmetric positive definite. Controllers are integral resonant
//! controllers with a random DC gain.

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use nalgebra::DMatrix;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::irc::IrcController;
use crate::lti::{ModalModel, Mode, StateSpaceModel};
use crate::verdict::{stability_verdict, Outcome, StabilityVerdict, VerdictOptions};
use crate::Result;

/// Origin content of a generated plant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FreeBodyKind {
    /// No poles at the origin.
    None,
    /// `G2 > 0`, `G1 = 0`.
    DoubleFullRank,
    /// Rank-deficient `G2`, `G1 = 0`, modes confined to `range(G2)`.
    DoubleAligned,
    /// Rank-deficient `G2`, `G1 = 0`, unrestricted modes.
    DoubleGeneral,
    /// `G2 != 0` and `G1 != 0`.
    Mixed,
    /// `G1 > 0`, `G2 = 0`.
    SingleFullRank,
    /// Rank-deficient `G1`, `G2 = 0`, modes confined to `range(G1)`.
    SingleAligned,
    /// Rank-deficient `G1`, `G2 = 0`, unrestricted modes.
    SingleGeneral,
}

impl FreeBodyKind {
    pub const ALL: [FreeBodyKind; 8] = [
        FreeBodyKind::None,
        FreeBodyKind::DoubleFullRank,
        FreeBodyKind::DoubleAligned,
        FreeBodyKind::DoubleGeneral,
        FreeBodyKind::Mixed,
        FreeBodyKind::SingleFullRank,
        FreeBodyKind::SingleAligned,
        FreeBodyKind::SingleGeneral,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FreeBodyKind::None => "none",
            FreeBodyKind::DoubleFullRank => "double_full_rank",
            FreeBodyKind::DoubleAligned => "double_aligned",
            FreeBodyKind::DoubleGeneral => "double_general",
            FreeBodyKind::Mixed => "mixed",
            FreeBodyKind::SingleFullRank => "single_full_rank",
            FreeBodyKind::SingleAligned => "single_aligned",
            FreeBodyKind::SingleGeneral => "single_general",
        }
    }

    fn needs_rank_deficiency(self) -> bool {
        matches!(
            self,
            FreeBodyKind::DoubleAligned
                | FreeBodyKind::DoubleGeneral
                | FreeBodyKind::SingleAligned
                | FreeBodyKind::SingleGeneral
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorSpec {
    /// Kinds cycled through in order, one per trial.
    pub kinds: Vec<FreeBodyKind>,
    pub max_ports: usize,
    pub max_modes: usize,
    pub freq_range: (f64, f64),
    /// Probability that a mode is damped, and the largest damping ratio.
    pub damping_probability: f64,
    pub max_damping: f64,
    /// Range of the eigenvalues of the controller DC gain `Gbar(0)`.
    pub controller_dc_range: (f64, f64),
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        Self {
            kinds: FreeBodyKind::ALL.to_vec(),
            max_ports: 3,
            max_modes: 3,
            freq_range: (0.5, 5.0),
            damping_probability: 0.3,
            max_damping: 0.2,
            controller_dc_range: (-3.0, 1.0),
        }
    }
}

fn uniform_matrix(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.gen_range(-1.0..1.0))
}

/// Random orthonormal `m x m` matrix.
fn orthogonal(rng: &mut ChaCha8Rng, m: usize) -> DMatrix<f64> {
    loop {
        let a = uniform_matrix(rng, m, m);
        if a.determinant().abs() > 1e-2 {
            return a.qr().q();
        }
    }
}

/// `P M P^T` for a random PSD `M` of rank `rank`, where `P` (m x k) has
/// orthonormal columns.
fn psd_in(rng: &mut ChaCha8Rng, p: &DMatrix<f64>, rank: usize, floor: f64) -> DMatrix<f64> {
    let k = p.ncols();
    let l = uniform_matrix(rng, k, rank);
    let mut core = &l * l.transpose();
    if rank == k {
        core += DMatrix::identity(k, k) * floor;
    }
    p * core * p.transpose()
}

/// One random plant of the requested kind.
pub fn random_plant(rng: &mut ChaCha8Rng, kind: FreeBodyKind, spec: &GeneratorSpec) -> ModalModel {
    let min_ports = if kind.needs_rank_deficiency() { 2 } else { 1 };
    let m = rng.gen_range(min_ports..=spec.max_ports.max(min_ports));
    let q = orthogonal(rng, m);
    let full = q.clone();
    // origin coefficient with rank r < m in the deficient kinds
    let r = if kind.needs_rank_deficiency() { rng.gen_range(1..m) } else { m };
    let sub = q.columns(0, r).into_owned();
    let origin_full = psd_in(rng, &full, m, 0.2);
    let origin_sub = psd_in(rng, &sub, r, 0.2);

    let mut mm = ModalModel::new(m);
    let mode_space = match kind {
        FreeBodyKind::DoubleAligned | FreeBodyKind::SingleAligned => sub.clone(),
        _ => full.clone(),
    };
    match kind {
        FreeBodyKind::None => {}
        FreeBodyKind::DoubleFullRank => mm.g2 = Some(origin_full),
        FreeBodyKind::DoubleAligned | FreeBodyKind::DoubleGeneral => mm.g2 = Some(origin_sub),
        FreeBodyKind::Mixed => {
            let r2 = rng.gen_range(1..=m);
            let r1 = rng.gen_range(1..=m);
            let q2 = orthogonal(rng, m);
            mm.g2 = Some(psd_in(rng, &q.columns(0, r2).into_owned(), r2, 0.2));
            mm.g1 = Some(psd_in(rng, &q2.columns(0, r1).into_owned(), r1, 0.2));
        }
        FreeBodyKind::SingleFullRank => mm.g1 = Some(origin_full),
        FreeBodyKind::SingleAligned | FreeBodyKind::SingleGeneral => mm.g1 = Some(origin_sub),
    }

    let n_modes = rng.gen_range(1..=spec.max_modes.max(1));
    let mut freqs: Vec<f64> = (0..n_modes).map(|_| rng.gen_range(spec.freq_range.0..spec.freq_range.1)).collect();
    freqs.sort_by(f64::total_cmp);
    freqs.dedup_by(|a, b| (*a - *b).abs() < 1e-3);
    for p in freqs {
        let k = mode_space.ncols();
        let rank = rng.gen_range(1..=k);
        let coeff = psd_in(rng, &mode_space, rank, 0.1);
        let damping = if rng.gen_bool(spec.damping_probability) { rng.gen_range(0.01..spec.max_damping) } else { 0.0 };
        mm.modes.push(Mode { frequency: p, coefficient: coeff, damping });
    }
    mm
}

/// Random IRC with `Gbar(0)` eigenvalues drawn from `controller_dc_range`.
pub fn random_controller(rng: &mut ChaCha8Rng, m: usize, spec: &GeneratorSpec) -> Result<IrcController> {
    let pd = |rng: &mut ChaCha8Rng| {
        let a = uniform_matrix(rng, m, m);
        &a * a.transpose() + DMatrix::identity(m, m) * rng.gen_range(0.2..2.0)
    };
    let gamma = pd(rng) * rng.gen_range(0.5..5.0);
    let phi = pd(rng);
    let q = orthogonal(rng, m);
    let (lo, hi) = spec.controller_dc_range;
    let eig = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(m, |_, _| rng.gen_range(lo..hi)));
    let target = &q * eig * q.transpose();
    IrcController::with_dc_gain(&gamma, &phi, &target)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trial {
    pub index: usize,
    pub kind: FreeBodyKind,
    pub plant: StateSpaceModel,
    pub controller: IrcController,
    pub verdict: StabilityVerdict,
}

/// Deterministic RNG for trial `index` of a run seeded with `seed`.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Generates and evaluates trial `index`.
pub fn run_trial(seed: u64, index: usize, spec: &GeneratorSpec, opts: &VerdictOptions) -> Result<Trial> {
    let kinds = if spec.kinds.is_empty() { FreeBodyKind::ALL.to_vec() } else { spec.kinds.clone() };
    let kind = kinds[index % kinds.len()];
    let mut rng = trial_rng(seed, index);
    let plant = random_plant(&mut rng, kind, spec).to_state_space()?;
    let controller = random_controller(&mut rng, plant.ports(), spec)?;
    let verdict = stability_verdict(&plant, &controller.realization, opts);
    Ok(Trial { index, kind, plant, controller, verdict })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Counterexample {
    pub index: usize,
    pub kind: FreeBodyKind,
    pub criterion: Option<&'static str>,
    pub outcome: Outcome,
    pub spectral_abscissa: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgreementReport {
    pub count: usize,
    pub seed: u64,
    /// Trials with a Stable/Unstable verdict and a non-boundary oracle.
    pub applicable: usize,
    pub agreed: usize,
    pub boundary: usize,
    pub inconclusive: usize,
    pub precondition_failed: usize,
    pub generation_errors: usize,
    pub stable: usize,
    pub unstable: usize,
    pub by_criterion: BTreeMap<String, usize>,
    pub by_kind: BTreeMap<String, usize>,
    pub counterexamples: Vec<Counterexample>,
}

impl AgreementReport {
    /// Fraction of applicable trials on which verdict and oracle agree
    /// (1 when none are applicable).
    pub fn agreement(&self) -> f64 {
        if self.applicable == 0 {
            1.0
        } else {
            self.agreed as f64 / self.applicable as f64
        }
    }
}

/// Runs `count` random trials and compares every decisive verdict with the
/// closed-loop eigenvalue oracle.
pub fn montecarlo_agreement(count: usize, seed: u64, spec: &GeneratorSpec) -> AgreementReport {
    let opts = VerdictOptions::default();
    let mut report = AgreementReport { count, seed, ..Default::default() };
    for index in 0..count {
        let trial = match run_trial(seed, index, spec, &opts) {
            Ok(t) => t,
            Err(e) => {
                report.generation_errors += 1;
                report.counterexamples.push(Counterexample {
                    index,
                    kind: spec.kinds.get(index % spec.kinds.len().max(1)).copied().unwrap_or(FreeBodyKind::None),
                    criterion: None,
                    outcome: Outcome::PreconditionFailed,
                    spectral_abscissa: f64::NAN,
                    note: format!("generation failed: {e}"),
                });
                continue;
            }
        };
        *report.by_kind.entry(trial.kind.name().into()).or_default() += 1;
        let v = &trial.verdict;
        if let Some(c) = v.criterion {
            *report.by_criterion.entry(c.name().into()).or_default() += 1;
        }
        match v.outcome {
            Outcome::Boundary => report.boundary += 1,
            Outcome::Inconclusive => report.inconclusive += 1,
            Outcome::PreconditionFailed => {
                report.precondition_failed += 1;
                report.counterexamples.push(Counterexample {
                    index,
                    kind: trial.kind,
                    criterion: None,
                    outcome: v.outcome,
                    spectral_abscissa: f64::NAN,
                    note: v.reason.clone().unwrap_or_default(),
                });
            }
            Outcome::Stable | Outcome::Unstable => {
                if v.outcome == Outcome::Stable {
                    report.stable += 1;
                } else {
                    report.unstable += 1;
                }
                match v.oracle_agrees {
                    None => report.boundary += 1,
                    Some(agrees) => {
                        report.applicable += 1;
                        if agrees {
                            report.agreed += 1;
                        } else {
                            report.counterexamples.push(Counterexample {
                                index,
                                kind: trial.kind,
                                criterion: v.criterion.map(|c| c.name()),
                                outcome: v.outcome,
                                spectral_abscissa: v.oracle.map_or(f64::NAN, |o| o.spectral_abscissa),
                                note: String::from("verdict disagrees with closed-loop eigenvalues"),
                            });
                        }
                    }
                }
            }
        }
    }
    report
}

/// Kinds covering the `G1 = G2 = 0` case only.
pub fn dc_gain_only() -> GeneratorSpec {
    GeneratorSpec { kinds: vec![FreeBodyKind::None], ..GeneratorSpec::default() }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_run_is_vacuously_perfect() {
        let r = montecarlo_agreement(0, 42, &GeneratorSpec::default());
        assert_eq!(r.applicable, 0);
        assert_eq!(r.agreement(), 1.0);
    }

    #[test]
    fn trials_are_reproducible() {
        let spec = GeneratorSpec::default();
        let opts = VerdictOptions { run_oracle: false, check_preconditions: false, ..Default::default() };
        let a = run_trial(7, 3, &spec, &opts).unwrap();
        let b = run_trial(7, 3, &spec, &opts).unwrap();
        assert_eq!(a.plant, b.plant);
        assert_eq!(a.controller, b.controller);
    }

    #[test]
    fn small_run_agrees() {
        let r = montecarlo_agreement(16, 1, &GeneratorSpec::default());
        assert!(r.counterexamples.is_empty(), "{:#?}", r.counterexamples);
        assert_eq!(r.agreement(), 1.0);
    }
}
