//! Internal stability of the positive-feedback loop between an NI plant `G`
//! (possibly with free-body poles at the origin) and an SNI controller
//! `Gbar`, decided from the Laurent coefficients of `G` and the DC gain
//! `Gbar(0)`, and checked against the closed-loop eigenvalues.
//!
//! Dispatch on the plant's origin content:
//!
//! | `G2` | `G1` | criterion |
//! |------|------|-----------|
//! | 0 | 0 | [`Criterion::DcGain`]: `lambda_max(G(0) Gbar(0)) < 1` |
//! | PD | 0 | [`Criterion::FullRankFreeBody`]: `Gbar(0) < 0` |
//! | nonzero | 0 | [`Criterion::DoubleIntegratorAligned`] when `N(G2) ⊆ N(G0^T)`, else [`Criterion::DoubleIntegrator`] |
//! | nonzero | nonzero | [`Criterion::HankelSubspace`] |
//! | 0 | invertible | [`Criterion::FullRankFreeBody`] |
//! | 0 | nonzero | [`Criterion::SingleIntegratorAligned`] when `N(G1^T) ⊆ N(G0^T)`, else [`Criterion::SingleIntegrator`] |
//!
//! The non-aligned criteria need the projected matrix `N = P(Gbar(0), Y)` to
//! be positive or negative semidefinite; an indefinite `N` gives
//! [`Outcome::Inconclusive`].

use alloc::collections::BTreeMap;
use alloc::format;
use alloc::string::{String, ToString};

use nalgebra::DMatrix;

use crate::freebody::{self, LaurentCoefficients};
use crate::linalg::{self, norm2, DefinitenessKind};
use crate::lti::{self, StateSpaceModel};
use crate::ni::{self, FrequencyGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Stable,
    Unstable,
    Inconclusive,
    PreconditionFailed,
    Boundary,
}

/// Which stability test the dispatch applied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Criterion {
    /// No poles at the origin: `lambda_max(G(0) Gbar(0)) < 1`.
    DcGain,
    /// Double and single poles at the origin; subspace `F` from the Hankel
    /// matrix `[[G1, G2], [G2, 0]]`.
    HankelSubspace,
    /// Double poles only (`G1 = 0`), `Y = J` with `G2 = J J^T`.
    DoubleIntegrator,
    /// Double poles only with `N(G2) ⊆ N(G0^T)`: `J^T Gbar(0) J < 0` alone.
    DoubleIntegratorAligned,
    /// Single poles only (`G2 = 0`), `Y = F1` from the thin SVD of `G1`.
    SingleIntegrator,
    /// Single poles only with `N(G1^T) ⊆ N(G0^T)`: `F1^T Gbar(0) F1 < 0` alone.
    SingleIntegratorAligned,
    /// `G2 > 0` (with `G1 = 0`) or `G1` invertible (with `G2 = 0`): `Gbar(0) < 0`.
    FullRankFreeBody,
}

impl Criterion {
    pub fn name(self) -> &'static str {
        match self {
            Criterion::DcGain => "dc_gain",
            Criterion::HankelSubspace => "hankel_subspace",
            Criterion::DoubleIntegrator => "double_integrator",
            Criterion::DoubleIntegratorAligned => "double_integrator_aligned",
            Criterion::SingleIntegrator => "single_integrator",
            Criterion::SingleIntegratorAligned => "single_integrator_aligned",
            Criterion::FullRankFreeBody => "full_rank_free_body",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Psd,
    Nsd,
    NullspaceShortcut,
    Invertible,
    None,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::Psd => "psd",
            Branch::Nsd => "nsd",
            Branch::NullspaceShortcut => "nullspace_shortcut",
            Branch::Invertible => "invertible",
            Branch::None => "none",
        }
    }
}

impl Outcome {
    pub fn name(self) -> &'static str {
        match self {
            Outcome::Stable => "stable",
            Outcome::Unstable => "unstable",
            Outcome::Inconclusive => "inconclusive",
            Outcome::PreconditionFailed => "precondition_failed",
            Outcome::Boundary => "boundary",
        }
    }
}

/// Thresholds used by the dispatch and the oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// `||Gi|| <= zero_rel * (1 + ||G0||)` counts as `Gi = 0`.
    pub zero_rel: f64,
    /// Strict inequalities met by less than this (relative) margin give
    /// [`Outcome::Boundary`].
    pub boundary_rel: f64,
    /// Closed-loop eigenvalues need real part below `-hurwitz_margin`.
    pub hurwitz_margin: f64,
    /// Relative tolerance of the null-space containment tests.
    pub nullspace_rel: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { zero_rel: 1e-8, boundary_rel: 1e-7, hurwitz_margin: lti::HURWITZ_MARGIN, nullspace_rel: 1e-7 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerdictOptions {
    pub tolerances: Tolerances,
    pub grid: FrequencyGrid,
    /// Run the NI / SNI classifications before dispatching.
    pub check_preconditions: bool,
    /// Compare against the closed-loop eigenvalues.
    pub run_oracle: bool,
    /// Use the Hankel-subspace test even when `G1 = 0`.
    pub prefer_hankel: bool,
    /// Right factor applied to the subspace matrix (`J`, `F` or `F1`); any
    /// invertible matrix of matching size leaves the verdict unchanged.
    pub gauge: Option<DMatrix<f64>>,
}

impl Default for VerdictOptions {
    fn default() -> Self {
        Self {
            tolerances: Tolerances::default(),
            grid: FrequencyGrid::default(),
            check_preconditions: true,
            run_oracle: true,
            prefer_hankel: false,
            gauge: None,
        }
    }
}

/// Closed-loop eigenvalue check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleResult {
    pub spectral_abscissa: f64,
    pub stable: bool,
    /// Abscissa within the Hurwitz margin of zero.
    pub boundary: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StabilityVerdict {
    pub outcome: Outcome,
    pub criterion: Option<Criterion>,
    pub branch: Branch,
    pub condition_values: BTreeMap<String, f64>,
    pub reason: Option<String>,
    pub oracle: Option<OracleResult>,
    /// `Some` when the oracle ran and the outcome is `Stable` or `Unstable`.
    pub oracle_agrees: Option<bool>,
    pub tolerances: Tolerances,
    pub laurent: Option<LaurentCoefficients>,
}

impl StabilityVerdict {
    fn failed(reason: String, tolerances: Tolerances) -> Self {
        Self {
            outcome: Outcome::PreconditionFailed,
            criterion: None,
            branch: Branch::None,
            condition_values: BTreeMap::new(),
            reason: Some(reason),
            oracle: None,
            oracle_agrees: None,
            tolerances,
            laurent: None,
        }
    }

    pub fn value(&self, key: &str) -> Option<f64> {
        self.condition_values.get(key).copied()
    }
}

/// Internal stability straight from the closed-loop state matrix.
pub fn direct_stability(g: &StateSpaceModel, gbar: &StateSpaceModel, margin: f64) -> Result<bool> {
    Ok(lti::is_hurwitz(&lti::closed_loop(g, gbar)?.a, margin))
}

/// Closed-loop spectral abscissa with the boundary band applied.
pub fn oracle(g: &StateSpaceModel, gbar: &StateSpaceModel, margin: f64) -> Result<OracleResult> {
    let a = lti::closed_loop(g, gbar)?.a;
    let alpha = lti::spectral_abscissa(&a);
    Ok(OracleResult { spectral_abscissa: alpha, stable: alpha < -margin, boundary: alpha.abs() <= margin })
}

/// Strict inequality `value < 0` with a boundary band.
#[derive(Clone, Copy, PartialEq, Eq)]
enum Sign {
    Holds,
    Fails,
    Boundary,
}

fn strictly_negative(value: f64, scale: f64, rel: f64) -> Sign {
    if value.abs() <= rel * scale.max(1e-300) {
        Sign::Boundary
    } else if value < 0.0 {
        Sign::Holds
    } else {
        Sign::Fails
    }
}

fn sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

fn max_eig(m: &DMatrix<f64>) -> f64 {
    linalg::sym_eigen_sorted(&sym(m)).0.last().copied().unwrap_or(f64::NEG_INFINITY)
}

fn min_eig(m: &DMatrix<f64>) -> f64 {
    linalg::sym_eigen_sorted(&sym(m)).0.first().copied().unwrap_or(f64::INFINITY)
}

struct Dispatch {
    outcome: Outcome,
    criterion: Criterion,
    branch: Branch,
    reason: Option<String>,
}

fn combine(signs: &[Sign]) -> Outcome {
    if signs.contains(&Sign::Boundary) {
        Outcome::Boundary
    } else if signs.iter().all(|s| *s == Sign::Holds) {
        Outcome::Stable
    } else {
        Outcome::Unstable
    }
}

/// Applies the stability dispatch to the plant's Laurent coefficients and
/// the controller DC gain.
pub fn verdict_from_laurent(l: &LaurentCoefficients, gbar0: &DMatrix<f64>, opts: &VerdictOptions) -> StabilityVerdict {
    let tol = opts.tolerances;
    let mut values = BTreeMap::new();
    let d = match dispatch(l, gbar0, opts, &mut values) {
        Ok(d) => d,
        Err(e) => {
            let mut v = StabilityVerdict::failed(e.to_string(), tol);
            v.condition_values = values;
            v.laurent = Some(l.clone());
            return v;
        }
    };
    StabilityVerdict {
        outcome: d.outcome,
        criterion: Some(d.criterion),
        branch: d.branch,
        condition_values: values,
        reason: d.reason,
        oracle: None,
        oracle_agrees: None,
        tolerances: tol,
        laurent: Some(l.clone()),
    }
}

fn apply_gauge(y: DMatrix<f64>, gauge: &Option<DMatrix<f64>>) -> DMatrix<f64> {
    match gauge {
        Some(r) if r.nrows() == y.ncols() && r.ncols() == y.ncols() => y * r,
        _ => y,
    }
}

fn dispatch(
    l: &LaurentCoefficients,
    gbar0: &DMatrix<f64>,
    opts: &VerdictOptions,
    values: &mut BTreeMap<String, f64>,
) -> Result<Dispatch> {
    let tol = opts.tolerances;
    let m = l.g0.nrows();
    if gbar0.shape() != (m, m) {
        return Err(Error::DimensionMismatch(format!("controller DC gain must be {m}x{m}")));
    }
    let n0 = norm2(&l.g0);
    let n1 = norm2(&l.g1);
    let n2 = norm2(&l.g2);
    let nbar = norm2(gbar0);
    let zero = tol.zero_rel * (1.0 + n0);
    values.insert("g0_norm".into(), n0);
    values.insert("g1_norm".into(), n1);
    values.insert("g2_norm".into(), n2);
    values.insert("zero_threshold".into(), zero);
    let g2_zero = n2 <= zero;
    let g1_zero = n1 <= zero;

    if g2_zero && g1_zero {
        let prod = &l.g0 * gbar0;
        let lam = lti::eigenvalues(&prod).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max);
        values.insert("dc_gain_lambda_max".into(), lam);
        let s = strictly_negative(lam - 1.0, 1.0 + n0 * nbar, tol.boundary_rel);
        return Ok(Dispatch {
            outcome: combine(&[s]),
            criterion: Criterion::DcGain,
            branch: Branch::None,
            reason: None,
        });
    }

    let controller_negative = |values: &mut BTreeMap<String, f64>| {
        let e = max_eig(gbar0);
        values.insert("controller_dc_max_eig".into(), e);
        strictly_negative(e, nbar, tol.boundary_rel)
    };

    if !g2_zero && (g1_zero && !opts.prefer_hankel) {
        let g2 = linalg::symmetrize(&l.g2)?;
        let def = linalg::definiteness(&g2)?;
        values.insert("g2_min_eig".into(), def.min_eig);
        if def.kind == DefinitenessKind::PositiveDefinite {
            let s = controller_negative(values);
            return Ok(Dispatch {
                outcome: combine(&[s]),
                criterion: Criterion::FullRankFreeBody,
                branch: Branch::Invertible,
                reason: None,
            });
        }
        if !def.kind.is_psd() {
            return Err(Error::NotPsd { min_eig: def.min_eig });
        }
        let j = linalg::full_rank_factor(&g2)?.factor;
        let y = apply_gauge(j, &opts.gauge);
        if linalg::nullspace_contained(&l.g2, &l.g0.transpose(), tol.nullspace_rel)? {
            let s = subspace_gain(&y, gbar0, tol, values);
            return Ok(Dispatch {
                outcome: combine(&[s]),
                criterion: Criterion::DoubleIntegratorAligned,
                branch: Branch::NullspaceShortcut,
                reason: None,
            });
        }
        let extra = DMatrix::zeros(m, m);
        return projected_test(&y, gbar0, &l.g0, &extra, Criterion::DoubleIntegrator, tol, values);
    }

    if !g2_zero {
        let g2 = linalg::symmetrize(&l.g2)?;
        let j = linalg::full_rank_factor(&g2)?.factor;
        let f = freebody::build_f_matrix(l)?;
        values.insert("subspace_columns".into(), f.ncols() as f64);
        let y = apply_gauge(f, &opts.gauge);
        let jtj = j.transpose() * &j;
        let jtj_inv = linalg::try_inverse(&jtj).ok_or(Error::SingularInner)?;
        let extra = &l.g1 * &j * &jtj_inv * &jtj_inv * j.transpose() * l.g1.transpose();
        return projected_test(&y, gbar0, &l.g0, &extra, Criterion::HankelSubspace, tol, values);
    }

    // single poles only
    let rank = linalg::numerical_rank(&l.g1, freebody::HANKEL_RANK_REL_TOL);
    values.insert("g1_rank".into(), rank as f64);
    if rank == m {
        let s = controller_negative(values);
        return Ok(Dispatch {
            outcome: combine(&[s]),
            criterion: Criterion::FullRankFreeBody,
            branch: Branch::Invertible,
            reason: None,
        });
    }
    let f1 = apply_gauge(freebody::build_f1_matrix(&l.g1), &opts.gauge);
    if linalg::nullspace_contained(&l.g1.transpose(), &l.g0.transpose(), tol.nullspace_rel)? {
        let s = subspace_gain(&f1, gbar0, tol, values);
        return Ok(Dispatch {
            outcome: combine(&[s]),
            criterion: Criterion::SingleIntegratorAligned,
            branch: Branch::NullspaceShortcut,
            reason: None,
        });
    }
    let extra = DMatrix::zeros(m, m);
    projected_test(&f1, gbar0, &l.g0, &extra, Criterion::SingleIntegrator, tol, values)
}

/// `Y^T Gbar(0) Y < 0`.
fn subspace_gain(y: &DMatrix<f64>, gbar0: &DMatrix<f64>, tol: Tolerances, values: &mut BTreeMap<String, f64>) -> Sign {
    let q = y.transpose() * gbar0 * y;
    let e = max_eig(&q);
    values.insert("subspace_gain_max_eig".into(), e);
    strictly_negative(e, norm2(y) * norm2(y) * norm2(gbar0), tol.boundary_rel)
}

fn projected_test(
    y: &DMatrix<f64>,
    gbar0: &DMatrix<f64>,
    g0: &DMatrix<f64>,
    extra: &DMatrix<f64>,
    criterion: Criterion,
    tol: Tolerances,
    values: &mut BTreeMap<String, f64>,
) -> Result<Dispatch> {
    let m = g0.nrows();
    let q = y.transpose() * gbar0 * y;
    let scale = norm2(y) * norm2(y) * norm2(gbar0);
    let min_abs = linalg::sym_eigen_sorted(&sym(&q)).0.iter().map(|e| e.abs()).fold(f64::INFINITY, f64::min);
    values.insert("subspace_gain_min_abs_eig".into(), min_abs);
    let first = subspace_gain(y, gbar0, tol, values);
    if min_abs <= tol.boundary_rel * scale.max(1e-300) {
        return Ok(Dispatch {
            outcome: Outcome::Boundary,
            criterion,
            branch: Branch::None,
            reason: Some("Y^T Gbar(0) Y is numerically singular".into()),
        });
    }
    let n = freebody::projector_p(gbar0, y)?;
    let ntol = linalg::DEFINITENESS_REL_TOL * norm2(gbar0).max(1.0);
    let def = linalg::classify_definiteness(&n, ntol)?;
    values.insert("projector_min_eig".into(), def.min_eig);
    values.insert("projector_max_eig".into(), def.max_eig);
    let ident = DMatrix::<f64>::identity(m, m);
    match def.kind {
        k if k.is_psd() => {
            let root = linalg::psd_sqrt(&clip(&n, 1.0))?;
            let core = &ident - &root * (g0 + extra) * &root;
            let e = min_eig(&core);
            values.insert("dissipation_min_eig".into(), e);
            let second = strictly_negative(-e, 1.0 + norm2(&(&core - &ident)), tol.boundary_rel);
            Ok(Dispatch { outcome: combine(&[first, second]), criterion, branch: Branch::Psd, reason: None })
        }
        k if k.is_nsd() => {
            let root = linalg::psd_sqrt(&clip(&(-&n), 1.0))?;
            let core = &ident + &root * (g0 + extra) * &root;
            let det = core.determinant();
            let (_, sv, _) = linalg::svd_sorted(&core);
            let smin = sv.last().copied().unwrap_or(0.0);
            values.insert("nsd_det".into(), det);
            values.insert("nsd_min_singular_value".into(), smin);
            let second = if smin <= tol.boundary_rel * norm2(&core).max(1.0) { Sign::Boundary } else { Sign::Holds };
            Ok(Dispatch { outcome: combine(&[first, second]), criterion, branch: Branch::Nsd, reason: None })
        }
        _ => Ok(Dispatch {
            outcome: Outcome::Inconclusive,
            criterion,
            branch: Branch::None,
            reason: Some("projected matrix N is indefinite".into()),
        }),
    }
}

/// Drops the eigenvalues of the wrong sign (`sign = 1` keeps the nonnegative
/// part), which are round-off once the matrix is known to be semidefinite.
fn clip(m: &DMatrix<f64>, sign: f64) -> DMatrix<f64> {
    let (vals, vecs) = linalg::sym_eigen_sorted(&sym(m));
    let mut out = DMatrix::zeros(m.nrows(), m.ncols());
    for (i, v) in vals.iter().enumerate() {
        let v = (v * sign).max(0.0) * sign;
        let c = vecs.column(i);
        out += c * c.transpose() * v;
    }
    out
}

/// Full pipeline: preconditions, Laurent coefficients, dispatch and oracle.
pub fn stability_verdict(g: &StateSpaceModel, gbar: &StateSpaceModel, opts: &VerdictOptions) -> StabilityVerdict {
    let tol = opts.tolerances;
    if g.ports() != gbar.ports() {
        return StabilityVerdict::failed("plant and controller port counts differ".into(), tol);
    }
    if !g.is_strictly_proper() {
        return StabilityVerdict::failed("plant is not strictly proper".into(), tol);
    }
    if opts.check_preconditions {
        match ni::classify_ni(g, &opts.grid) {
            Ok(r) if r.is_ni => {}
            Ok(r) => {
                return StabilityVerdict::failed(format!("plant is not NI: {}", r.reason.unwrap_or_default()), tol)
            }
            Err(e) => return StabilityVerdict::failed(format!("plant is not NI: {e}"), tol),
        }
        let s = ni::classify_sni(gbar, &opts.grid);
        if !s.is_sni {
            return StabilityVerdict::failed(format!("controller is not SNI: {}", s.reason.unwrap_or_default()), tol);
        }
    }
    let l = match freebody::laurent_coefficients(g) {
        Ok(l) => l,
        Err(e) => return StabilityVerdict::failed(format!("Laurent coefficients: {e}"), tol),
    };
    let gbar0 = match gbar.dc_gain() {
        Ok(x) => x,
        Err(e) => return StabilityVerdict::failed(format!("controller DC gain: {e}"), tol),
    };
    let mut v = verdict_from_laurent(&l, &gbar0, opts);
    if opts.run_oracle {
        match oracle(g, gbar, tol.hurwitz_margin) {
            Ok(o) => {
                v.oracle = Some(o);
                v.oracle_agrees = match v.outcome {
                    Outcome::Stable if !o.boundary => Some(o.stable),
                    Outcome::Unstable if !o.boundary => Some(!o.stable),
                    _ => None,
                };
            }
            Err(e) => v.reason = Some(format!("oracle failed: {e}")),
        }
    }
    v
}
