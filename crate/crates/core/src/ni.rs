//! Negative-imaginary (NI) and strictly negative-imaginary (SNI)
//! classification of state-space models.
//!
//! The frequency-domain condition is checked on a finite grid, so a passing
//! report supports the property but cannot prove it; a failing report is a
//! genuine counterexample up to the stated tolerances.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};

use crate::freebody;
use crate::linalg::{self, norm2, Definiteness};
use crate::lti::{self, StateSpaceModel};
use crate::{CMatrix, Error, Result};

/// Condition-2 tolerance: `min eig >= -COND2_REL_TOL * (1 + ||G(jw)||)`.
pub const COND2_REL_TOL: f64 = 1e-7;
/// Strict positivity floor for SNI.
pub const SNI_FLOOR: f64 = 1e-9;
/// Accepted residue Hermitian defect relative to `||K||`.
pub const HERMITIAN_REL_TOL: f64 = 1e-6;
/// Eigenvalues within this relative distance of the imaginary axis are
/// treated as lying on it.
pub const AXIS_REL_TOL: f64 = 1e-8;
/// Eigenvalue cluster radius, relative to `max(1, |w0|)`.
pub const CLUSTER_REL_RADIUS: f64 = 1e-7;

/// Frequency sweep: log-spaced points plus points bracketing every
/// imaginary-axis pole, skipping a guard band around each pole.
#[derive(Debug, Clone, PartialEq)]
pub struct FrequencyGrid {
    pub w_min: f64,
    pub w_max: f64,
    pub points: usize,
    pub bracket_points: usize,
    pub guard_rel: f64,
}

impl Default for FrequencyGrid {
    fn default() -> Self {
        Self { w_min: 1e-3, w_max: 1e4, points: 400, bracket_points: 8, guard_rel: 1e-4 }
    }
}

impl FrequencyGrid {
    /// Sample frequencies for a model with imaginary-axis poles at `poles`.
    pub fn frequencies(&self, poles: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.points + poles.len() * self.bracket_points);
        let (lo, hi) = (libm::log10(self.w_min), libm::log10(self.w_max));
        for i in 0..self.points {
            let t = if self.points > 1 { i as f64 / (self.points - 1) as f64 } else { 0.0 };
            out.push(libm::pow(10.0, lo + t * (hi - lo)));
        }
        let half = self.bracket_points / 2;
        for &p in poles {
            for i in 0..half {
                let off = self.guard_rel * 2.0 * libm::pow(10.0, i as f64 * 3.0 / half.max(1) as f64);
                out.push(p * (1.0 - off));
                out.push(p * (1.0 + off));
            }
        }
        out.retain(|&w| w > 0.0 && poles.iter().all(|&p| (w - p).abs() > self.guard_rel * p));
        out.sort_by(f64::total_cmp);
        out.dedup();
        out
    }
}

/// `j (G - G^*)` evaluated at `s = j w`.
pub fn imaginary_part_matrix(g: &CMatrix) -> CMatrix {
    (g - g.adjoint()) * Complex::new(0.0, 1.0)
}

fn min_hermitian_eig(h: &CMatrix) -> f64 {
    let h = (h + h.adjoint()) * Complex::new(0.5, 0.0);
    linalg::hermitian_eigenvalues(&h).first().copied().unwrap_or(0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResidueRecord {
    pub omega: f64,
    pub residue: CMatrix,
    pub min_eig: f64,
    pub hermitian_defect: f64,
    pub ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NiReport {
    pub is_ni: bool,
    pub cond1_rhp_poles: Vec<Complex<f64>>,
    pub cond2_min_eig_by_freq: Vec<(f64, f64)>,
    pub cond2_ok: bool,
    pub cond3_residues: Vec<ResidueRecord>,
    pub cond3_ok: bool,
    pub cond4_g2: DMatrix<f64>,
    pub cond4_g2_definiteness: Option<Definiteness>,
    /// `lim s^k G(s) = 0` for every `k >= 3`.
    pub cond4_higher_order: bool,
    pub cond4_ok: bool,
    /// First failing condition, if any.
    pub reason: Option<String>,
}

impl NiReport {
    /// Smallest condition-2 eigenvalue over the sweep.
    pub fn cond2_min(&self) -> f64 {
        self.cond2_min_eig_by_freq.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SniReport {
    pub is_sni: bool,
    pub closed_rhp_poles: Vec<Complex<f64>>,
    pub cond2_min_eig_by_freq: Vec<(f64, f64)>,
    pub reason: Option<String>,
}

impl SniReport {
    pub fn cond2_min(&self) -> f64 {
        self.cond2_min_eig_by_freq.iter().map(|p| p.1).fold(f64::INFINITY, f64::min)
    }
}

fn axis_tol(a: &DMatrix<f64>) -> f64 {
    AXIS_REL_TOL * norm2(a).max(1.0)
}

/// Distinct positive frequencies of eigenvalues lying on the imaginary axis.
pub fn imaginary_axis_poles(model: &StateSpaceModel) -> Vec<f64> {
    let a = model.a();
    let tol = axis_tol(a);
    let zero = CLUSTER_REL_RADIUS * norm2(a).max(1.0);
    let vals: Vec<Complex<f64>> =
        model.eigenvalues().into_iter().filter(|z| z.re.abs() <= tol && z.im > zero).collect();
    let mut out: Vec<f64> = lti::cluster_eigenvalues(&vals, CLUSTER_REL_RADIUS * norm2(a).max(1.0))
        .iter()
        .map(|c| lti::cluster_center(c).im)
        .collect();
    out.sort_by(f64::total_cmp);
    out
}

/// `K = lim_{s -> j w0} (s - j w0) j G(s)` at a simple imaginary-axis pole,
/// from the eigenprojection `V (W^* V)^{-1} W^*` of `A` at `j w0`.
pub fn imaginary_axis_residue(model: &StateSpaceModel, w0: f64) -> Result<ResidueRecord> {
    if !(w0 > 0.0) {
        return Err(Error::InvalidArgument("w0 must be positive".into()));
    }
    let a = model.a();
    let n = a.nrows();
    // w0 may be given to a few digits fewer than the eigenvalue is known
    let radius = 10.0 * CLUSTER_REL_RADIUS * w0.max(1.0);
    let target = Complex::new(0.0, w0);
    let cluster: Vec<Complex<f64>> =
        model.eigenvalues().into_iter().filter(|z| (z - target).norm() <= radius).collect();
    if cluster.is_empty() {
        return Err(Error::NotAPole { omega: w0 });
    }
    let lam = lti::cluster_center(&cluster);
    let mult = cluster.len();
    let mut shifted = a.map(|x| Complex::new(-x, 0.0));
    for i in 0..n {
        shifted[(i, i)] += lam;
    }
    let null_tol = 1e-7 * norm2(a).max(1.0);
    let right = linalg::complex_null_space(&shifted, null_tol);
    let left = linalg::complex_null_space(&shifted.adjoint(), null_tol);
    if right.ncols() < mult || left.ncols() != right.ncols() {
        return Err(Error::NotSimple { omega: w0 });
    }
    let inner = left.adjoint() * &right;
    let inner_inv = linalg::try_inverse(&inner).ok_or(Error::NotSimple { omega: w0 })?;
    let bc = model.b().map(|x| Complex::new(x, 0.0));
    let cc = model.c().map(|x| Complex::new(x, 0.0));
    let r = cc * &right * inner_inv * left.adjoint() * bc;
    let k = r * Complex::new(0.0, 1.0);
    Ok(residue_record(w0, k))
}

/// Checks Hermitian-ness and semidefiniteness of a residue matrix.
pub fn residue_record(omega: f64, k: CMatrix) -> ResidueRecord {
    let nk = norm2(&k);
    let hermitian_defect = norm2(&(&k - k.adjoint()));
    let min_eig = min_hermitian_eig(&k);
    let ok = hermitian_defect <= HERMITIAN_REL_TOL * nk.max(1e-300) && min_eig >= -(1e-9 + COND2_REL_TOL * nk);
    ResidueRecord { omega, residue: k, min_eig, hermitian_defect, ok }
}

/// Decides the NI property (poles up to double at the origin allowed).
pub fn classify_ni(model: &StateSpaceModel, grid: &FrequencyGrid) -> Result<NiReport> {
    if !lti::is_minimal(model) {
        return Err(Error::NotMinimal);
    }
    let m = model.ports();
    let a = model.a();
    let tol = axis_tol(a);
    let cond1_rhp_poles: Vec<Complex<f64>> = model.eigenvalues().into_iter().filter(|z| z.re > tol).collect();

    let poles = imaginary_axis_poles(model);
    let mut cond3_residues = Vec::new();
    let mut reason: Option<String> = None;
    for &w0 in &poles {
        match imaginary_axis_residue(model, w0) {
            Ok(rec) => cond3_residues.push(rec),
            Err(Error::NotSimple { omega }) => {
                reason.get_or_insert(format!("pole at j{omega:.6} is not simple"));
                cond3_residues.push(ResidueRecord {
                    omega,
                    residue: CMatrix::zeros(m, m),
                    min_eig: f64::NAN,
                    hermitian_defect: f64::NAN,
                    ok: false,
                });
            }
            Err(e) => return Err(e),
        }
    }
    let cond3_ok = cond3_residues.iter().all(|r| r.ok);

    let mut cond2 = Vec::new();
    let mut cond2_ok = true;
    for w in grid.frequencies(&poles) {
        let g = match model.eval_tf(Complex::new(0.0, w)) {
            Ok(g) => g,
            Err(Error::SingularAtS { .. }) => continue,
            Err(e) => return Err(e),
        };
        let e = min_hermitian_eig(&imaginary_part_matrix(&g));
        if e < -COND2_REL_TOL * (1.0 + norm2(&g)) {
            cond2_ok = false;
        }
        cond2.push((w, e));
    }

    let zs = freebody::zero_structure(a);
    let cond4_higher_order = zs.index_at_most_two();
    let (cond4_g2, cond4_g2_definiteness) = if cond4_higher_order && zs.null_a > 0 {
        let bd = freebody::split_at_origin(model).map_err(|e| match e {
            Error::IllConditionedTransform { cond } => {
                Error::NumericalBreakdown(format!("origin split condition number {cond:.3e}"))
            }
            other => other,
        })?;
        let g2 = &bd.c3a * &bd.b3b;
        let def = linalg::symmetrize(&g2).ok().and_then(|s| linalg::definiteness(&s).ok());
        (g2, def)
    } else {
        let z = DMatrix::zeros(m, m);
        let def = linalg::definiteness(&z).ok();
        (z, def)
    };
    let cond4_ok = cond4_higher_order && cond4_g2_definiteness.as_ref().is_some_and(|d| d.kind.is_psd());

    if !cond1_rhp_poles.is_empty() {
        reason = Some(format!("{} open right-half-plane pole(s)", cond1_rhp_poles.len()));
    } else if !cond2_ok {
        reason = Some("j(G - G*) has a negative eigenvalue on the sweep".into());
    } else if !cond3_ok {
        reason.get_or_insert_with(|| "imaginary-axis residue is not Hermitian PSD".into());
    } else if !cond4_higher_order {
        reason = Some("pole at the origin of order three or more".into());
    } else if !cond4_ok {
        reason = Some("lim s^2 G(s) is not symmetric PSD".into());
    }
    let is_ni = cond1_rhp_poles.is_empty() && cond2_ok && cond3_ok && cond4_ok;
    if is_ni {
        reason = None;
    }
    Ok(NiReport {
        is_ni,
        cond1_rhp_poles,
        cond2_min_eig_by_freq: cond2,
        cond2_ok,
        cond3_residues,
        cond3_ok,
        cond4_g2,
        cond4_g2_definiteness,
        cond4_higher_order,
        cond4_ok,
        reason,
    })
}

/// Decides the SNI property.
pub fn classify_sni(model: &StateSpaceModel, grid: &FrequencyGrid) -> SniReport {
    let closed_rhp_poles: Vec<Complex<f64>> =
        model.eigenvalues().into_iter().filter(|z| z.re >= -lti::HURWITZ_MARGIN).collect();
    let mut cond2 = Vec::new();
    let mut ok = closed_rhp_poles.is_empty();
    let mut reason = if ok { None } else { Some("pole in Re[s] >= 0".into()) };
    if ok {
        for w in grid.frequencies(&[]) {
            match model.eval_tf(Complex::new(0.0, w)) {
                Ok(g) => {
                    let e = min_hermitian_eig(&imaginary_part_matrix(&g));
                    if !(e > SNI_FLOOR) && ok {
                        ok = false;
                        reason = Some(format!("j(G - G*) not positive definite at w = {w:.6e}"));
                    }
                    cond2.push((w, e));
                }
                Err(_) => {
                    ok = false;
                    reason = Some(format!("evaluation failed at w = {w:.6e}"));
                }
            }
        }
    }
    SniReport { is_sni: ok, closed_rhp_poles, cond2_min_eig_by_freq: cond2, reason }
}
