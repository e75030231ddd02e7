//! Dense matrix utilities: definiteness with explicit tolerances, PSD square
//! roots and full-rank factors, SVD-based null/range spaces and the matrix
//! exponential.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix, DVector};

use crate::{CMatrix, Error, Result};

/// Relative asymmetry accepted before a "symmetric" input is rejected.
pub const SYMMETRY_REL_TOL: f64 = 1e-8;

/// Relative (and absolute floor) eigenvalue threshold for definiteness.
pub const DEFINITENESS_REL_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DefinitenessKind {
    PositiveDefinite,
    PositiveSemidefinite,
    NegativeDefinite,
    NegativeSemidefinite,
    Indefinite,
    Zero,
}

impl DefinitenessKind {
    pub fn is_psd(self) -> bool {
        matches!(self, Self::PositiveDefinite | Self::PositiveSemidefinite | Self::Zero)
    }

    pub fn is_nsd(self) -> bool {
        matches!(self, Self::NegativeDefinite | Self::NegativeSemidefinite | Self::Zero)
    }

    pub fn negated(self) -> Self {
        match self {
            Self::PositiveDefinite => Self::NegativeDefinite,
            Self::PositiveSemidefinite => Self::NegativeSemidefinite,
            Self::NegativeDefinite => Self::PositiveDefinite,
            Self::NegativeSemidefinite => Self::PositiveSemidefinite,
            other => other,
        }
    }
}

/// Sign classification of a symmetric matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Definiteness {
    pub kind: DefinitenessKind,
    pub min_eig: f64,
    pub max_eig: f64,
    pub tol_used: f64,
}

/// Result of factoring a PSD matrix as `J * J^T` with `J` of full column rank.
#[derive(Debug, Clone, PartialEq)]
pub struct FullRankFactor {
    pub factor: DMatrix<f64>,
    pub residual: f64,
}

impl FullRankFactor {
    pub fn rank(&self) -> usize {
        self.factor.ncols()
    }
}

/// Spectral norm.
/// Scalars whose matrices can be handed to the real SVD. Complex matrices go
/// through [`realify`].
pub trait Scalar: ComplexField<RealField = f64> {
    /// Singular values in descending order.
    fn singular_values(m: &DMatrix<Self>) -> Vec<f64>;
}

impl Scalar for f64 {
    fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
        svd_sorted(m).1
    }
}

impl Scalar for Complex<f64> {
    fn singular_values(m: &DMatrix<Complex<f64>>) -> Vec<f64> {
        complex_singular_values(m)
    }
}

pub fn norm2<T: Scalar>(m: &DMatrix<T>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    T::singular_values(m).first().copied().unwrap_or(0.0)
}

/// Default eigenvalue threshold `max(1e-9, 1e-9 * ||M||_2)`.
pub fn definiteness_tol(m: &DMatrix<f64>) -> f64 {
    DEFINITENESS_REL_TOL.max(DEFINITENESS_REL_TOL * norm2(m))
}

/// Standard numerical-rank rule: `max(dims) * eps`, relative to the largest
/// singular value.
pub fn default_rank_tol(rows: usize, cols: usize) -> f64 {
    rows.max(cols).max(1) as f64 * f64::EPSILON
}

/// Returns `(M + M^T)/2`, or an error when the asymmetry exceeds
/// `SYMMETRY_REL_TOL * ||M||`.
pub fn symmetrize(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!("expected a square matrix, got {}x{}", m.nrows(), m.ncols())));
    }
    let asym = norm2(&(m - m.transpose()));
    let allowed = SYMMETRY_REL_TOL * norm2(m);
    if asym > allowed && asym > f64::MIN_POSITIVE {
        return Err(Error::NonSymmetric { asymmetry: asym, allowed });
    }
    Ok((m + m.transpose()) * 0.5)
}

/// Eigen-decomposition of a symmetric matrix with eigenvalues sorted
/// ascending; columns of the second matrix are the matching eigenvectors.
pub fn sym_eigen_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), DMatrix::zeros(0, 0));
    }
    let eig = m.clone().symmetric_eigen();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let vals = idx.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vecs = DMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, idx[c])]);
    (vals, vecs)
}

/// Real `2n x 2n` matrix `[[Re, -Im], [Im, Re]]` representing `m`.
///
/// Every singular value and (for Hermitian `m`) eigenvalue of `m` appears
/// exactly twice in the realification, which lets complex problems use the
/// real symmetric-eigen and SVD routines.
pub fn realify(m: &CMatrix) -> DMatrix<f64> {
    let (r, c) = m.shape();
    let mut out = DMatrix::zeros(2 * r, 2 * c);
    for i in 0..r {
        for j in 0..c {
            let z = m[(i, j)];
            out[(i, j)] = z.re;
            out[(i + r, j + c)] = z.re;
            out[(i, j + c)] = -z.im;
            out[(i + r, j)] = z.im;
        }
    }
    out
}

/// Eigenvalues (ascending) of a Hermitian complex matrix.
pub fn hermitian_eigenvalues(m: &CMatrix) -> Vec<f64> {
    if m.is_empty() {
        return Vec::new();
    }
    let h = (m + m.adjoint()) * Complex::new(0.5, 0.0);
    let (vals, _) = sym_eigen_sorted(&symmetrize_unchecked(&realify(&h)));
    vals.into_iter().step_by(2).collect()
}

fn symmetrize_unchecked(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Singular values (descending) of a complex matrix.
pub fn complex_singular_values(m: &CMatrix) -> Vec<f64> {
    let (_, sigma, _) = svd_sorted(&realify(m));
    sigma.into_iter().step_by(2).collect()
}

/// Orthonormal basis of `{v : ||m v|| <= tol}` for a complex matrix, where
/// `tol` is an absolute singular-value threshold.
pub fn complex_null_space(m: &CMatrix, tol: f64) -> CMatrix {
    let cols = m.ncols();
    let (_, sigma, v) = svd_sorted(&realify(m));
    let mut basis: Vec<DVector<Complex<f64>>> = Vec::new();
    for (k, &s) in sigma.iter().enumerate().chain((sigma.len()..2 * cols).map(|k| (k, &0.0))) {
        if s > tol {
            continue;
        }
        let mut x = DVector::from_fn(cols, |i, _| Complex::new(v[(i, k)], v[(i + cols, k)]));
        for _ in 0..2 {
            for q in &basis {
                let c = q.dotc(&x);
                x -= q * c;
            }
        }
        let nx = x.norm();
        if nx > 0.5 {
            basis.push(x / Complex::new(nx, 0.0));
        }
    }
    if basis.is_empty() {
        return CMatrix::zeros(cols, 0);
    }
    CMatrix::from_columns(&basis)
}

pub fn classify_definiteness(m: &DMatrix<f64>, tol: f64) -> Result<Definiteness> {
    let s = symmetrize(m)?;
    let (vals, _) = sym_eigen_sorted(&s);
    let (min_eig, max_eig) = match (vals.first(), vals.last()) {
        (Some(&lo), Some(&hi)) => (lo, hi),
        _ => (0.0, 0.0),
    };
    let kind = if min_eig.abs().max(max_eig.abs()) <= tol {
        DefinitenessKind::Zero
    } else if min_eig > tol {
        DefinitenessKind::PositiveDefinite
    } else if min_eig >= -tol {
        DefinitenessKind::PositiveSemidefinite
    } else if max_eig < -tol {
        DefinitenessKind::NegativeDefinite
    } else if max_eig <= tol {
        DefinitenessKind::NegativeSemidefinite
    } else {
        DefinitenessKind::Indefinite
    };
    Ok(Definiteness { kind, min_eig, max_eig, tol_used: tol })
}

/// [`classify_definiteness`] with the default tolerance.
pub fn definiteness(m: &DMatrix<f64>) -> Result<Definiteness> {
    classify_definiteness(m, definiteness_tol(m))
}

/// Symmetric PSD square root.
pub fn psd_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let s = symmetrize(m)?;
    let tol = definiteness_tol(&s);
    let (vals, vecs) = sym_eigen_sorted(&s);
    if let Some(&lo) = vals.first() {
        if lo < -tol {
            return Err(Error::NotPsd { min_eig: lo });
        }
    }
    let n = s.nrows();
    let mut out = DMatrix::zeros(n, n);
    for (i, &lam) in vals.iter().enumerate() {
        let r = libm::sqrt(lam.max(0.0));
        if r == 0.0 {
            continue;
        }
        let v = vecs.column(i);
        out += v * v.transpose() * r;
    }
    Ok((&out + out.transpose()) * 0.5)
}

/// Full-rank factor with the standard numerical-rank rule.
pub fn full_rank_factor(m: &DMatrix<f64>) -> Result<FullRankFactor> {
    full_rank_factor_tol(m, default_rank_tol(m.nrows(), m.ncols()))
}

/// Full-rank factor keeping eigenvalues above `rel_tol * lambda_max`.
pub fn full_rank_factor_tol(m: &DMatrix<f64>, rel_tol: f64) -> Result<FullRankFactor> {
    let s = symmetrize(m)?;
    let (vals, vecs) = sym_eigen_sorted(&s);
    let n = s.nrows();
    let top = vals.last().copied().unwrap_or(0.0).max(0.0);
    let tol = definiteness_tol(&s);
    if let Some(&lo) = vals.first() {
        if lo < -tol.max(rel_tol * top) {
            return Err(Error::NotPsd { min_eig: lo });
        }
    }
    let keep: Vec<usize> = (0..n).filter(|&i| top > 0.0 && vals[i] > rel_tol * top).collect();
    // largest first so the first column carries the dominant direction
    let factor = DMatrix::from_fn(n, keep.len(), |r, c| {
        let i = keep[keep.len() - 1 - c];
        vecs[(r, i)] * libm::sqrt(vals[i])
    });
    let residual = norm2(&(&factor * factor.transpose() - &s));
    Ok(FullRankFactor { factor, residual })
}

/// SVD with singular values sorted in descending order.
///
/// Returns `(U, sigma, V)` with `sigma` of length `cols`, `V` the full
/// orthogonal `cols x cols` right factor and `U` of size `rows x cols`. When
/// `rows < cols` the trailing `sigma` entries are zero and the matching
/// columns of `U` are zero.
///
/// Computed by one-sided Jacobi rotations, which stay accurate on
/// rank-deficient input.
pub fn svd_sorted(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, cols) = m.shape();
    if rows == 0 || cols == 0 {
        return (DMatrix::zeros(rows, cols), alloc::vec![0.0; cols], DMatrix::identity(cols, cols));
    }
    if rows >= cols {
        return jacobi_svd(m);
    }
    // A^T = U' S V'^T, so A = V' S U'^T
    let (ut, sigma_t, vt) = jacobi_svd(&m.transpose());
    let mut sigma = sigma_t;
    sigma.resize(cols, 0.0);
    let mut u = DMatrix::zeros(rows, cols);
    u.view_mut((0, 0), (rows, rows)).copy_from(&vt);
    let v = complete_basis(&ut);
    (u, sigma, v)
}

/// Extends orthonormal columns to an orthonormal basis of the whole space.
fn complete_basis(q: &DMatrix<f64>) -> DMatrix<f64> {
    let n = q.nrows();
    let mut cols: Vec<DVector<f64>> = q.column_iter().map(|c| c.into_owned()).collect();
    for e in 0..n {
        if cols.len() == n {
            break;
        }
        let mut x = DVector::zeros(n);
        x[e] = 1.0;
        for _ in 0..2 {
            for c in &cols {
                let d = c.dot(&x);
                x -= c * d;
            }
        }
        let nx = x.norm();
        if nx > 1e-8 {
            cols.push(x / nx);
        }
    }
    DMatrix::from_columns(&cols)
}

/// One-sided Jacobi SVD of a tall (`rows >= cols`) matrix, sorted.
fn jacobi_svd(m: &DMatrix<f64>) -> (DMatrix<f64>, Vec<f64>, DMatrix<f64>) {
    let (rows, n) = m.shape();
    let mut u = m.clone();
    let mut v = DMatrix::<f64>::identity(n, n);
    for _sweep in 0..80 {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let alpha = u.column(p).norm_squared();
                let beta = u.column(q).norm_squared();
                let gamma = u.column(p).dot(&u.column(q));
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * libm::sqrt(alpha * beta) {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + libm::sqrt(1.0 + zeta * zeta));
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for k in 0..rows {
                    let (a, b) = (u[(k, p)], u[(k, q)]);
                    u[(k, p)] = c * a - s * b;
                    u[(k, q)] = s * a + c * b;
                }
                for k in 0..n {
                    let (a, b) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = c * a - s * b;
                    v[(k, q)] = s * a + c * b;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    let norms: Vec<f64> = u.column_iter().map(|c| c.norm()).collect();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| norms[b].total_cmp(&norms[a]));
    let sigma: Vec<f64> = idx.iter().map(|&i| norms[i]).collect();
    let v_sorted = DMatrix::from_fn(n, n, |r, c| v[(r, idx[c])]);
    let floor = sigma[0] * f64::EPSILON * n as f64;
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    for (c, &i) in idx.iter().enumerate() {
        if sigma[c] > floor && sigma[c] > 0.0 {
            basis.push(u.column(i) / sigma[c]);
        } else {
            break;
        }
    }
    let head = if basis.is_empty() { DMatrix::zeros(rows, 0) } else { DMatrix::from_columns(&basis) };
    let u_sorted = complete_basis(&head).columns(0, n).into_owned();
    (u_sorted, sigma, v_sorted)
}

fn cutoff(sigma: &[f64], rel_tol: f64) -> f64 {
    rel_tol * sigma.first().copied().unwrap_or(0.0)
}

pub fn numerical_rank(m: &DMatrix<f64>, rel_tol: f64) -> usize {
    let (_, sigma, _) = svd_sorted(m);
    let cut = cutoff(&sigma, rel_tol);
    sigma.iter().filter(|&&s| s > cut && s > 0.0).count()
}

/// Orthonormal basis of the numerical null space (columns).
pub fn null_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let cols = m.ncols();
    let (_, sigma, v) = svd_sorted(m);
    let cut = cutoff(&sigma, rel_tol);
    let rank = sigma.iter().filter(|&&s| s > cut && s > 0.0).count();
    v.columns(rank, cols - rank).into_owned()
}

/// Orthonormal basis of the numerical column space.
pub fn column_space(m: &DMatrix<f64>, rel_tol: f64) -> DMatrix<f64> {
    let (u, sigma, _) = svd_sorted(m);
    let cut = cutoff(&sigma, rel_tol);
    let rank = sigma.iter().filter(|&&s| s > cut && s > 0.0).count();
    u.columns(0, rank).into_owned()
}

/// True when every null vector `v` of `m1` satisfies `||m2 v|| <= tol ||m2||`.
///
/// Null vectors are those whose singular value is below
/// `max(default rank rule, tol) * sigma_1(m1)`.
pub fn nullspace_contained(m1: &DMatrix<f64>, m2: &DMatrix<f64>, tol: f64) -> Result<bool> {
    if m1.ncols() != m2.ncols() {
        return Err(Error::DimensionMismatch(format!(
            "null-space containment needs equal column counts ({} vs {})",
            m1.ncols(),
            m2.ncols()
        )));
    }
    let m2_norm = norm2(m2);
    if m2_norm == 0.0 {
        return Ok(true);
    }
    let rel = default_rank_tol(m1.nrows(), m1.ncols()).max(tol);
    let basis = null_space(m1, rel);
    Ok(basis.column_iter().all(|v| (m2 * v).norm() <= tol * m2_norm))
}

/// Inverse via LU, rejecting matrices whose reciprocal condition estimate
/// falls below `1e-14`.
pub fn try_inverse<T: Scalar>(m: &DMatrix<T>) -> Option<DMatrix<T>> {
    if !m.is_square() {
        return None;
    }
    let sigma = T::singular_values(m);
    match (sigma.first(), sigma.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 && lo > 1e-14 * hi => m.clone().try_inverse(),
        (None, None) => Some(DMatrix::zeros(0, 0)),
        _ => None,
    }
}

/// Smallest over largest singular value (0 for singular, 1 for empty).
pub fn reciprocal_condition<T: Scalar>(m: &DMatrix<T>) -> f64 {
    let sigma = T::singular_values(m);
    match (sigma.first(), sigma.last()) {
        (Some(&hi), Some(&lo)) if hi > 0.0 => lo / hi,
        (Some(_), Some(_)) => 0.0,
        _ => 1.0,
    }
}

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn one_norm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> f64 {
    m.column_iter().map(|c| c.iter().map(|x| x.clone().modulus()).sum::<f64>()).fold(0.0, f64::max)
}

/// Matrix exponential by scaling and squaring with a degree-13 Padé
/// approximant.
pub fn expm<T: ComplexField<RealField = f64>>(m: &DMatrix<T>) -> DMatrix<T> {
    assert!(m.is_square(), "expm needs a square matrix");
    let n = m.nrows();
    let theta13 = 5.371920351148152;
    let norm = one_norm(m);
    let squarings = if norm > theta13 { libm::ceil(libm::log2(norm / theta13)) as i32 } else { 0 };
    let scale = T::from_real(libm::pow(2.0, -(squarings as f64)));
    let a = m * scale;
    let c = |i: usize| T::from_real(PADE13[i]);
    let ident = DMatrix::<T>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let inner_u = &a6 * (&a6 * c(13) + &a4 * c(11) + &a2 * c(9)) + &a6 * c(7) + &a4 * c(5) + &a2 * c(3) + &ident * c(1);
    let u = &a * inner_u;
    let v = &a6 * (&a6 * c(12) + &a4 * c(10) + &a2 * c(8)) + &a6 * c(6) + &a4 * c(4) + &a2 * c(2) + &ident * c(0);
    let mut r = (&v - &u).lu().solve(&(&v + &u)).expect("Pade denominator is nonsingular after scaling");
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}
