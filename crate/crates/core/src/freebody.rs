//! Free-body structure at the origin: block-diagonal realization, Laurent
//! coefficients `G2 / s^2 + G1 / s + G0 + ...`, the projector
//! `P(X, Y) = X - X Y (Y^T X Y)^{-1} Y^T X` and the Hankel subspace matrix `F`.

use alloc::format;

use nalgebra::{Complex, DMatrix};

use crate::linalg::{self, norm2, svd_sorted};
use crate::lti::{self, StateSpaceModel};
use crate::{CMatrix, Error, Result};

/// Singular values below `ZERO_REL_TOL * max(1, ||A||)` count as zero when
/// locating the null spaces of `A` and its powers.
pub const ZERO_REL_TOL: f64 = 1e-9;

/// Largest accepted condition number of the block-diagonalizing transform.
pub const MAX_TRANSFORM_COND: f64 = 1e8;

/// Relative rank threshold for the Hankel matrix and the thin SVD of `G1`.
pub const HANKEL_RANK_REL_TOL: f64 = 1e-9;

/// Null-space dimensions of `A`, `A^2` and `A^3`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ZeroStructure {
    pub null_a: usize,
    pub null_a2: usize,
    pub null_a3: usize,
}

impl ZeroStructure {
    /// Number of 2x2 Jordan blocks at zero (valid when `null_a3 == null_a2`).
    pub fn double_blocks(&self) -> usize {
        self.null_a2 - self.null_a
    }

    pub fn single_blocks(&self) -> usize {
        self.null_a - self.double_blocks()
    }

    /// True when no zero-eigenvalue Jordan block exceeds size two.
    pub fn index_at_most_two(&self) -> bool {
        self.null_a3 == self.null_a2
    }
}

fn zero_threshold(a: &DMatrix<f64>) -> f64 {
    ZERO_REL_TOL * norm2(a).max(1.0)
}

/// Orthonormal basis of `{x : M x in span(q)}` for orthonormal `q`, i.e. the
/// null space of `(I - q q^T) M`.
fn preimage_basis(m: &DMatrix<f64>, q: &DMatrix<f64>, thresh: f64) -> DMatrix<f64> {
    let n = m.nrows();
    let proj = DMatrix::<f64>::identity(n, n) - q * q.transpose();
    let pm = proj * m;
    let (_, sigma, v) = svd_sorted(&pm);
    let keep = sigma.iter().filter(|&&s| s > thresh).count();
    v.columns(keep, n - keep).into_owned()
}

fn null_bases(a: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let n = a.nrows();
    let thresh = zero_threshold(a);
    let q1 = preimage_basis(a, &DMatrix::zeros(n, 0), thresh);
    let q2 = preimage_basis(a, &q1, thresh);
    let q3 = preimage_basis(a, &q2, thresh);
    (q1, q2, q3)
}

/// Jordan structure of the zero eigenvalue, computed without forming powers
/// of `A`: `N(A^{k+1})` is the preimage of `N(A^k)` under `A`.
pub fn zero_structure(a: &DMatrix<f64>) -> ZeroStructure {
    let (q1, q2, q3) = null_bases(a);
    ZeroStructure { null_a: q1.ncols(), null_a2: q2.ncols(), null_a3: q3.ncols() }
}

/// Realization split as `A = diag(A1, 0, [[0, I], [0, 0]])` with `A1`
/// nonsingular. `B3 = [B3a; B3b]`, `C3 = [C3a, C3b]`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockDiagonalRealization {
    pub a1: DMatrix<f64>,
    pub b1: DMatrix<f64>,
    pub c1: DMatrix<f64>,
    pub b2: DMatrix<f64>,
    pub c2: DMatrix<f64>,
    pub b3a: DMatrix<f64>,
    pub b3b: DMatrix<f64>,
    pub c3a: DMatrix<f64>,
    pub c3b: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// `x_original = T x_block`.
    pub t: DMatrix<f64>,
    /// Largest entry of the discarded off-diagonal coupling in `T^{-1} A T`.
    pub coupling_residual: f64,
    pub original: StateSpaceModel,
}

impl BlockDiagonalRealization {
    pub fn n1(&self) -> usize {
        self.a1.nrows()
    }

    pub fn n2(&self) -> usize {
        self.b2.nrows()
    }

    pub fn k(&self) -> usize {
        self.b3a.nrows()
    }

    pub fn a3(&self) -> DMatrix<f64> {
        let k = self.k();
        let mut a = DMatrix::zeros(2 * k, 2 * k);
        a.view_mut((0, k), (k, k)).fill_with_identity();
        a
    }

    /// The assembled block-diagonal model.
    pub fn to_state_space(&self) -> Result<StateSpaceModel> {
        let (n1, n2, k) = (self.n1(), self.n2(), self.k());
        let n = n1 + n2 + 2 * k;
        let m = self.d.nrows();
        let mut a = DMatrix::zeros(n, n);
        a.view_mut((0, 0), (n1, n1)).copy_from(&self.a1);
        a.view_mut((n1 + n2, n1 + n2), (2 * k, 2 * k)).copy_from(&self.a3());
        let mut b = DMatrix::zeros(n, m);
        b.view_mut((0, 0), (n1, m)).copy_from(&self.b1);
        b.view_mut((n1, 0), (n2, m)).copy_from(&self.b2);
        b.view_mut((n1 + n2, 0), (k, m)).copy_from(&self.b3a);
        b.view_mut((n1 + n2 + k, 0), (k, m)).copy_from(&self.b3b);
        let mut c = DMatrix::zeros(m, n);
        c.view_mut((0, 0), (m, n1)).copy_from(&self.c1);
        c.view_mut((0, n1), (m, n2)).copy_from(&self.c2);
        c.view_mut((0, n1 + n2), (m, k)).copy_from(&self.c3a);
        c.view_mut((0, n1 + n2 + k), (m, k)).copy_from(&self.c3b);
        StateSpaceModel::new(a, b, c, self.d.clone())
    }
}

/// Top `count` left singular vectors.
fn leading_columns(m: &DMatrix<f64>, count: usize) -> DMatrix<f64> {
    let (u, _, _) = svd_sorted(m);
    u.columns(0, count).into_owned()
}

/// Similarity transform to block-diagonal form without requiring a minimal or
/// strictly proper model. Fails on zero-eigenvalue Jordan blocks of size three
/// or more and on ill-conditioned transforms.
pub fn split_at_origin(model: &StateSpaceModel) -> Result<BlockDiagonalRealization> {
    let a = model.a();
    let n = a.nrows();
    let (q1, q2, q3) = null_bases(a);
    let (d1, d2) = (q1.ncols(), q2.ncols());
    if q3.ncols() > d2 {
        let mut size = 3;
        let mut prev = q3;
        let thresh = zero_threshold(a);
        while size < n {
            let next = preimage_basis(a, &prev, thresh);
            if next.ncols() == prev.ncols() {
                break;
            }
            prev = next;
            size += 1;
        }
        return Err(Error::JordanBlockTooLarge { size });
    }
    let k = d2 - d1;
    let r = n - d2;

    // invariant complement of N(A^2)
    let range = if r > 0 { leading_columns(&(a * a), r) } else { DMatrix::zeros(n, 0) };
    // Jordan chains: x in N(A^2) \ N(A), y = A x
    let (x, y) = if k > 0 {
        let aq = a * &q2;
        let (_, _, v) = svd_sorted(&aq);
        let x = &q2 * v.columns(0, k);
        let y = a * &x;
        (x, y)
    } else {
        (DMatrix::zeros(n, 0), DMatrix::zeros(n, 0))
    };
    let singles = d1 - k;
    let z = if singles > 0 {
        let proj = if k > 0 {
            let ypinv = y.clone().pseudo_inverse(0.0).map_err(|e| Error::NumericalBreakdown(e.into()))?;
            DMatrix::<f64>::identity(n, n) - &y * ypinv
        } else {
            DMatrix::<f64>::identity(n, n)
        };
        leading_columns(&(proj * &q1), singles)
    } else {
        DMatrix::zeros(n, 0)
    };

    let mut t = DMatrix::zeros(n, n);
    t.view_mut((0, 0), (n, r)).copy_from(&range);
    t.view_mut((0, r), (n, singles)).copy_from(&z);
    t.view_mut((0, r + singles), (n, k)).copy_from(&y);
    t.view_mut((0, r + singles + k), (n, k)).copy_from(&x);
    let cond = if n == 0 { 1.0 } else { 1.0 / linalg::reciprocal_condition(&t) };
    if !(cond <= MAX_TRANSFORM_COND) {
        return Err(Error::IllConditionedTransform { cond });
    }
    let tinv = linalg::try_inverse(&t).ok_or(Error::IllConditionedTransform { cond })?;
    let at = &tinv * a * &t;
    let bt = &tinv * model.b();
    let ct = model.c() * &t;

    let mut expected = DMatrix::zeros(n, n);
    expected.view_mut((0, 0), (r, r)).copy_from(&at.view((0, 0), (r, r)));
    for i in 0..k {
        expected[(r + singles + i, r + singles + k + i)] = 1.0;
    }
    let coupling_residual = (&at - &expected).amax();
    if coupling_residual > 1e-6 * norm2(a).max(1.0) {
        return Err(Error::NumericalBreakdown(format!("block-diagonal coupling residual {coupling_residual:.3e}")));
    }
    let a1 = at.view((0, 0), (r, r)).into_owned();
    if r > 0 && linalg::reciprocal_condition(&a1) < 1e-14 {
        return Err(Error::NumericalBreakdown("A1 block is singular".into()));
    }
    let m = model.ports();
    let rows = |off: usize, cnt: usize| bt.view((off, 0), (cnt, m)).into_owned();
    let cols = |off: usize, cnt: usize| ct.view((0, off), (m, cnt)).into_owned();
    Ok(BlockDiagonalRealization {
        a1,
        b1: rows(0, r),
        c1: cols(0, r),
        b2: rows(r, singles),
        c2: cols(r, singles),
        b3a: rows(r + singles, k),
        b3b: rows(r + singles + k, k),
        c3a: cols(r + singles, k),
        c3b: cols(r + singles + k, k),
        d: model.d().clone(),
        t,
        coupling_residual,
        original: model.clone(),
    })
}

/// Block-diagonal form of a minimal, strictly proper model.
pub fn to_block_diagonal(model: &StateSpaceModel) -> Result<BlockDiagonalRealization> {
    if !model.is_strictly_proper() {
        return Err(Error::NotStrictlyProper);
    }
    if !lti::is_minimal(model) {
        return Err(Error::NotMinimal);
    }
    let out = split_at_origin(model)?;
    check_transfer_preserved(model, &out.to_state_space()?)?;
    Ok(out)
}

fn check_transfer_preserved(a: &StateSpaceModel, b: &StateSpaceModel) -> Result<()> {
    let scale = norm2(a.a()).max(1.0);
    for (re, im) in [(0.37, 1.13), (-0.21, 0.58), (1.7, -0.9)] {
        let s = Complex::new(re * scale, im * scale);
        let (ga, gb) = match (a.eval_tf(s), b.eval_tf(s)) {
            (Ok(x), Ok(y)) => (x, y),
            _ => continue,
        };
        let diff = norm2(&(&ga - &gb));
        if diff > 1e-6 * norm2(&ga).max(1e-300) {
            return Err(Error::NumericalBreakdown(format!(
                "block-diagonal transform changed the transfer matrix by {diff:.3e}"
            )));
        }
    }
    Ok(())
}

/// How a set of Laurent coefficients was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaurentMethod {
    Realization,
    NumericLimit,
}

/// `G(s) = G2 / s^2 + G1 / s + G0 + O(s)` near the origin.
#[derive(Debug, Clone, PartialEq)]
pub struct LaurentCoefficients {
    pub g0: DMatrix<f64>,
    pub g1: DMatrix<f64>,
    pub g2: DMatrix<f64>,
    pub method: LaurentMethod,
}

impl LaurentCoefficients {
    /// Largest coefficient difference relative to the largest coefficient.
    pub fn relative_difference(&self, other: &Self) -> f64 {
        let scale = [&self.g0, &self.g1, &self.g2].iter().map(|g| norm2(g)).fold(0.0, f64::max).max(1e-300);
        let diff = [norm2(&(&self.g0 - &other.g0)), norm2(&(&self.g1 - &other.g1)), norm2(&(&self.g2 - &other.g2))]
            .iter()
            .copied()
            .fold(0.0, f64::max);
        diff / scale
    }
}

/// Coefficients read off a block-diagonal realization:
/// `G2 = C3a B3b`, `G1 = C2 B2 + C3a B3a + C3b B3b`, `G0 = D - C1 A1^{-1} B1`.
pub fn laurent_from_blocks(bd: &BlockDiagonalRealization) -> Result<LaurentCoefficients> {
    let g2 = &bd.c3a * &bd.b3b;
    let g1 = &bd.c2 * &bd.b2 + &bd.c3a * &bd.b3a + &bd.c3b * &bd.b3b;
    let g0 = if bd.n1() > 0 {
        let x =
            bd.a1.clone().lu().solve(&bd.b1).ok_or_else(|| Error::NumericalBreakdown("A1 block is singular".into()))?;
        &bd.d - &bd.c1 * x
    } else {
        bd.d.clone()
    };
    Ok(LaurentCoefficients { g0, g1, g2, method: LaurentMethod::Realization })
}

/// Laurent coefficients of a minimal, strictly proper model from its
/// block-diagonal realization.
pub fn laurent_coefficients(model: &StateSpaceModel) -> Result<LaurentCoefficients> {
    laurent_from_blocks(&to_block_diagonal(model)?)
}

/// Number of contour points used by [`laurent_limit`].
pub const CONTOUR_POINTS: usize = 32;

/// Laurent coefficients of any matrix function analytic in the punctured disk
/// `0 < |s| < radius`, from the Taylor coefficients of `s^2 G(s)` computed by
/// the trapezoidal rule on circles of radius `radius / 4` and `radius / 8`.
/// The two estimates must agree to `1e-8` relative, otherwise
/// [`Error::LimitDivergent`] is returned.
pub fn laurent_limit<F>(g: F, radius: f64) -> Result<LaurentCoefficients>
where
    F: Fn(Complex<f64>) -> Result<CMatrix>,
{
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidArgument("contour radius must be positive".into()));
    }
    let taylor = |r: f64, npts: usize| -> Result<([CMatrix; 3], f64)> {
        let mut acc: [Option<CMatrix>; 3] = [None, None, None];
        let mut fmax: f64 = 0.0;
        for i in 0..npts {
            let theta = 2.0 * core::f64::consts::PI * (i as f64 + 0.5) / npts as f64;
            let s = Complex::from_polar(r, theta);
            let f = g(s)? * (s * s);
            fmax = fmax.max(norm2(&f));
            for (j, slot) in acc.iter_mut().enumerate() {
                let w = s.powi(-(j as i32)) / npts as f64;
                let term = &f * w;
                *slot = Some(match slot.take() {
                    Some(prev) => prev + term,
                    None => term,
                });
            }
        }
        let [a, b, c] = acc;
        let unwrap = |x: Option<CMatrix>| x.ok_or_else(|| Error::InvalidArgument("no contour points".into()));
        Ok(([unwrap(a)?, unwrap(b)?, unwrap(c)?], fmax))
    };
    let r1 = radius / 4.0;
    let r2 = radius / 8.0;
    let (c1, f1) = taylor(r1, CONTOUR_POINTS)?;
    let (c2, _) = taylor(r2, CONTOUR_POINTS)?;
    let scale = f1.max(1e-300);
    for j in 0..3 {
        let d = norm2(&(&c1[j] - &c2[j])) * libm::pow(r1, j as f64) / scale;
        if d > 1e-8 {
            return Err(Error::LimitDivergent(format!(
                "coefficient of s^{} changed by {d:.3e} between contours",
                j as i32 - 2
            )));
        }
    }
    let re = |m: &CMatrix| m.map(|z| z.re);
    Ok(LaurentCoefficients { g2: re(&c2[0]), g1: re(&c2[1]), g0: re(&c2[2]), method: LaurentMethod::NumericLimit })
}

/// Smallest nonzero eigenvalue modulus of `A` (or 1 when every eigenvalue
/// is zero).
fn nonzero_pole_radius(model: &StateSpaceModel) -> f64 {
    let zero = 1e-7 * norm2(model.a()).max(1.0);
    let r = model.eigenvalues().iter().map(|z| z.norm()).filter(|&r| r > zero).fold(f64::INFINITY, f64::min);
    if r.is_finite() {
        r
    } else {
        1.0
    }
}

/// Laurent coefficients of a state-space model by contour limits.
pub fn laurent_numeric(model: &StateSpaceModel) -> Result<LaurentCoefficients> {
    laurent_limit(|s| model.eval_tf(s), nonzero_pole_radius(model))
}

/// Realization and numeric coefficients plus their relative disagreement.
pub fn laurent_cross_checked(model: &StateSpaceModel) -> Result<(LaurentCoefficients, LaurentCoefficients, f64)> {
    let a = laurent_coefficients(model)?;
    let b = laurent_numeric(model)?;
    let d = a.relative_difference(&b);
    Ok((a, b, d))
}

/// `P(X, Y) = X - X Y (Y^T X Y)^{-1} Y^T X` for symmetric `X`.
pub fn projector_p(x: &DMatrix<f64>, y: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let x = linalg::symmetrize(x)?;
    if y.nrows() != x.nrows() {
        return Err(Error::DimensionMismatch(format!("X is {}x{}, Y has {} rows", x.nrows(), x.ncols(), y.nrows())));
    }
    if y.ncols() == 0 {
        return Ok(x);
    }
    let xy = &x * y;
    let inner = y.transpose() * &xy;
    if linalg::reciprocal_condition(&inner) < 1e-12 {
        return Err(Error::SingularInner);
    }
    let sol = inner.lu().solve(&xy.transpose()).ok_or(Error::SingularInner)?;
    let p = &x - &xy * sol;
    Ok((&p + p.transpose()) * 0.5)
}

/// Subspace matrix `F = U1 V2hat` from the Hankel matrix `[[G1, G2], [G2, 0]]`.
pub fn build_f_matrix(l: &LaurentCoefficients) -> Result<DMatrix<f64>> {
    let m = l.g2.nrows();
    if norm2(&l.g2) == 0.0 {
        return Err(Error::G2Zero);
    }
    let mut hankel = DMatrix::zeros(2 * m, 2 * m);
    hankel.view_mut((0, 0), (m, m)).copy_from(&l.g1);
    hankel.view_mut((0, m), (m, m)).copy_from(&l.g2);
    hankel.view_mut((m, 0), (m, m)).copy_from(&l.g2);
    let (h1, sigma, _) = svd_sorted(&hankel);
    let cut = HANKEL_RANK_REL_TOL * sigma[0];
    let rank = sigma.iter().filter(|&&s| s > cut).count();
    let mut u = h1.columns(0, rank).into_owned();
    for (i, s) in sigma.iter().take(rank).enumerate() {
        u.column_mut(i).scale_mut(*s);
    }
    let u1 = u.rows(0, m).into_owned();
    let u2 = u.rows(m, m).into_owned();
    let prod = u1.transpose() * &u2;
    let (_, ps, pv) = svd_sorted(&prod);
    let pcut = HANKEL_RANK_REL_TOL * norm2(&u1) * norm2(&u2);
    let prank = ps.iter().filter(|&&s| s > pcut).count();
    let v2 = pv.columns(prank, rank - prank).into_owned();
    Ok(u1 * v2)
}

/// `F1 = F1tilde S2` from the thin SVD `G1 = F1tilde S2 V1^T`.
pub fn build_f1_matrix(g1: &DMatrix<f64>) -> DMatrix<f64> {
    let (u, sigma, _) = svd_sorted(g1);
    let cut = HANKEL_RANK_REL_TOL * sigma.first().copied().unwrap_or(0.0);
    let rank = sigma.iter().filter(|&&s| s > cut && s > 0.0).count();
    let mut f = u.columns(0, rank).into_owned();
    for (i, s) in sigma.iter().take(rank).enumerate() {
        f.column_mut(i).scale_mut(*s);
    }
    f
}

/// Eigenvalue moduli of `A` grouped at the origin, for diagnostics.
pub fn origin_eigenvalue_count(model: &StateSpaceModel) -> usize {
    let zero = 1e-7 * norm2(model.a()).max(1.0);
    model.eigenvalues().iter().filter(|z| z.norm() <= zero).count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lti::{ModalModel, Mode};
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn mat(r: usize, c: usize, v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_row_slice(r, c, v)
    }

    fn double_integrator() -> StateSpaceModel {
        StateSpaceModel::new(
            mat(2, 2, &[0.0, 1.0, 0.0, 0.0]),
            mat(2, 1, &[0.0, 1.0]),
            mat(1, 2, &[1.0, 0.0]),
            mat(1, 1, &[0.0]),
        )
        .unwrap()
    }

    fn case_study_modal() -> ModalModel {
        let mut mm = ModalModel::new(2);
        mm.g2 = Some(mat(2, 2, &[0.140679, 0.0, 0.0, 0.0]));
        mm.modes.push(Mode::undamped(3.4, mat(2, 2, &[3.0907, 3.5573e-4, 3.5573e-4, 2.35])));
        mm
    }

    #[test]
    fn zero_structure_examples() {
        let zs = zero_structure(double_integrator().a());
        assert_eq!((zs.null_a, zs.null_a2, zs.null_a3), (1, 2, 2));
        let triple = mat(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]);
        assert!(!zero_structure(&triple).index_at_most_two());
    }

    #[test]
    fn double_integrator_is_already_split() {
        let bd = to_block_diagonal(&double_integrator()).unwrap();
        assert_eq!((bd.n1(), bd.n2(), bd.k()), (0, 0, 1));
        assert_relative_eq!(bd.t.abs(), DMatrix::identity(2, 2), epsilon = 1e-14);
    }

    #[test]
    fn scrambled_double_integrator_recovers_jordan_pair() {
        let t = mat(2, 2, &[2.0, 1.0, -0.5, 1.5]);
        let g = double_integrator().similarity(&t).unwrap();
        let bd = to_block_diagonal(&g).unwrap();
        assert_eq!(bd.k(), 1);
        let back = bd.to_state_space().unwrap();
        assert_eq!(back.a(), &mat(2, 2, &[0.0, 1.0, 0.0, 0.0]));
        let s = Complex::new(1.0, 1.0);
        let want = Complex::new(1.0, 0.0) / (s * s);
        assert!((back.eval_tf(s).unwrap()[(0, 0)] - want).norm() < 1e-12);
    }

    #[test]
    fn triple_integrator_rejected() {
        let g = StateSpaceModel::new(
            mat(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0]),
            mat(3, 1, &[0.0, 0.0, 1.0]),
            mat(1, 3, &[1.0, 0.0, 0.0]),
            mat(1, 1, &[0.0]),
        )
        .unwrap();
        assert!(matches!(to_block_diagonal(&g), Err(Error::JordanBlockTooLarge { size: 3 })));
    }

    #[test]
    fn rejects_non_minimal_and_proper() {
        let red = StateSpaceModel::new(
            mat(2, 2, &[-1.0, 0.0, 0.0, -2.0]),
            mat(2, 1, &[1.0, 0.0]),
            mat(1, 2, &[1.0, 0.0]),
            mat(1, 1, &[0.0]),
        )
        .unwrap();
        assert!(matches!(to_block_diagonal(&red), Err(Error::NotMinimal)));
        let proper =
            StateSpaceModel::new(mat(1, 1, &[-1.0]), mat(1, 1, &[1.0]), mat(1, 1, &[1.0]), mat(1, 1, &[1.0])).unwrap();
        assert!(matches!(to_block_diagonal(&proper), Err(Error::NotStrictlyProper)));
    }

    #[test]
    fn case_study_block_structure() {
        let g = case_study_modal().to_state_space().unwrap();
        let bd = to_block_diagonal(&g).unwrap();
        assert_eq!((bd.n1(), bd.n2(), bd.k()), (4, 0, 1));
        let mut eig: Vec<f64> = lti::eigenvalues(&bd.a1).iter().map(|z| z.im.abs()).collect();
        eig.sort_by(f64::total_cmp);
        for e in eig {
            assert_relative_eq!(e, 3.4, epsilon = 1e-10);
        }
    }

    #[test]
    fn case_study_laurent() {
        let g = case_study_modal().to_state_space().unwrap();
        let (l, num, diff) = laurent_cross_checked(&g).unwrap();
        assert_relative_eq!(l.g2, mat(2, 2, &[0.140679, 0.0, 0.0, 0.0]), epsilon = 1e-12);
        assert!(norm2(&l.g1) < 1e-12);
        // modal oracle: G0 = C1 / p1^2
        let c1 = mat(2, 2, &[3.0907, 3.5573e-4, 3.5573e-4, 2.35]);
        assert_relative_eq!(l.g0, c1 / (3.4 * 3.4), epsilon = 1e-12);
        assert!(diff < 1e-9, "{diff}");
        assert_eq!(num.method, LaurentMethod::NumericLimit);
    }

    #[test]
    fn pure_integrator_laurent() {
        let g =
            StateSpaceModel::new(mat(1, 1, &[0.0]), mat(1, 1, &[1.0]), mat(1, 1, &[1.0]), mat(1, 1, &[0.0])).unwrap();
        let l = laurent_coefficients(&g).unwrap();
        assert_eq!((l.g2[(0, 0)], l.g1[(0, 0)], l.g0[(0, 0)]), (0.0, 1.0, 0.0));
    }

    #[test]
    fn laurent_of_mixed_model_matches_partial_fractions() {
        // G = (s + 1)/s^2 + 2/(s + 3): G2 = 1, G1 = 1, G0 = 2/3
        let mut mm = ModalModel::new(1);
        mm.g1 = Some(mat(1, 1, &[1.0]));
        mm.g2 = Some(mat(1, 1, &[1.0]));
        let fb = mm.to_state_space().unwrap();
        let a = mat(3, 3, &[fb.a()[(0, 0)], fb.a()[(0, 1)], 0.0, fb.a()[(1, 0)], fb.a()[(1, 1)], 0.0, 0.0, 0.0, -3.0]);
        let b = mat(3, 1, &[fb.b()[(0, 0)], fb.b()[(1, 0)], 2.0]);
        let c = mat(1, 3, &[fb.c()[(0, 0)], fb.c()[(0, 1)], 1.0]);
        let g = StateSpaceModel::new(a, b, c, mat(1, 1, &[0.0])).unwrap();
        let (l, _, diff) = laurent_cross_checked(&g).unwrap();
        assert_relative_eq!(l.g2[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(l.g1[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(l.g0[(0, 0)], 2.0 / 3.0, epsilon = 1e-12);
        assert!(diff < 1e-9);
    }

    #[test]
    fn projector_with_square_y_vanishes() {
        let x = mat(2, 2, &[2.0, 1.0, 1.0, -3.0]);
        let y = mat(2, 2, &[1.0, 2.0, 0.5, -1.0]);
        assert!(norm2(&projector_p(&x, &y).unwrap()) < 1e-12);
    }

    #[test]
    fn projector_case_study_n2() {
        let gbar0 = mat(2, 2, &[-2.202938, -1.065004, -1.065004, -0.697118]);
        let j = mat(2, 1, &[0.3751, 0.0]);
        let n2 = projector_p(&gbar0, &j).unwrap();
        assert_relative_eq!(n2, mat(2, 2, &[0.0, 0.0, 0.0, -0.182252]), epsilon = 1e-3);
    }

    #[test]
    fn projector_singular_inner() {
        let x = mat(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let y = mat(2, 1, &[1.0, 0.0]);
        assert!(matches!(projector_p(&x, &y), Err(Error::SingularInner)));
    }

    #[test]
    fn f_matrix_scalar_double_integrator() {
        let l = LaurentCoefficients {
            g0: mat(1, 1, &[0.0]),
            g1: mat(1, 1, &[0.0]),
            g2: mat(1, 1, &[1.0]),
            method: LaurentMethod::Realization,
        };
        let f = build_f_matrix(&l).unwrap();
        assert_eq!(f.shape(), (1, 1));
        assert_relative_eq!(f[(0, 0)].abs(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn f_matrix_case_study_spans_e1() {
        let l = LaurentCoefficients {
            g0: DMatrix::zeros(2, 2),
            g1: DMatrix::zeros(2, 2),
            g2: mat(2, 2, &[0.14, 0.0, 0.0, 0.0]),
            method: LaurentMethod::Realization,
        };
        let f = build_f_matrix(&l).unwrap();
        assert_eq!(f.ncols(), 1);
        assert!(f[(1, 0)].abs() < 1e-12 * f[(0, 0)].abs());
    }

    #[test]
    fn f_matrix_identity_coefficients() {
        let l = LaurentCoefficients {
            g0: DMatrix::zeros(2, 2),
            g1: DMatrix::identity(2, 2),
            g2: DMatrix::identity(2, 2),
            method: LaurentMethod::Realization,
        };
        let f = build_f_matrix(&l).unwrap();
        let ftf = f.transpose() * &f;
        assert!(linalg::reciprocal_condition(&ftf) > 1e-8);
        let x = mat(2, 2, &[-2.0, 0.3, 0.3, -1.0]);
        assert!(projector_p(&x, &f).is_ok());
    }

    #[test]
    fn f_matrix_rejects_zero_g2() {
        let l = LaurentCoefficients {
            g0: DMatrix::zeros(1, 1),
            g1: DMatrix::identity(1, 1),
            g2: DMatrix::zeros(1, 1),
            method: LaurentMethod::Realization,
        };
        assert!(matches!(build_f_matrix(&l), Err(Error::G2Zero)));
    }

    fn sym_strategy(m: usize) -> impl Strategy<Value = DMatrix<f64>> {
        proptest::collection::vec(-2.0f64..2.0, m * m).prop_map(move |v| {
            let a = DMatrix::from_vec(m, m, v);
            (&a + a.transpose()) * 0.5
        })
    }

    proptest! {
        #[test]
        fn projector_annihilates_y_and_depends_on_range(
            x in sym_strategy(3),
            yv in proptest::collection::vec(-2.0f64..2.0, 6),
            rv in proptest::collection::vec(-2.0f64..2.0, 4),
        ) {
            let y = DMatrix::from_vec(3, 2, yv);
            let r = DMatrix::from_vec(2, 2, rv);
            prop_assume!(linalg::reciprocal_condition(&r) > 1e-3);
            prop_assume!(linalg::reciprocal_condition(&(y.transpose() * &x * &y)) > 1e-6);
            let p = projector_p(&x, &y).unwrap();
            prop_assert!(norm2(&(&p * &y)) <= 1e-10 * norm2(&x).max(1.0) * norm2(&y).max(1.0));
            let p2 = projector_p(&x, &(&y * &r)).unwrap();
            prop_assert!(norm2(&(&p - &p2)) <= 1e-8 * (1.0 + norm2(&p)));
        }
    }
}
