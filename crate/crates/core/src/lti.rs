//! State-space and modal models, transfer evaluation, minimality, the
//! positive-feedback interconnection and Hurwitz tests.

use alloc::format;
use alloc::vec::Vec;

use nalgebra::{Complex, DMatrix};

use crate::linalg::{self, norm2, svd_sorted};
use crate::{CMatrix, Error, Result};

/// Default Hurwitz margin.
pub const HURWITZ_MARGIN: f64 = 1e-8;

/// Relative rank threshold used when factoring modal coefficients.
pub const MODAL_RANK_REL_TOL: f64 = 1e-9;

/// `(A, B, C, D)` with `m` inputs and `m` outputs.
#[derive(Debug, Clone, PartialEq)]
pub struct StateSpaceModel {
    a: DMatrix<f64>,
    b: DMatrix<f64>,
    c: DMatrix<f64>,
    d: DMatrix<f64>,
}

fn to_complex(m: &DMatrix<f64>) -> CMatrix {
    m.map(|x| Complex::new(x, 0.0))
}

impl StateSpaceModel {
    pub fn new(a: DMatrix<f64>, b: DMatrix<f64>, c: DMatrix<f64>, d: DMatrix<f64>) -> Result<Self> {
        let n = a.nrows();
        let m = d.nrows();
        let ok =
            a.ncols() == n && b.nrows() == n && c.ncols() == n && d.ncols() == m && b.ncols() == m && c.nrows() == m;
        if !ok {
            return Err(Error::DimensionMismatch(format!(
                "A {}x{}, B {}x{}, C {}x{}, D {}x{} do not form a square system",
                a.nrows(),
                a.ncols(),
                b.nrows(),
                b.ncols(),
                c.nrows(),
                c.ncols(),
                d.nrows(),
                d.ncols()
            )));
        }
        if a.iter().chain(b.iter()).chain(c.iter()).chain(d.iter()).any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("model matrices must be finite".into()));
        }
        Ok(Self { a, b, c, d })
    }

    /// Memoryless gain `y = D u`.
    pub fn static_gain(d: DMatrix<f64>) -> Result<Self> {
        let m = d.nrows();
        Self::new(DMatrix::zeros(0, 0), DMatrix::zeros(0, m), DMatrix::zeros(m, 0), d)
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn b(&self) -> &DMatrix<f64> {
        &self.b
    }

    pub fn c(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn d(&self) -> &DMatrix<f64> {
        &self.d
    }

    pub fn states(&self) -> usize {
        self.a.nrows()
    }

    pub fn ports(&self) -> usize {
        self.d.nrows()
    }

    /// `||D|| <= 1e-12 * max(1, ||C|| ||B||)`.
    pub fn is_strictly_proper(&self) -> bool {
        let scale = (norm2(&self.c) * norm2(&self.b)).max(1.0);
        norm2(&self.d) <= 1e-12 * scale
    }

    /// `C (sI - A)^{-1} B + D` via an LU solve.
    pub fn eval_tf(&self, s: Complex<f64>) -> Result<CMatrix> {
        let n = self.states();
        let mut out = to_complex(&self.d);
        if n == 0 {
            return Ok(out);
        }
        let mut m = to_complex(&self.a) * Complex::new(-1.0, 0.0);
        for i in 0..n {
            m[(i, i)] += s;
        }
        let lu = m.lu();
        let u = lu.u();
        let diag: Vec<f64> = (0..n).map(|i| u[(i, i)].norm()).collect();
        let hi = diag.iter().copied().fold(0.0, f64::max);
        let lo = diag.iter().copied().fold(f64::INFINITY, f64::min);
        if hi == 0.0 || lo <= 1e-13 * hi.max(s.norm()) {
            return Err(Error::SingularAtS { re: s.re, im: s.im });
        }
        let x = lu.solve(&to_complex(&self.b)).ok_or(Error::SingularAtS { re: s.re, im: s.im })?;
        out += to_complex(&self.c) * x;
        Ok(out)
    }

    /// Real part of `G(0)`.
    pub fn dc_gain(&self) -> Result<DMatrix<f64>> {
        Ok(self.eval_tf(Complex::new(0.0, 0.0))?.map(|z| z.re))
    }

    pub fn eigenvalues(&self) -> Vec<Complex<f64>> {
        eigenvalues(&self.a)
    }

    /// Realization in new coordinates `x = T z`.
    pub fn similarity(&self, t: &DMatrix<f64>) -> Result<Self> {
        let tinv =
            linalg::try_inverse(t).ok_or_else(|| Error::InvalidArgument("similarity transform is singular".into()))?;
        Self::new(&tinv * &self.a * t, &tinv * &self.b, &self.c * t, self.d.clone())
    }

    /// The model scaled by `alpha` (output side).
    pub fn scaled(&self, alpha: f64) -> Self {
        Self { a: self.a.clone(), b: self.b.clone(), c: &self.c * alpha, d: &self.d * alpha }
    }
}

/// Eigenvalues of a real square matrix.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    if m.is_empty() {
        return Vec::new();
    }
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Largest real part of the spectrum (`-inf` for an empty matrix).
pub fn spectral_abscissa(m: &DMatrix<f64>) -> f64 {
    eigenvalues(m).iter().map(|z| z.re).fold(f64::NEG_INFINITY, f64::max)
}

/// True iff every eigenvalue has real part below `-margin`.
pub fn is_hurwitz(m: &DMatrix<f64>, margin: f64) -> bool {
    spectral_abscissa(m) < -margin
}

/// Groups eigenvalues lying within `radius` of each other (single linkage).
pub(crate) fn cluster_eigenvalues(vals: &[Complex<f64>], radius: f64) -> Vec<Vec<Complex<f64>>> {
    let mut clusters: Vec<Vec<Complex<f64>>> = Vec::new();
    for &v in vals {
        let hits: Vec<usize> = clusters
            .iter()
            .enumerate()
            .filter(|(_, c)| c.iter().any(|w| (w - v).norm() <= radius))
            .map(|(i, _)| i)
            .collect();
        match hits.split_first() {
            None => clusters.push(alloc::vec![v]),
            Some((&first, rest)) => {
                for &i in rest.iter().rev() {
                    let moved = clusters.remove(i);
                    clusters[first].extend(moved);
                }
                clusters[first].push(v);
            }
        }
    }
    clusters
}

pub(crate) fn cluster_center(c: &[Complex<f64>]) -> Complex<f64> {
    let sum: Complex<f64> = c.iter().sum();
    sum / c.len() as f64
}

/// `[B, AB, ..., A^{n-1} B]`.
pub fn controllability_matrix(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = a.nrows();
    let m = b.ncols();
    let mut out = DMatrix::zeros(n, n * m);
    let mut blk = b.clone();
    for k in 0..n {
        out.view_mut((0, k * m), (n, m)).copy_from(&blk);
        blk = a * blk;
    }
    out
}

pub fn observability_matrix(a: &DMatrix<f64>, c: &DMatrix<f64>) -> DMatrix<f64> {
    controllability_matrix(&a.transpose(), &c.transpose()).transpose()
}

/// Minimality by the PBH rank test at every distinct eigenvalue:
/// `rank [lambda I - A, B] = n` and `rank [lambda I - A; C] = n`.
pub fn is_minimal(model: &StateSpaceModel) -> bool {
    let n = model.states();
    if n == 0 {
        return true;
    }
    let a = model.a();
    let scale = norm2(a).max(norm2(model.b())).max(norm2(model.c())).max(1.0);
    let radius = 1e-7 * norm2(a).max(1.0);
    let tol = 1e-7 * scale;
    let ac = to_complex(a);
    let bc = to_complex(model.b());
    let cc = to_complex(model.c());
    for cluster in cluster_eigenvalues(&model.eigenvalues(), radius) {
        let lam = cluster_center(&cluster);
        let mut shifted = -ac.clone();
        for i in 0..n {
            shifted[(i, i)] += lam;
        }
        let mut ctrb = CMatrix::zeros(n, n + bc.ncols());
        ctrb.view_mut((0, 0), (n, n)).copy_from(&shifted);
        ctrb.view_mut((0, n), (n, bc.ncols())).copy_from(&bc);
        let mut obsv = CMatrix::zeros(n + cc.nrows(), n);
        obsv.view_mut((0, 0), (n, n)).copy_from(&shifted);
        obsv.view_mut((n, 0), (cc.nrows(), n)).copy_from(&cc);
        let sc = linalg::complex_singular_values(&ctrb);
        let so = linalg::complex_singular_values(&obsv);
        let min_c = sc.get(n - 1).copied().unwrap_or(0.0);
        let min_o = so.get(n - 1).copied().unwrap_or(0.0);
        if min_c <= tol || min_o <= tol {
            return false;
        }
    }
    true
}

/// Closed-loop state matrix of the positive-feedback loop `[G, Gbar]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub a: DMatrix<f64>,
    pub well_posed: bool,
}

pub fn closed_loop(g: &StateSpaceModel, gbar: &StateSpaceModel) -> Result<ClosedLoop> {
    let m = g.ports();
    if gbar.ports() != m {
        return Err(Error::DimensionMismatch(format!("plant has {} ports, controller has {}", m, gbar.ports())));
    }
    let ident = DMatrix::<f64>::identity(m, m);
    let e = linalg::try_inverse(&(&ident - g.d() * gbar.d())).ok_or(Error::IllPosed)?;
    let (n, nb) = (g.states(), gbar.states());
    let (a, b, c, d) = (g.a(), g.b(), g.c(), g.d());
    let (ab, bb, cb, db) = (gbar.a(), gbar.b(), gbar.c(), gbar.d());
    let mut out = DMatrix::zeros(n + nb, n + nb);
    out.view_mut((0, 0), (n, n)).copy_from(&(a + b * db * &e * c));
    out.view_mut((0, n), (n, nb)).copy_from(&(b * cb + b * db * &e * d * cb));
    out.view_mut((n, 0), (nb, n)).copy_from(&(bb * &e * c));
    out.view_mut((n, n), (nb, nb)).copy_from(&(ab + bb * &e * d * cb));
    Ok(ClosedLoop { a: out, well_posed: true })
}

/// One lightly damped (or undamped) mode `C / (s^2 + 2 zeta p s + p^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Mode {
    pub frequency: f64,
    pub coefficient: DMatrix<f64>,
    pub damping: f64,
}

impl Mode {
    pub fn undamped(frequency: f64, coefficient: DMatrix<f64>) -> Self {
        Self { frequency, coefficient, damping: 0.0 }
    }
}

/// Sum of modes plus optional free-body terms `G1/s + G2/s^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalModel {
    pub ports: usize,
    pub modes: Vec<Mode>,
    pub g1: Option<DMatrix<f64>>,
    pub g2: Option<DMatrix<f64>>,
}

impl ModalModel {
    pub fn new(ports: usize) -> Self {
        Self { ports, modes: Vec::new(), g1: None, g2: None }
    }

    /// Direct evaluation of the modal sum.
    pub fn eval(&self, s: Complex<f64>) -> CMatrix {
        let m = self.ports;
        let mut out = CMatrix::zeros(m, m);
        for mode in &self.modes {
            let p = mode.frequency;
            let den = s * s + s * (2.0 * mode.damping * p) + p * p;
            out += to_complex(&mode.coefficient) / den;
        }
        if let Some(g1) = &self.g1 {
            out += to_complex(g1) / s;
        }
        if let Some(g2) = &self.g2 {
            out += to_complex(g2) / (s * s);
        }
        out
    }

    pub fn to_state_space(&self) -> Result<StateSpaceModel> {
        modal_to_ss(self)
    }
}

/// Rank factorization `M = L R` with `L` m x r, `R` r x m.
fn rank_factor(m: &DMatrix<f64>, rel_tol: f64) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if let Ok(sym) = linalg::symmetrize(m) {
        if linalg::definiteness(&sym)?.kind.is_psd() {
            let f = linalg::full_rank_factor_tol(&sym, rel_tol)?;
            let l = f.factor;
            let r = l.transpose();
            return Ok((l, r));
        }
    }
    let (u, sigma, v) = svd_sorted(m);
    let cut = rel_tol * sigma.first().copied().unwrap_or(0.0);
    let r = sigma.iter().filter(|&&s| s > cut && s > 0.0).count();
    let mut l = DMatrix::zeros(m.nrows(), r);
    let mut rt = DMatrix::zeros(r, m.ncols());
    for (i, s) in sigma.iter().take(r).enumerate() {
        let sq = libm::sqrt(*s);
        l.set_column(i, &(u.column(i) * sq));
        rt.set_row(i, &(v.column(i).transpose() * sq));
    }
    Ok((l, rt))
}

/// Block-diagonal realization of a [`ModalModel`].
///
/// State order: one `[[0, I], [-p^2 I, -2 zeta p I]]` block per mode (the
/// coefficient is factored through its rank), then the `A = 0` block for the
/// part of `G1` outside `range(G2)`, then the nilpotent `[[0, I], [0, 0]]`
/// block carrying `G2 = J J^T` and the `range(G2)` part of `G1`. The result
/// has order `sum 2 rank(C_i) + rank([[G1, G2], [G2, 0]])`, which is minimal
/// when the mode frequencies are distinct.
pub fn modal_to_ss(model: &ModalModel) -> Result<StateSpaceModel> {
    let m = model.ports;
    let check = |x: &DMatrix<f64>, what: &str| -> Result<()> {
        if x.shape() != (m, m) {
            return Err(Error::DimensionMismatch(format!("{what} must be {m}x{m}")));
        }
        Ok(())
    };
    let mut last = 0.0;
    for mode in &model.modes {
        check(&mode.coefficient, "mode coefficient")?;
        if !(mode.frequency > last) || !mode.frequency.is_finite() {
            return Err(Error::InvalidArgument("mode frequencies must be positive and strictly increasing".into()));
        }
        if mode.damping < 0.0 {
            return Err(Error::InvalidArgument("mode damping must be nonnegative".into()));
        }
        last = mode.frequency;
    }

    // (A, B, C) blocks
    let mut blocks: Vec<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> = Vec::new();
    for mode in &model.modes {
        let coeff = linalg::symmetrize(&mode.coefficient)?;
        let (l, r) = rank_factor(&coeff, MODAL_RANK_REL_TOL)?;
        let k = l.ncols();
        if k == 0 {
            continue;
        }
        let p = mode.frequency;
        let mut a = DMatrix::zeros(2 * k, 2 * k);
        for i in 0..k {
            a[(i, k + i)] = 1.0;
            a[(k + i, i)] = -p * p;
            a[(k + i, k + i)] = -2.0 * mode.damping * p;
        }
        let mut b = DMatrix::zeros(2 * k, m);
        b.view_mut((k, 0), (k, m)).copy_from(&r);
        let mut c = DMatrix::zeros(m, 2 * k);
        c.view_mut((0, 0), (m, k)).copy_from(&l);
        blocks.push((a, b, c));
    }

    let g1 = match &model.g1 {
        Some(g) => {
            check(g, "G1")?;
            g.clone()
        }
        None => DMatrix::zeros(m, m),
    };
    let j = match &model.g2 {
        Some(g2) => {
            check(g2, "G2")?;
            let sym = linalg::symmetrize(g2)?;
            let d = linalg::definiteness(&sym)?;
            if !d.kind.is_psd() {
                return Err(Error::NotPsd { min_eig: d.min_eig });
            }
            linalg::full_rank_factor_tol(&sym, MODAL_RANK_REL_TOL)?.factor
        }
        None => DMatrix::zeros(m, 0),
    };
    let k = j.ncols();
    // split G1 into the range(J) parts (carried by the Jordan pairs) and the rest
    let (proj, jpinv) = if k > 0 {
        let jtj_inv = linalg::try_inverse(&(j.transpose() * &j)).ok_or(Error::SingularInner)?;
        let jpinv = &jtj_inv * j.transpose();
        (&j * &jpinv, jpinv)
    } else {
        (DMatrix::zeros(m, m), DMatrix::zeros(0, m))
    };
    let perp = DMatrix::<f64>::identity(m, m) - &proj;
    let rest = &perp * &g1 * &perp;
    if norm2(&rest) > MODAL_RANK_REL_TOL * norm2(&g1) {
        let (l, r) = rank_factor(&rest, MODAL_RANK_REL_TOL)?;
        let n2 = l.ncols();
        if n2 > 0 {
            blocks.push((DMatrix::zeros(n2, n2), r, l));
        }
    }
    if k > 0 {
        let b3a = &jpinv * &g1;
        let c3b = &perp * &g1 * jpinv.transpose();
        let mut a = DMatrix::zeros(2 * k, 2 * k);
        a.view_mut((0, k), (k, k)).fill_with_identity();
        let mut b = DMatrix::zeros(2 * k, m);
        b.view_mut((0, 0), (k, m)).copy_from(&b3a);
        b.view_mut((k, 0), (k, m)).copy_from(&j.transpose());
        let mut c = DMatrix::zeros(m, 2 * k);
        c.view_mut((0, 0), (m, k)).copy_from(&j);
        c.view_mut((0, k), (m, k)).copy_from(&c3b);
        blocks.push((a, b, c));
    }

    let n: usize = blocks.iter().map(|(a, _, _)| a.nrows()).sum();
    let mut a = DMatrix::zeros(n, n);
    let mut b = DMatrix::zeros(n, m);
    let mut c = DMatrix::zeros(m, n);
    let mut off = 0;
    for (ab, bb, cb) in &blocks {
        let k = ab.nrows();
        a.view_mut((off, off), (k, k)).copy_from(ab);
        b.view_mut((off, 0), (k, m)).copy_from(bb);
        c.view_mut((0, off), (m, k)).copy_from(cb);
        off += k;
    }
    StateSpaceModel::new(a, b, c, DMatrix::zeros(m, m))
}
