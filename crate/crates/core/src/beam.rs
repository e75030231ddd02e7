//! Flexible slewing beam on a rigid hub with piezoelectric actuator and
//! sensor films: Laplace-domain transfer matrix from (hub torque, actuator
//! voltage) to (hub angle, sensor voltage), its characteristic function,
//! imaginary-axis roots and residues, and truncated modal approximations.
//!
//! Euler-Bernoulli model `Y'''' = beta^4 Y` with `beta^4 = -rho A s^2 / (E I)`,
//! pinned at the hub (`Y(0) = 0`) with hub balance
//! `E I Y''(0) - I_h s^2 Y'(0) + tau = 0` and a free tip. The actuator film
//! over `[x1, x2]` applies the bending moment `Ca Va`; the sensor reads
//! `Vs = Cs (Y'(x2) - Y'(x1))`.

use alloc::vec::Vec;

use nalgebra::{Complex, ComplexField, DMatrix};

use crate::freebody::{self, LaurentCoefficients};
use crate::linalg::{self, expm};
use crate::lti::{ModalModel, Mode};
use crate::ni::{residue_record, ResidueRecord};
use crate::{CMatrix, Error, Result};

/// Step of the sign-change scan used by [`find_modal_roots`] (rad/s).
pub const ROOT_SCAN_STEP: f64 = 0.01;
/// Relative width at which root bisection stops.
pub const ROOT_REL_TOL: f64 = 1e-12;
/// A frequency is accepted as a root when the Newton correction
/// `|D / D'|` is below this fraction of it.
pub const ROOT_ACCEPT_REL: f64 = 1e-6;
/// Radius of the residue contour relative to the root frequency.
pub const RESIDUE_CONTOUR_REL: f64 = 1e-3;
const RESIDUE_CONTOUR_POINTS: usize = 32;

/// Physical constants of the arm (SI units unless noted).
#[derive(Debug, Clone, PartialEq)]
pub struct BeamParameters {
    /// Hub inertia `I_h` (N m s^2).
    pub hub_inertia: f64,
    /// Beam length `L` (m).
    pub length: f64,
    /// Density `rho`, used as mass per unit volume (kg/m^3).
    pub density: f64,
    /// Cross-section area `A` (m^2).
    pub area: f64,
    /// Young's modulus `E` (N/m^2).
    pub youngs_modulus: f64,
    /// Area moment of inertia `I` (m^4).
    pub moment_of_inertia: f64,
    /// Piezoelectric coupling coefficient `k31` (may be negative).
    pub k31: f64,
    /// Film capacitance (uF/m^2).
    pub capacitance: f64,
    /// Film thickness (m).
    pub thickness: f64,
    /// Actuator constant `Ca`: bending moment per volt.
    pub actuator_constant: f64,
    /// Sensor constant `Cs`: volts per radian of relative slope.
    pub sensor_constant: f64,
}

impl BeamParameters {
    /// The aluminium arm with unit actuator and sensor constants.
    pub fn robotic_arm() -> Self {
        Self {
            hub_inertia: 0.0348,
            length: 2.0,
            density: 2712.6,
            area: 483.87e-6,
            youngs_modulus: 69.0e9,
            moment_of_inertia: 1.63e-9,
            k31: -0.340,
            capacitance: 68.35,
            thickness: 3.05e-4,
            actuator_constant: 1.0,
            sensor_constant: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("hub_inertia", self.hub_inertia),
            ("length", self.length),
            ("density", self.density),
            ("area", self.area),
            ("youngs_modulus", self.youngs_modulus),
            ("moment_of_inertia", self.moment_of_inertia),
            ("capacitance", self.capacitance),
            ("thickness", self.thickness),
            ("actuator_constant", self.actuator_constant),
            ("sensor_constant", self.sensor_constant),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(alloc::format!("{name} must be positive and finite, got {v}")));
            }
        }
        if !self.k31.is_finite() {
            return Err(Error::InvalidArgument("k31 must be finite".into()));
        }
        Ok(())
    }

    /// `E I`.
    pub fn flexural_rigidity(&self) -> f64 {
        self.youngs_modulus * self.moment_of_inertia
    }

    /// `rho A`.
    pub fn mass_per_length(&self) -> f64 {
        self.density * self.area
    }

    /// Rigid-body inertia about the hub, `I_h + rho A L^3 / 3`.
    pub fn total_inertia(&self) -> f64 {
        self.hub_inertia + self.mass_per_length() * self.length * self.length * self.length / 3.0
    }
}

impl Default for BeamParameters {
    fn default() -> Self {
        Self::robotic_arm()
    }
}

/// Transfer matrix sample at one Laplace point.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamTransferSample {
    pub s: Complex<f64>,
    /// Rows (hub angle, sensor voltage), columns (hub torque, actuator voltage).
    pub g: CMatrix,
    /// Characteristic function [`d_of_s`] at `s`.
    pub d_value: Complex<f64>,
}

fn c(re: f64) -> Complex<f64> {
    Complex::new(re, 0.0)
}

/// `beta^4 = -rho A s^2 / (E I)`.
fn beta4(p: &BeamParameters, s: Complex<f64>) -> Complex<f64> {
    -s * s * (p.mass_per_length() / p.flexural_rigidity())
}

/// Transfer matrix with the films spanning `[x1, x2]`.
pub fn beam_tf(p: &BeamParameters, s: Complex<f64>, x1: f64, x2: f64) -> Result<BeamTransferSample> {
    p.validate()?;
    let l = p.length;
    if !(0.0 <= x1 && x1 < x2 && x2 <= l) {
        return Err(Error::InvalidArgument(alloc::format!("need 0 <= x1 < x2 <= L, got [{x1}, {x2}]")));
    }
    if !(s.re.is_finite() && s.im.is_finite()) {
        return Err(Error::InvalidArgument("s must be finite".into()));
    }
    let ei = p.flexural_rigidity();
    let mut companion = CMatrix::zeros(4, 4);
    companion[(0, 1)] = c(1.0);
    companion[(1, 2)] = c(1.0);
    companion[(2, 3)] = c(1.0);
    companion[(3, 0)] = beta4(p, s);
    let propagate = |len: f64| -> CMatrix {
        if len == 0.0 {
            CMatrix::identity(4, 4)
        } else {
            expm(&(&companion * c(len)))
        }
    };
    // Columns: coefficients of the unknowns (Y'(0), Y'''(0)) and the inputs (tau, Va).
    let mut z = CMatrix::zeros(4, 4);
    z[(1, 0)] = c(1.0);
    z[(2, 0)] = s * s * (p.hub_inertia / ei);
    z[(3, 1)] = c(1.0);
    z[(2, 2)] = c(-1.0 / ei);
    let jump = p.actuator_constant / ei;
    let mut z1 = propagate(x1) * z;
    z1[(2, 3)] += jump;
    let mut z2 = propagate(x2 - x1) * &z1;
    z2[(2, 3)] -= jump;
    let zl = propagate(l - x2) * &z2;

    let mu = zl.view((2, 0), (2, 2)).into_owned();
    let mf = zl.view((2, 2), (2, 2)).into_owned();
    let mut scaled = mu.clone();
    for mut col in scaled.column_iter_mut() {
        let n = col.norm();
        if n > 0.0 {
            col /= c(n);
        }
    }
    let singular = Error::SingularBoundarySystem { re: s.re, im: s.im };
    if linalg::reciprocal_condition(&scaled) < 1e-13 {
        return Err(singular);
    }
    let unknowns = -(mu.lu().solve(&mf).ok_or(singular)?);
    let mut x = CMatrix::zeros(4, 2);
    x.view_mut((0, 0), (2, 2)).copy_from(&unknowns);
    x[(2, 0)] = c(1.0);
    x[(3, 1)] = c(1.0);

    let theta = x.row(0).into_owned();
    let slope1 = z1.row(1) * &x;
    let slope2 = z2.row(1) * &x;
    let vs = (slope2 - slope1) * c(p.sensor_constant);
    let mut g = CMatrix::zeros(2, 2);
    g.row_mut(0).copy_from(&theta);
    g.row_mut(1).copy_from(&vs);
    Ok(BeamTransferSample { s, g, d_value: d_of_s(p, s) })
}

/// Transfer matrix with films over the whole beam.
pub fn beam_tf_full(p: &BeamParameters, s: Complex<f64>) -> Result<BeamTransferSample> {
    beam_tf(p, s, 0.0, p.length)
}

/// Characteristic function
/// `D(s) = 4 beta E I rho A (cos(beta L) sinh(beta L) - cosh(beta L) sin(beta L))
///       - 4 beta^4 E I I_h (1 + cos(beta L) cosh(beta L))`
/// with `beta` the principal fourth root of `beta^4`. Its nonzero roots on the
/// imaginary axis are the poles of the transfer matrix.
pub fn d_of_s(p: &BeamParameters, s: Complex<f64>) -> Complex<f64> {
    let b4 = beta4(p, s);
    let b = ComplexField::sqrt(ComplexField::sqrt(b4));
    let bl = b * p.length;
    let ei = p.flexural_rigidity();
    let (cs, sn, ch, sh) =
        (ComplexField::cos(bl), ComplexField::sin(bl), ComplexField::cosh(bl), ComplexField::sinh(bl));
    b * (4.0 * ei * p.mass_per_length()) * (cs * sh - ch * sn) - b4 * (4.0 * ei * p.hub_inertia) * (c(1.0) + cs * ch)
}

/// `D(j omega)`, which is real for real `omega`.
pub fn d_of_omega(p: &BeamParameters, omega: f64) -> f64 {
    let b4 = p.mass_per_length() * omega * omega / p.flexural_rigidity();
    let b = libm::sqrt(libm::sqrt(b4));
    let bl = b * p.length;
    let ei = p.flexural_rigidity();
    let (cs, sn, ch, sh) = (libm::cos(bl), libm::sin(bl), libm::cosh(bl), libm::sinh(bl));
    4.0 * b * ei * p.mass_per_length() * (cs * sh - ch * sn) - 4.0 * b4 * ei * p.hub_inertia * (1.0 + cs * ch)
}

/// `d/d omega D(j omega)` by central differences.
pub fn d_prime_omega(p: &BeamParameters, omega: f64) -> f64 {
    let h = 1e-5 * omega.abs().max(1e-3);
    (d_of_omega(p, omega + h) - d_of_omega(p, omega - h)) / (2.0 * h)
}

fn bisect_root(p: &BeamParameters, mut lo: f64, mut hi: f64) -> f64 {
    let mut flo = d_of_omega(p, lo);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= ROOT_REL_TOL * mid || mid == lo || mid == hi {
            break;
        }
        let fmid = d_of_omega(p, mid);
        if fmid == 0.0 {
            return mid;
        }
        if (fmid > 0.0) == (flo > 0.0) {
            lo = mid;
            flo = fmid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// First `count` positive roots of `omega -> D(j omega)` below `omega_max`,
/// ascending, by a sign-change scan with step [`ROOT_SCAN_STEP`] refined by
/// bisection. The root at the origin (free body motion) is excluded.
pub fn find_modal_roots(p: &BeamParameters, count: usize, omega_max: f64) -> Result<Vec<f64>> {
    p.validate()?;
    if count == 0 {
        return Err(Error::InvalidArgument("count must be at least 1".into()));
    }
    let mut roots = Vec::with_capacity(count);
    let mut w_prev = ROOT_SCAN_STEP;
    let mut f_prev = d_of_omega(p, w_prev);
    let mut i = 1usize;
    while roots.len() < count {
        let w = ROOT_SCAN_STEP * (i + 1) as f64;
        if w > omega_max {
            break;
        }
        let f = d_of_omega(p, w);
        if f == 0.0 {
            roots.push(w);
        } else if f_prev != 0.0 && (f > 0.0) != (f_prev > 0.0) {
            roots.push(bisect_root(p, w_prev, w));
        }
        w_prev = w;
        f_prev = f;
        i += 1;
    }
    if roots.len() < count {
        return Err(Error::InsufficientRange { found: roots.len(), requested: count });
    }
    Ok(roots)
}

/// Like [`find_modal_roots`] but doubles the search range until enough roots
/// are found.
pub fn first_modal_roots(p: &BeamParameters, count: usize) -> Result<Vec<f64>> {
    let mut w_max = 100.0;
    loop {
        match find_modal_roots(p, count, w_max) {
            Err(Error::InsufficientRange { .. }) if w_max < 1e6 => w_max *= 2.0,
            other => return other,
        }
    }
}

/// Residue at an imaginary-axis root with the pieces it is built from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModalResidue {
    pub omega: f64,
    /// `N(j omega0) = lim G(s) D(s)`.
    pub numerator: CMatrix,
    /// `d/d omega D(j omega)` at the root.
    pub d_prime: f64,
    /// `K = -N / D'` with Hermitian and definiteness diagnostics.
    pub record: ResidueRecord,
}

/// `K = lim_{s -> j w0} (s - j w0) j G(s) = -N(j w0) / D'(w0)` where `D'` is the
/// derivative of `omega -> D(j omega)`. `N` and `D'` are Cauchy integrals on a
/// small circle around the root, so no sample lands on the pole.
pub fn modal_residue(p: &BeamParameters, omega0: f64) -> Result<ModalResidue> {
    p.validate()?;
    if !(omega0 > 0.0 && omega0.is_finite()) {
        return Err(Error::NotARoot { omega: omega0 });
    }
    let dp = d_prime_omega(p, omega0);
    let d0 = d_of_omega(p, omega0);
    if !(dp != 0.0 && (d0 / dp).abs() <= ROOT_ACCEPT_REL * omega0) {
        return Err(Error::NotARoot { omega: omega0 });
    }
    let s0 = Complex::new(0.0, omega0);
    let r = RESIDUE_CONTOUR_REL * omega0;
    let mut numerator = CMatrix::zeros(2, 2);
    let mut ds = Complex::new(0.0, 0.0);
    for i in 0..RESIDUE_CONTOUR_POINTS {
        let theta = 2.0 * core::f64::consts::PI * (i as f64 + 0.5) / RESIDUE_CONTOUR_POINTS as f64;
        let offset = Complex::from_polar(r, theta);
        let sample = beam_tf_full(p, s0 + offset)?;
        numerator += sample.g * sample.d_value;
        ds += sample.d_value / offset;
    }
    let n = RESIDUE_CONTOUR_POINTS as f64;
    numerator /= c(n);
    ds /= n;
    // d/d omega D(j omega) = j dD/ds
    let d_prime = (ds * Complex::new(0.0, 1.0)).re;
    let k = &numerator * (Complex::new(0.0, 1.0) / ds);
    Ok(ModalResidue { omega: omega0, numerator, d_prime, record: residue_record(omega0, k) })
}

/// Numeric Laurent coefficients of the beam transfer matrix at the origin.
pub fn free_body_limit(p: &BeamParameters) -> Result<LaurentCoefficients> {
    let first = first_modal_roots(p, 1)?[0];
    freebody::laurent_limit(|s| beam_tf_full(p, s).map(|x| x.g), first)
}

/// Truncated modal model `C0 / s^2 + sum_i Ci / (s^2 + p_i^2)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDimApprox {
    pub model: ModalModel,
    /// Retained nonzero poles `p_1 .. p_n`.
    pub poles: Vec<f64>,
    /// Calibration constant `k` making `k s^2 prod (s^2 + p_i^2)` equal to
    /// `D(s)` at `s = j omega0`.
    pub k: f64,
    /// Calibration frequency: geometric mean of `p_n` and `p_{n+1}`.
    pub omega0: f64,
    /// Static contribution of the discarded modes,
    /// `G0 - sum_i Ci / p_i^2` with `G0` the beam's constant Laurent term.
    pub static_residual: DMatrix<f64>,
}

impl FiniteDimApprox {
    /// Modal model plus [`Self::static_residual`] as a feedthrough.
    pub fn eval_corrected(&self, s: Complex<f64>) -> CMatrix {
        self.model.eval(s) + self.static_residual.map(c)
    }
}

/// `n`-mode approximation with `C0` the numeric free-body limit and
/// `Ci = 2 p_i K_i` from the modal residues, which are the exact
/// partial-fraction coefficients of the beam at its poles.
pub fn finite_dim_approx(p: &BeamParameters, n: usize) -> Result<FiniteDimApprox> {
    if n == 0 {
        return Err(Error::InvalidArgument("need at least one mode".into()));
    }
    let roots = first_modal_roots(p, n + 1)?;
    let poles: Vec<f64> = roots[..n].to_vec();
    let limit = free_body_limit(p)?;
    let mut model = ModalModel::new(2);
    model.g2 = Some(linalg::symmetrize(&limit.g2).unwrap_or_else(|_| limit.g2.clone()));
    for &pi in &poles {
        let res = modal_residue(p, pi)?;
        let k = res.record.residue.map(|z| z.re);
        let coef = (&k + k.transpose()) * pi;
        model.modes.push(Mode::undamped(pi, coef));
    }
    let mut static_residual = limit.g0.clone();
    for mode in &model.modes {
        static_residual -= &mode.coefficient / (mode.frequency * mode.frequency);
    }
    let omega0 = libm::sqrt(roots[n - 1] * roots[n]);
    let prod: f64 = poles.iter().map(|pi| pi * pi - omega0 * omega0).product();
    let k = -d_of_omega(p, omega0) / (omega0 * omega0 * prod);
    Ok(FiniteDimApprox { model, poles, k, omega0, static_residual })
}

/// One row of the residue scan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScanPoint {
    pub omega: f64,
    pub value: f64,
}

/// Minimum eigenvalue of `D'(w)^2 K(w) + gamma D(w)^2` over `omega`, where
/// `K(w) = -G(j w) D(w) / D'(w)` extends the residue off the roots. Points
/// where the boundary system is singular are skipped.
pub fn emit_residue_scan(p: &BeamParameters, gamma: f64, omega: &[f64]) -> Result<Vec<ScanPoint>> {
    p.validate()?;
    let mut out = Vec::with_capacity(omega.len());
    for &w in omega {
        let sample = match beam_tf_full(p, Complex::new(0.0, w)) {
            Ok(x) => x,
            Err(Error::SingularBoundarySystem { .. }) => continue,
            Err(e) => return Err(e),
        };
        let d = sample.d_value.re;
        let dp = d_prime_omega(p, w);
        let g = sample.g.map(|z| z.re);
        let m = -(&g + g.transpose()) * (0.5 * dp * d) + DMatrix::identity(2, 2) * (gamma * d * d);
        let (vals, _) = linalg::sym_eigen_sorted(&m);
        out.push(ScanPoint { omega: w, value: vals[0] });
    }
    Ok(out)
}

/// `points` equally spaced frequencies on `[w_min, w_max]`.
pub fn linear_grid(w_min: f64, w_max: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => alloc::vec![w_min],
        _ => (0..points).map(|i| w_min + (w_max - w_min) * i as f64 / (points - 1) as f64).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arm() -> BeamParameters {
        BeamParameters::robotic_arm()
    }

    #[test]
    fn table_constants_and_rigid_inertia() {
        let p = arm();
        p.validate().unwrap();
        assert!((p.total_inertia() - 3.534922032).abs() < 1e-8);
    }

    #[test]
    fn invalid_parameters_rejected() {
        let mut p = arm();
        p.length = -1.0;
        assert!(matches!(p.validate(), Err(Error::InvalidArgument(_))));
        assert!(beam_tf_full(&p, Complex::new(0.0, 1.0)).is_err());
    }

    #[test]
    fn d_vanishes_at_origin_and_is_real_on_axis() {
        let p = arm();
        assert_eq!(d_of_s(&p, Complex::new(0.0, 0.0)).norm(), 0.0);
        for w in [0.3, 7.0, 50.0, 400.0] {
            let d = d_of_s(&p, Complex::new(0.0, w));
            assert!(d.im.abs() <= 1e-12 * d.norm(), "{w}: {d}");
            assert!((d.re - d_of_omega(&p, w)).abs() <= 1e-10 * d.norm());
        }
    }

    #[test]
    fn roots_are_sorted_and_distinct() {
        let r = find_modal_roots(&arm(), 6, 1000.0).unwrap();
        assert!(r.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn insufficient_range_reported() {
        match find_modal_roots(&arm(), 3, 100.0) {
            Err(Error::InsufficientRange { found, requested }) => assert_eq!((found, requested), (2, 3)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn not_a_root_rejected() {
        assert!(matches!(modal_residue(&arm(), 20.0), Err(Error::NotARoot { .. })));
    }

    #[test]
    fn boundary_system_singular_at_root() {
        let p = arm();
        let w = find_modal_roots(&p, 1, 100.0).unwrap()[0];
        let g = beam_tf_full(&p, Complex::new(0.0, w));
        match g {
            Err(Error::SingularBoundarySystem { .. }) => {}
            Ok(x) => assert!(linalg::norm2(&x.g) > 1e6),
            Err(e) => panic!("{e:?}"),
        }
    }

    #[test]
    fn span_validation() {
        let p = arm();
        assert!(beam_tf(&p, Complex::new(0.0, 1.0), 1.0, 0.5).is_err());
        assert!(beam_tf(&p, Complex::new(0.0, 1.0), 0.5, 1.5).is_ok());
    }

    #[test]
    fn grid_endpoints() {
        let g = linear_grid(0.1, 260.0, 5);
        assert_eq!(g.len(), 5);
        assert_eq!(g[0], 0.1);
        assert!((g[4] - 260.0).abs() < 1e-12);
    }
}
