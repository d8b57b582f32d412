//! The calibrating 2-form on the half cylinder `x in [0, j]` and the mass
//! lower bounds it produces.
//!
//! `alpha = sqrt(1 + x^2) dx ^ d(y - x z / (1 + x^2))`. In the orthonormal
//! coframe `(dx, dy, dz - x dy)` it reads
//! `(e1^e2 - x e1^e3) / sqrt(1 + x^2)`, which is `*dz / sqrt(1 + x^2)`.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cylinder::CylinderMetric;
use crate::error::{Result, SystoleError};
use crate::metric::Point3;
use crate::quadrature::integrate_piecewise;

/// Components of a 2-form in `dx^dy, dx^dz, dy^dz`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TwoFormValue {
    pub xy: f64,
    pub xz: f64,
    pub yz: f64,
}

impl TwoFormValue {
    pub fn scale(self, s: f64) -> Self {
        TwoFormValue { xy: s * self.xy, xz: s * self.xz, yz: s * self.yz }
    }

    /// Antisymmetric matrix `w_ik = w(e_i, e_k)`.
    pub fn matrix(&self) -> Matrix3<f64> {
        Matrix3::new(0.0, self.xy, self.xz, -self.xy, 0.0, self.yz, -self.xz, -self.yz, 0.0)
    }

    fn from_matrix(m: &Matrix3<f64>) -> Self {
        TwoFormValue { xy: m[(0, 1)], xz: m[(0, 2)], yz: m[(1, 2)] }
    }

    /// Components in a new basis whose vectors are the columns of `frame`.
    pub fn in_frame(&self, frame: &Matrix3<f64>) -> Self {
        Self::from_matrix(&(frame.transpose() * self.matrix() * frame))
    }

    /// Pointwise comass for a metric with orthonormal coframe rows `coframe`.
    /// In dimension 3 every 2-form is simple, so the comass is the Euclidean
    /// norm of the components in an orthonormal frame.
    pub fn comass(&self, coframe: &Matrix3<f64>) -> f64 {
        let frame = coframe.try_inverse().expect("coframe is invertible");
        let w = self.in_frame(&frame);
        (w.xy * w.xy + w.xz * w.xz + w.yz * w.yz).sqrt()
    }
}

/// A smooth 2-form field on a coordinate domain.
pub trait TwoForm {
    fn eval(&self, p: Point3) -> TwoFormValue;
}

impl<F: Fn(Point3) -> TwoFormValue> TwoForm for F {
    fn eval(&self, p: Point3) -> TwoFormValue {
        self(p)
    }
}

/// `lambda = y - x z / (1 + x^2)`
pub fn lambda(p: Point3) -> f64 {
    p.y - p.x * p.z / (1.0 + p.x * p.x)
}

/// Components of `d lambda` in `(dx, dy, dz)`.
pub fn dlambda(p: Point3) -> Vector3<f64> {
    let q = 1.0 + p.x * p.x;
    Vector3::new(-(p.z / q - 2.0 * p.x * p.x * p.z / (q * q)), 1.0, -p.x / q)
}

/// `alpha` at `p` (valid for `0 <= x <= j`).
pub fn alpha_at(p: Point3) -> TwoFormValue {
    let w = (1.0 + p.x * p.x).sqrt();
    let dl = dlambda(p);
    // dx ^ dlambda: the dx component of dlambda drops out.
    TwoFormValue { xy: w * dl[1], xz: w * dl[2], yz: 0.0 }
}

/// Hodge star of a 1-form with coordinate components `c` for the metric with
/// orthonormal coframe `coframe`, returned in coordinate components.
pub fn hodge_star_one_form(c: &Vector3<f64>, coframe: &Matrix3<f64>) -> TwoFormValue {
    // Components of c in the orthonormal coframe: c = a^T E.
    let frame = coframe.try_inverse().expect("coframe is invertible");
    let a = frame.transpose() * c;
    // *e1 = e2^e3, *e2 = e3^e1, *e3 = e1^e2
    let ortho = TwoFormValue { xy: a[2], xz: -a[1], yz: a[0] };
    ortho.in_frame(coframe)
}

/// Worst deviation from unit comass and from `sqrt(1 + x^2) alpha = *dz` over
/// `samples` random points of the half cylinder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaResiduals {
    pub comass: f64,
    pub hodge: f64,
}

pub fn alpha_residuals(m: &CylinderMetric, samples: usize, seed: u64) -> AlphaResiduals {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let j = m.j() as f64;
    let mut out = AlphaResiduals { comass: 0.0, hodge: 0.0 };
    for _ in 0..samples {
        let p = Point3::new(rng.gen_range(0.0..=j), rng.gen(), rng.gen());
        let e = m.coframe_at(p);
        let a = alpha_at(p);
        out.comass = out.comass.max((a.comass(&e) - 1.0).abs());
        let star = hodge_star_one_form(&Vector3::new(0.0, 0.0, 1.0), &e);
        let lhs = a.scale((1.0 + p.x * p.x).sqrt());
        let diff = (lhs.xy - star.xy).abs().max((lhs.xz - star.xz).abs()).max((lhs.yz - star.yz).abs());
        out.hodge = out.hodge.max(diff);
    }
    out
}

/// C^1 cutoff: zero near `0` and `j`, identically one on `[1, j - 1]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffProfile {
    j: u32,
    width: f64,
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * (3.0 - 2.0 * t)
}

fn smoothstep_deriv(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        6.0 * t * (1.0 - t)
    } else {
        0.0
    }
}

impl CutoffProfile {
    pub fn new(j: u32, transition_width: f64) -> Result<Self> {
        if j == 0 {
            return Err(SystoleError::InvalidArgument("j must be at least 1".into()));
        }
        if !(transition_width > 0.0 && transition_width <= 1.0) {
            return Err(SystoleError::InvalidArgument(format!(
                "transition width must lie in (0, 1], got {transition_width}"
            )));
        }
        Ok(CutoffProfile { j, width: transition_width })
    }

    /// Full-width transitions on `[0, 1]` and `[j - 1, j]`.
    pub fn standard(j: u32) -> Result<Self> {
        Self::new(j, 1.0)
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    fn rise_start(&self) -> f64 {
        1.0 - self.width
    }

    fn fall_end(&self) -> f64 {
        self.j as f64 - 1.0 + self.width
    }

    pub fn value(&self, x: f64) -> f64 {
        smoothstep((x - self.rise_start()) / self.width) * smoothstep((self.fall_end() - x) / self.width)
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let up = (x - self.rise_start()) / self.width;
        let down = (self.fall_end() - x) / self.width;
        (smoothstep_deriv(up) * smoothstep(down) - smoothstep(up) * smoothstep_deriv(down)) / self.width
    }

    /// Points where the profile is not smooth.
    pub fn knots(&self) -> [f64; 4] {
        [self.rise_start(), 1.0, self.j as f64 - 1.0, self.fall_end()]
    }
}

/// `phi_j alpha`.
pub struct CutoffAlpha {
    pub phi: CutoffProfile,
}

impl TwoForm for CutoffAlpha {
    fn eval(&self, p: Point3) -> TwoFormValue {
        alpha_at(p).scale(self.phi.value(p.x))
    }
}

/// Unit-determinant oblique chart `(u, v, w) -> (x, y, z)` used by the
/// closedness stencil. In the axis-aligned chart the `y`- and `z`-differences
/// of the forms here vanish identically, which hides the truncation order.
pub fn oblique_chart() -> Matrix3<f64> {
    Matrix3::new(1.0, 0.3, 0.2, 0.0, 1.0, 0.4, 0.0, 0.0, 1.0)
}

/// Central-difference `d omega` (coefficient of `du^dv^dw` in the oblique chart)
/// at the chart point `q`.
pub fn exterior_derivative_fd<F: TwoForm + ?Sized>(form: &F, q: &Vector3<f64>, h: f64) -> f64 {
    let chart = oblique_chart();
    let pulled = |q: Vector3<f64>| form.eval(Point3::from_vector(&(chart * q))).in_frame(&chart);
    let e = |i: usize| Vector3::ith(i, h);
    let diff = |i: usize| {
        let plus = pulled(q + e(i));
        let minus = pulled(q - e(i));
        (plus, minus)
    };
    let (pu, mu) = diff(0);
    let (pv, mv) = diff(1);
    let (pw, mw) = diff(2);
    // d(a du^dv + b du^dw + c dv^dw) = (c_u - b_v + a_w) du^dv^dw
    ((pu.yz - mu.yz) - (pv.xz - mv.xz) + (pw.xy - mw.xy)) / (2.0 * h)
}

/// Chart points whose images have `x` spread over `[x_lo, x_hi]`, keeping at
/// least `margin` away from `avoid` in `x`.
pub fn closedness_sample_grid(x_lo: f64, x_hi: f64, avoid: &[f64], margin: f64) -> Vec<Vector3<f64>> {
    let chart = oblique_chart();
    let inv = chart.try_inverse().expect("unimodular");
    let mut out = Vec::new();
    let n = 41;
    for i in 0..n {
        let x = x_lo + (x_hi - x_lo) * (i as f64 + 0.5) / n as f64;
        if avoid.iter().any(|k| (x - k).abs() < margin) {
            continue;
        }
        for (y, z) in [(0.1, 0.7), (0.55, 0.25), (0.9, 0.45)] {
            out.push(inv * Vector3::new(x, y, z));
        }
    }
    out
}

/// Largest `|d omega|` over the sample grid, by central differences with step `h`.
pub fn closedness_check<F: TwoForm + ?Sized>(form: &F, samples: &[Vector3<f64>], h: f64) -> Result<f64> {
    if !(h > 0.0) {
        return Err(SystoleError::InvalidArgument(format!("step must be positive, got {h}")));
    }
    Ok(samples.iter().map(|q| exterior_derivative_fd(form, q, h).abs()).fold(0.0, f64::max))
}

/// Sample grid on the half cylinder that stays clear of the cutoff knots.
pub fn cutoff_alpha_samples(phi: &CutoffProfile) -> Vec<Vector3<f64>> {
    let j = phi.j() as f64;
    closedness_sample_grid(0.02, j - 0.02, &phi.knots(), 0.05)
}

/// `int_M phi_j alpha = int_0^j phi_j(x) sqrt(1 + x^2) dx`: a lower bound for
/// the stable 2-mass of `[M]`.
pub fn integrate_form_over_m(phi: &CutoffProfile, tol: f64) -> Result<f64> {
    let mut breaks = vec![0.0];
    breaks.extend(phi.knots().iter().copied().filter(|&k| k > 0.0 && k < phi.j() as f64));
    breaks.push(phi.j() as f64);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let r = integrate_piecewise(|x| phi.value(x) * (1.0 + x * x).sqrt(), &breaks, tol)?;
    Ok(r.value)
}

/// `int_1^(j-1) x dx`, the cutoff-independent part of the bound.
pub fn plateau_lower_bound(j: u32) -> f64 {
    let top = j as f64 - 1.0;
    if top <= 1.0 {
        0.0
    } else {
        0.5 * (top * top - 1.0)
    }
}

/// Pairings `P[i][k] = int_{M_i} beta_k` of `b` hypersurface classes against
/// calibrating forms with disjoint supports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairingMatrix {
    pub entries: Vec<Vec<f64>>,
}

impl PairingMatrix {
    pub fn classes(&self) -> usize {
        self.entries.len()
    }

    /// Lower bound on the volume of any rational cycle in the class
    /// `sum_i signs[i] multiplicities[i] [M_i]`.
    pub fn calibration_bound(&self, signs: &[i8], multiplicities: &[u64]) -> Result<f64> {
        let b = self.classes();
        if signs.len() != b || multiplicities.len() != b {
            return Err(SystoleError::InvalidArgument(format!(
                "expected {b} signs and multiplicities, got {} and {}",
                signs.len(),
                multiplicities.len()
            )));
        }
        if signs.iter().any(|&s| s != 1 && s != -1) {
            return Err(SystoleError::InvalidArgument("signs must be +1 or -1".into()));
        }
        if multiplicities.iter().all(|&d| d == 0) {
            return Err(SystoleError::InvalidArgument("class must be nonzero".into()));
        }
        // Evaluate sum_{i,k} eps_i d_i eps_k P[i][k] against beta = sum_k eps_k beta_k.
        let mut total = 0.0;
        for i in 0..b {
            for k in 0..b {
                total += (signs[i] as f64) * (multiplicities[i] as f64) * (signs[k] as f64) * self.entries[i][k];
            }
        }
        Ok(total)
    }

    /// Same, for signed integer multiplicities.
    pub fn calibration_bound_signed(&self, coefficients: &[i64]) -> Result<f64> {
        let signs: Vec<i8> = coefficients.iter().map(|&c| if c < 0 { -1 } else { 1 }).collect();
        let mult: Vec<u64> = coefficients.iter().map(|c| c.unsigned_abs()).collect();
        self.calibration_bound(&signs, &mult)
    }

    /// Smallest bound over nonzero classes (the diagonal minimum).
    pub fn min_nonzero_bound(&self) -> f64 {
        (0..self.classes()).map(|i| self.entries[i][i]).fold(f64::INFINITY, f64::min)
    }
}

/// Builds the pairing matrix for `b` cylinder insertions with cross-section
/// factor of volume `vol_l`. Each `beta_k` is supported in the `k`-th
/// insertion, so `M_i` meets its support only when `i = k`.
pub fn beta_pairing_matrix(b: usize, m: &CylinderMetric, vol_l: f64, tol: f64) -> Result<PairingMatrix> {
    if b == 0 {
        return Err(SystoleError::InvalidArgument("need at least one class".into()));
    }
    if !(vol_l > 0.0) {
        return Err(SystoleError::InvalidArgument(format!("vol(L) must be positive, got {vol_l}")));
    }
    let phi = CutoffProfile::standard(m.j())?;
    let v = vol_l * integrate_form_over_m(&phi, tol)?;
    let entries = (0..b).map(|i| (0..b).map(|k| if i == k { v } else { 0.0 }).collect()).collect();
    Ok(PairingMatrix { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cylinder::DEFAULT_QUADRATURE_TOL;
    use crate::quadrature::integrate;

    #[test]
    fn alpha_at_zero_is_dx_dy() {
        let a = alpha_at(Point3::new(0.0, 0.3, 0.8));
        assert_eq!(a, TwoFormValue { xy: 1.0, xz: 0.0, yz: 0.0 });
    }

    #[test]
    fn alpha_components() {
        let p = Point3::new(2.0, 0.1, 0.6);
        let a = alpha_at(p);
        assert!((a.xy - 5f64.sqrt()).abs() < 1e-15);
        assert!((a.xz + 2.0 / 5f64.sqrt()).abs() < 1e-15);
        assert_eq!(a.yz, 0.0);
    }

    #[test]
    fn dlambda_matches_finite_differences() {
        let p = Point3::new(1.7, 0.4, 0.9);
        let h = 1e-6;
        let fd = Vector3::new(
            (lambda(Point3::new(p.x + h, p.y, p.z)) - lambda(Point3::new(p.x - h, p.y, p.z))) / (2.0 * h),
            (lambda(Point3::new(p.x, p.y + h, p.z)) - lambda(Point3::new(p.x, p.y - h, p.z))) / (2.0 * h),
            (lambda(Point3::new(p.x, p.y, p.z + h)) - lambda(Point3::new(p.x, p.y, p.z - h))) / (2.0 * h),
        );
        assert!((fd - dlambda(p)).abs().max() < 1e-9);
    }

    #[test]
    fn unit_comass_and_hodge_identity() {
        let m = CylinderMetric::new(6).unwrap();
        let r = alpha_residuals(&m, 1000, 3);
        assert!(r.comass < 1e-10 && r.hodge < 1e-10, "{r:?}");
    }

    #[test]
    fn comass_of_coordinate_form_in_flat_metric() {
        let w = TwoFormValue { xy: 3.0, xz: 4.0, yz: 0.0 };
        assert!((w.comass(&Matrix3::identity()) - 5.0).abs() < 1e-15);
    }

    #[test]
    fn cutoff_profile_shape() {
        let phi = CutoffProfile::standard(5).unwrap();
        assert_eq!(phi.value(0.0), 0.0);
        assert_eq!(phi.value(5.0), 0.0);
        assert_eq!(phi.value(-1.0), 0.0);
        for x in [1.0, 2.0, 3.3, 4.0] {
            assert_eq!(phi.value(x), 1.0);
        }
        for i in 0..=500 {
            let x = 5.0 * i as f64 / 500.0;
            let v = phi.value(x);
            assert!((0.0..=1.0).contains(&v));
            let h = 1e-6;
            let fd = (phi.value(x + h) - phi.value(x - h)) / (2.0 * h);
            assert!((fd - phi.derivative(x)).abs() < 1e-5, "x = {x}");
        }
        let narrow = CutoffProfile::new(4, 0.25).unwrap();
        assert_eq!(narrow.value(0.7), 0.0);
        assert_eq!(narrow.value(3.3), 0.0);
        assert!(CutoffProfile::new(3, 0.0).is_err());
        assert!(CutoffProfile::new(3, 1.5).is_err());
        assert!(CutoffProfile::new(0, 1.0).is_err());
    }

    #[test]
    fn forms_are_closed() {
        let phi = CutoffProfile::standard(5).unwrap();
        let samples = cutoff_alpha_samples(&phi);
        let a = closedness_check(&alpha_at, &samples, 1e-4).unwrap();
        assert!(a < 1e-6, "{a}");
        let pa = closedness_check(&CutoffAlpha { phi }, &samples, 1e-4).unwrap();
        assert!(pa < 1e-6, "{pa}");
    }

    #[test]
    fn closedness_residual_is_second_order() {
        let phi = CutoffProfile::standard(5).unwrap();
        let samples = cutoff_alpha_samples(&phi);
        let form = CutoffAlpha { phi };
        let coarse = closedness_check(&form, &samples, 1e-2).unwrap();
        let fine = closedness_check(&form, &samples, 5e-3).unwrap();
        let ratio = coarse / fine;
        assert!((3.5..=4.5).contains(&ratio), "{coarse} {fine} {ratio}");
    }

    #[test]
    fn non_closed_form_is_detected() {
        let samples = closedness_sample_grid(0.1, 3.0, &[], 0.0);
        let form = |p: Point3| TwoFormValue { xy: 0.0, xz: p.y, yz: 0.0 };
        let r = closedness_check(&form, &samples, 1e-4).unwrap();
        assert!((r - 1.0).abs() < 1e-8, "{r}");
        assert!(closedness_check(&form, &samples, 0.0).is_err());
    }

    #[test]
    fn integral_over_m() {
        let tol = DEFAULT_QUADRATURE_TOL;
        let v3 = integrate_form_over_m(&CutoffProfile::standard(3).unwrap(), tol).unwrap();
        assert!(v3 >= 1.5 && v3 >= plateau_lower_bound(3));
        assert_eq!(plateau_lower_bound(3), 1.5);
        assert_eq!(plateau_lower_bound(2), 0.0);
        let v2 = integrate_form_over_m(&CutoffProfile::standard(2).unwrap(), tol).unwrap();
        assert!(v2 > 0.0);
        let v16 = integrate_form_over_m(&CutoffProfile::standard(16).unwrap(), tol).unwrap();
        let ratio = v16 / 128.0;
        assert!((0.9..=1.2).contains(&ratio), "{ratio}");
        // Independent evaluation by composite Simpson on a fine grid.
        let phi = CutoffProfile::standard(7).unwrap();
        let n = 20000;
        let h = 7.0 / n as f64;
        let f = |x: f64| phi.value(x) * (1.0 + x * x).sqrt();
        let simpson: f64 = (0..n)
            .map(|i| {
                let a = i as f64 * h;
                h / 6.0 * (f(a) + 4.0 * f(a + 0.5 * h) + f(a + h))
            })
            .sum();
        let v7 = integrate_form_over_m(&phi, 1e-12).unwrap();
        assert!((v7 - simpson).abs() < 1e-9, "{v7} {simpson}");
    }

    #[test]
    fn bound_never_exceeds_cylinder_area() {
        for j in 2..=20 {
            let m = CylinderMetric::new(j).unwrap();
            let v = integrate_form_over_m(&CutoffProfile::standard(j).unwrap(), 1e-10).unwrap();
            assert!(v <= m.area_m_closed_form());
            assert!(v >= plateau_lower_bound(j));
        }
    }

    #[test]
    fn pairing_matrix_and_bounds() {
        let m = CylinderMetric::new(4).unwrap();
        let p = beta_pairing_matrix(3, &m, 1.0, 1e-10).unwrap();
        let v = integrate_form_over_m(&CutoffProfile::standard(4).unwrap(), 1e-10).unwrap();
        for i in 0..3 {
            for k in 0..3 {
                assert_eq!(p.entries[i][k], if i == k { v } else { 0.0 });
            }
        }
        let b = p.calibration_bound(&[1, -1, 1], &[2, 1, 3]).unwrap();
        assert!((b - 6.0 * v).abs() < 1e-12);
        assert_eq!(p.min_nonzero_bound(), v);
        // Linear in the first multiplicity.
        let b5 = p.calibration_bound(&[1, 1, 1], &[5, 1, 3]).unwrap();
        let b6 = p.calibration_bound(&[1, 1, 1], &[6, 1, 3]).unwrap();
        assert!((b6 - b5 - v).abs() < 1e-12);
        assert!(p.calibration_bound(&[1, 1, 1], &[0, 0, 0]).is_err());
        assert!(p.calibration_bound(&[1, 2, 1], &[1, 0, 0]).is_err());
        assert!(p.calibration_bound(&[1, 1], &[1, 0]).is_err());
        assert!((p.calibration_bound_signed(&[-2, 0, 1]).unwrap() - 3.0 * v).abs() < 1e-12);
        let single = beta_pairing_matrix(1, &m, 1.0, 1e-10).unwrap();
        assert_eq!(single.calibration_bound(&[1], &[1]).unwrap(), v);
        let scaled = beta_pairing_matrix(1, &m, 2.5, 1e-10).unwrap();
        assert!((scaled.entries[0][0] - 2.5 * v).abs() < 1e-12);
        let quad = integrate(|x| (1.0 + x * x).sqrt(), 0.0, 4.0, 1e-12).unwrap().value;
        assert!(v < quad);
    }
}
