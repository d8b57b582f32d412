//! The metric family on `Y_j = T^2 x [0, 2j]`.
//!
//! `g_j = dx^2 + dy^2 + (dz - xhat dy)^2` with `xhat = min(x, 2j - x)`. Each
//! half is locally the left-invariant Heisenberg metric; the two halves are
//! mirror images glued along the fold `x = j`, where the metric is only C^0.

use std::cell::Cell;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SystoleError};
use crate::flat_torus::{class_length, slice_gram, torus_diameter};
use crate::group;
use crate::metric::{sheared_gram, sheared_gram_ds, FoldSide, GramMatrix3, MetricField, Point3};
use crate::quadrature::{integrate_piecewise, Integral};

pub const DEFAULT_QUADRATURE_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CylinderMetric {
    j: u32,
}

/// Largest entrywise mismatch between the metric and its pullback under the
/// shear isometry, separately for the periodic region and the fold region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PsiResidual {
    /// Samples with `x in [0, j - 1]`.
    pub periodic_region: f64,
    /// Samples with `x in [j - 1, j]`; the image crosses the fold.
    pub fold_region: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlideBound {
    /// Length of the class `T^1 + j C` on the middle fibre.
    pub class_length: f64,
    /// Resulting bound on the stable 1-mass of `C`.
    pub mass1_bound: f64,
}

impl CylinderMetric {
    pub fn new(j: u32) -> Result<Self> {
        if j == 0 {
            return Err(SystoleError::InvalidArgument("j must be at least 1".into()));
        }
        Ok(CylinderMetric { j })
    }

    pub fn j(&self) -> u32 {
        self.j
    }

    pub fn length(&self) -> f64 {
        2.0 * self.j as f64
    }

    pub fn xhat(&self, x: f64) -> f64 {
        x.min(self.length() - x)
    }

    /// `d xhat / dx` on the branch `side`.
    pub fn xhat_slope(&self, side: FoldSide) -> f64 {
        match side {
            FoldSide::Left => 1.0,
            FoldSide::Right => -1.0,
        }
    }

    fn xhat_branch(&self, x: f64, side: FoldSide) -> f64 {
        match side {
            FoldSide::Left => x,
            FoldSide::Right => self.length() - x,
        }
    }

    pub fn contains(&self, p: Point3) -> bool {
        (0.0..=self.length()).contains(&p.x)
    }

    pub fn metric_at(&self, p: Point3) -> GramMatrix3 {
        GramMatrix3(sheared_gram(self.xhat(p.x)))
    }

    /// Orthonormal coframe `(dx, dy, dz - xhat dy)` as rows; `G = E^T E`.
    pub fn coframe_at(&self, p: Point3) -> Matrix3<f64> {
        let s = self.xhat(p.x);
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, -s, 1.0)
    }

    /// Length of the `y`-circle `T^1` in the fibre over `x`.
    pub fn curve_t1_length(&self, x: f64) -> f64 {
        let s = self.xhat(x);
        (1.0 + s * s).sqrt()
    }

    /// Riemannian volume by nested adaptive quadrature of `sqrt(det g)` over
    /// the fundamental domain, split at the fold.
    pub fn volume(&self, tol: f64) -> Result<f64> {
        Ok(self.volume_integral(tol)?.value)
    }

    pub fn volume_integral(&self, tol: f64) -> Result<Integral> {
        if !(tol > 0.0) {
            return Err(SystoleError::InvalidArgument(format!("tolerance must be positive, got {tol}")));
        }
        let inner_tol = tol / (10.0 * self.length());
        let failure: Cell<Option<SystoleError>> = Cell::new(None);
        let record = |r: Result<Integral>| match r {
            Ok(v) => v.value,
            Err(e) => {
                failure.set(Some(e));
                f64::NAN
            }
        };
        let fibre = |x: f64| {
            record(integrate_piecewise(
                |y| {
                    record(integrate_piecewise(
                        |z| self.metric_at(Point3::new(x, y, z)).det().sqrt(),
                        &[0.0, 1.0],
                        inner_tol,
                    ))
                },
                &[0.0, 1.0],
                inner_tol,
            ))
        };
        let j = self.j as f64;
        let outer = integrate_piecewise(fibre, &[0.0, j, 2.0 * j], 0.8 * tol)?;
        if let Some(e) = failure.take() {
            return Err(e);
        }
        Ok(outer)
    }

    /// Area of the cylinder `M = T^1 x I` at fixed `z`: `2 int_0^j sqrt(1 + x^2) dx`.
    pub fn area_m(&self, tol: f64) -> Result<f64> {
        let j = self.j as f64;
        let r = integrate_piecewise(|x| self.curve_t1_length(x), &[0.0, j, 2.0 * j], tol)?;
        Ok(r.value)
    }

    /// `j sqrt(1 + j^2) + asinh(j)`
    pub fn area_m_closed_form(&self) -> f64 {
        let j = self.j as f64;
        j * (1.0 + j * j).sqrt() + j.asinh()
    }

    /// The shear `(x, y, z) -> (x + 1, y, z + y)`: left multiplication by
    /// the `x`-generator of the integer Heisenberg group.
    pub fn psi(p: Point3) -> Point3 {
        Point3::new(p.x + 1.0, p.y, p.z + p.y)
    }

    /// Jacobian of [`Self::psi`], rows indexed by image coordinates.
    pub fn psi_jacobian() -> Matrix3<f64> {
        Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 1.0, 1.0)
    }

    /// `max |g(p) - J^T g(image) J|` entrywise.
    pub fn pullback_residual(&self, p: Point3, image: Point3, jacobian: &Matrix3<f64>) -> f64 {
        let pulled = jacobian.transpose() * self.metric_at(image).0 * jacobian;
        (self.metric_at(p).0 - pulled).abs().max()
    }

    /// Samples random points in `[0, j] x [0,1]^2` and measures how far the
    /// shear is from an isometry. Requires `j >= 2`.
    pub fn isometry_check_psi(&self, samples: usize, seed: u64) -> Result<PsiResidual> {
        if self.j < 2 {
            return Err(SystoleError::InvalidArgument("isometry check needs j >= 2".into()));
        }
        if samples == 0 {
            return Err(SystoleError::InvalidArgument("need at least one sample".into()));
        }
        let j = self.j as f64;
        let jac = Self::psi_jacobian();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = PsiResidual { periodic_region: 0.0, fold_region: 0.0 };
        for _ in 0..samples {
            let (y, z) = (rng.gen::<f64>(), rng.gen::<f64>());
            let p = Point3::new(rng.gen_range(0.0..=j - 1.0), y, z);
            out.periodic_region = out.periodic_region.max(self.pullback_residual(p, Self::psi(p), &jac));
            let q = Point3::new(rng.gen_range(j - 1.0..=j), y, z);
            out.fold_region = out.fold_region.max(self.pullback_residual(q, Self::psi(q), &jac));
        }
        Ok(out)
    }

    /// Sliding `C` to the middle fibre: the class `T^1 + jC` has a unit-length
    /// representative there, and `T^1` is null in the ambient manifold, so the
    /// stable 1-mass of `C` is at most `1/j`.
    pub fn mass1_slide_bound(&self) -> SlideBound {
        let j = self.j as f64;
        let len = class_length(&slice_gram(j), [1, self.j as i64]);
        SlideBound { class_length: len, mass1_bound: len / j }
    }

    /// Upper bound for the 1-diameter from the projection to the `x`-interval:
    /// the largest fibre diameter over `samples` evenly spaced fibres.
    pub fn diam1_estimate(&self, samples: usize) -> f64 {
        let n = samples.max(1);
        (0..n)
            .map(|i| {
                let x = if n == 1 { 0.0 } else { self.length() * i as f64 / (n - 1) as f64 };
                torus_diameter(&slice_gram(self.xhat(x)))
            })
            .fold(0.0, f64::max)
    }
}

impl MetricField for CylinderMetric {
    fn gram(&self, p: Point3) -> GramMatrix3 {
        self.metric_at(p)
    }

    fn gram_dx(&self, p: Point3, side: FoldSide) -> Matrix3<f64> {
        sheared_gram_ds(self.xhat_branch(p.x, side)) * self.xhat_slope(side)
    }

    fn gram_branch(&self, p: Point3, side: FoldSide) -> GramMatrix3 {
        GramMatrix3(sheared_gram(self.xhat_branch(p.x, side)))
    }

    fn fold(&self) -> Option<f64> {
        Some(self.j as f64)
    }

    fn x_range(&self) -> Option<(f64, f64)> {
        Some((0.0, self.length()))
    }
}

/// Verifies `z^j = y^(x^j) y^-1` in the integer Heisenberg group for `j = 1..=jmax`.
pub fn heisenberg_relation_check(jmax: u32) -> bool {
    jmax >= 1 && group::relation_holds(jmax, 0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyl(j: u32) -> CylinderMetric {
        CylinderMetric::new(j).unwrap()
    }

    #[test]
    fn rejects_zero() {
        assert!(CylinderMetric::new(0).is_err());
    }

    #[test]
    fn boundary_fibres_are_unit_square() {
        for j in [1, 3, 8] {
            let m = cyl(j);
            let id = Matrix3::identity();
            assert_eq!(m.metric_at(Point3::new(0.0, 0.2, 0.7)).0, id);
            assert_eq!(m.metric_at(Point3::new(2.0 * j as f64, 0.9, 0.1)).0, id);
        }
    }

    #[test]
    fn middle_fibre() {
        let m = cyl(5);
        let g = m.metric_at(Point3::new(5.0, 0.0, 0.0)).0;
        assert_eq!(g, Matrix3::new(1.0, 0.0, 0.0, 0.0, 26.0, -5.0, 0.0, -5.0, 1.0));
    }

    #[test]
    fn unit_determinant_symmetry_and_coframe() {
        let m = cyl(4);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..500 {
            let p = Point3::new(rng.gen_range(0.0..8.0), rng.gen(), rng.gen());
            let g = m.metric_at(p);
            assert!((g.det() - 1.0).abs() < 1e-12);
            let mirrored = m.metric_at(Point3::new(8.0 - p.x, p.y, p.z));
            assert!(g.max_abs_diff(&mirrored) < 1e-12);
            let e = m.coframe_at(p);
            assert!((e.transpose() * e - g.0).abs().max() < 1e-12);
        }
    }

    #[test]
    fn t1_lengths() {
        let m = cyl(6);
        assert_eq!(m.curve_t1_length(0.0), 1.0);
        assert_eq!(m.curve_t1_length(6.0), 37f64.sqrt());
        assert_eq!(m.curve_t1_length(12.0), 1.0);
    }

    #[test]
    fn volume_is_twice_j() {
        for j in [1, 5] {
            let v = cyl(j).volume(1e-9).unwrap();
            assert!((v - 2.0 * j as f64).abs() < 1e-9, "{v}");
        }
        let coarse = cyl(1).volume(1e-6).unwrap();
        let fine = cyl(1).volume(1e-12).unwrap();
        assert!((coarse - fine).abs() < 1e-12);
    }

    #[test]
    fn area_matches_closed_form() {
        let m = cyl(1);
        assert!((m.area_m(1e-12).unwrap() - (2f64.sqrt() + 1f64.asinh())).abs() < 1e-11);
        assert!((m.area_m_closed_form() - 2.295_587_149_392_638).abs() < 1e-12);
        let m = cyl(4);
        assert!((m.area_m(1e-11).unwrap() - m.area_m_closed_form()).abs() < 1e-10);
        assert!((m.area_m_closed_form() - 18.587_135_049_731_74).abs() < 1e-12);
        let m = cyl(64);
        let ratio = m.area_m(1e-9).unwrap() / 4096.0;
        assert!((0.95..1.05).contains(&ratio), "{ratio}");
    }

    #[test]
    fn shear_is_isometry_away_from_fold() {
        let r = cyl(4).isometry_check_psi(1000, 7).unwrap();
        assert!(r.periodic_region < 1e-12, "{r:?}");
        assert!(r.fold_region > 0.1, "{r:?}");
        assert!(cyl(1).isometry_check_psi(10, 0).is_err());
        assert!(cyl(3).isometry_check_psi(0, 0).is_err());
    }

    #[test]
    fn identity_map_has_zero_residual() {
        let m = cyl(3);
        let p = Point3::new(1.3, 0.2, 0.4);
        assert_eq!(m.pullback_residual(p, p, &Matrix3::identity()), 0.0);
    }

    #[test]
    fn swapped_shear_is_not_an_isometry() {
        // (x, y, z) -> (x + 1, y + z, z) acts by the transposed unipotent matrix.
        let m = cyl(4);
        let jac = Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 1.0);
        let p = Point3::new(1.5, 0.3, 0.6);
        let image = Point3::new(p.x + 1.0, p.y + p.z, p.z);
        assert!(m.pullback_residual(p, image, &jac) > 0.5);
    }

    #[test]
    fn slide_bounds() {
        assert_eq!(cyl(1).mass1_slide_bound().mass1_bound, 1.0);
        let b = cyl(3).mass1_slide_bound();
        assert_eq!(b.class_length, 1.0);
        assert!((b.mass1_bound - 1.0 / 3.0).abs() < 1e-16);
        let b = cyl(10).mass1_slide_bound();
        assert_eq!(b.class_length, 1.0);
        assert!((b.mass1_bound - 0.1).abs() < 1e-16);
    }

    #[test]
    fn narrow_one_diameter() {
        assert!((cyl(3).diam1_estimate(1) - 0.5f64.sqrt()).abs() < 1e-15);
        let d1 = cyl(1).diam1_estimate(401);
        let d8 = cyl(8).diam1_estimate(3201);
        assert!(d1 < 1.0 && d8 < 1.0);
        // Half-integer slices are the widest; both grids contain one.
        assert!((d1 - d8).abs() < 1e-12, "{d1} {d8}");
    }

    #[test]
    fn group_relation() {
        assert!(heisenberg_relation_check(1));
        assert!(heisenberg_relation_check(50));
        assert!(!heisenberg_relation_check(0));
    }
}
