//! `T^3` with three Heisenberg cylinders inserted along tori around three
//! disjoint closed curves, and the resulting systolic freedom report.

use std::f64::consts::TAU;

use nalgebra::Matrix3;
use serde::{Deserialize, Serialize};

use crate::calibration::beta_pairing_matrix;
use crate::cylinder::{CylinderMetric, DEFAULT_QUADRATURE_TOL};
use crate::error::{Result, SystoleError};
use crate::loops::{default_torus_classes, nilmanifold_sys1_estimate, sys1_estimate, ShorteningConfig};
use crate::metric::{GramMatrix3, MetricField, Point3};
use crate::quadrature::{integrate, integrate_piecewise};

/// Closed geodesic of the flat `R^3 / Z^3` parallel to coordinate `axis`,
/// through the point whose other coordinates are `offset` (in increasing
/// axis order).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisCurve {
    pub axis: usize,
    pub offset: [f64; 2],
}

impl AxisCurve {
    pub fn transverse_axes(&self) -> [usize; 2] {
        match self.axis {
            0 => [1, 2],
            1 => [0, 2],
            _ => [0, 1],
        }
    }

    /// Value of coordinate `k`, if it is constant along the curve.
    pub fn fixed_coordinate(&self, k: usize) -> Option<f64> {
        let [p, q] = self.transverse_axes();
        if k == p {
            Some(self.offset[0])
        } else if k == q {
            Some(self.offset[1])
        } else {
            None
        }
    }
}

fn wrapped(d: f64) -> f64 {
    let d = d.rem_euclid(1.0);
    d.min(1.0 - d)
}

/// Distance between two axis-parallel closed geodesics of `R^3 / Z^3`.
pub fn curve_distance(a: &AxisCurve, b: &AxisCurve) -> f64 {
    if a.axis == b.axis {
        let d0 = wrapped(a.offset[0] - b.offset[0]);
        let d1 = wrapped(a.offset[1] - b.offset[1]);
        (d0 * d0 + d1 * d1).sqrt()
    } else {
        // The coordinate fixed on both curves.
        let k = 3 - a.axis - b.axis;
        wrapped(a.fixed_coordinate(k).unwrap() - b.fixed_coordinate(k).unwrap())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssemblyConfig {
    pub j: u32,
    pub tube_radius: f64,
    pub collar_width: f64,
    pub curves: [AxisCurve; 3],
    /// `M_i = { x_i = surface_levels[i] }`
    pub surface_levels: [f64; 3],
    pub tol: f64,
}

impl AssemblyConfig {
    pub fn standard(j: u32) -> Self {
        AssemblyConfig {
            j,
            tube_radius: 1.0 / 9.0,
            collar_width: 1.0 / 27.0,
            curves: [
                AxisCurve { axis: 0, offset: [1.0 / 3.0, 1.0 / 3.0] },
                AxisCurve { axis: 1, offset: [1.0 / 3.0, 2.0 / 3.0] },
                AxisCurve { axis: 2, offset: [2.0 / 3.0, 2.0 / 3.0] },
            ],
            surface_levels: [0.0; 3],
            tol: DEFAULT_QUADRATURE_TOL,
        }
    }

    pub fn outer_radius(&self) -> f64 {
        self.tube_radius + self.collar_width
    }

    pub fn inner_radius(&self) -> f64 {
        self.tube_radius - self.collar_width
    }

    pub fn validate(&self) -> Result<()> {
        if self.j == 0 {
            return Err(SystoleError::InvalidArgument("j must be at least 1".into()));
        }
        if !(self.collar_width > 0.0 && self.collar_width < self.tube_radius) {
            return Err(SystoleError::InvalidArgument("collar must be thinner than the tube".into()));
        }
        if !(self.tol > 0.0) {
            return Err(SystoleError::InvalidArgument("tolerance must be positive".into()));
        }
        if 2.0 * self.outer_radius() >= 1.0 {
            return Err(SystoleError::OverlappingNeighborhoods("tube wraps onto itself".into()));
        }
        for a in 0..3 {
            for b in a + 1..3 {
                let d = curve_distance(&self.curves[a], &self.curves[b]);
                if d <= 2.0 * self.outer_radius() {
                    return Err(SystoleError::OverlappingNeighborhoods(format!(
                        "curves {a} and {b} are {d} apart, need more than {}",
                        2.0 * self.outer_radius()
                    )));
                }
            }
        }
        let counts = intersection_counts(self)?;
        for (i, row) in counts.iter().enumerate() {
            for (k, &n) in row.iter().enumerate() {
                if n != (i == k) as usize {
                    return Err(SystoleError::InvalidArgument(format!("M_{i} meets C_{k} in {n} points")));
                }
            }
        }
        Ok(())
    }
}

/// `counts[i][k] = #(M_i ∩ C_k)`, from the coordinate descriptions. A curve
/// lying inside a surface is an error.
pub fn intersection_counts(cfg: &AssemblyConfig) -> Result<[[usize; 3]; 3]> {
    let mut out = [[0; 3]; 3];
    for (i, row) in out.iter_mut().enumerate() {
        for (k, n) in row.iter_mut().enumerate() {
            let c = &cfg.curves[k];
            *n = match c.fixed_coordinate(i) {
                // The curve runs once around the circle normal to M_i.
                None => 1,
                Some(v) if wrapped(v - cfg.surface_levels[i]) == 0.0 => {
                    return Err(SystoleError::InvalidArgument(format!("C_{k} lies in M_{i}")));
                }
                Some(_) => 0,
            };
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CollarSide {
    /// Between the cut torus and the rest of `T^3`.
    Outer,
    /// Between the cut torus and the core curve.
    Inner,
}

/// A point of the assembled manifold in one of its charts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AssembledPoint {
    /// Flat region, in ambient coordinates of `R^3 / Z^3`.
    Flat([f64; 3]),
    /// Collar of tube `tube`, in `(r, u, t)`: distance to the core curve,
    /// angle / 2pi and position along the curve.
    Collar { tube: usize, side: CollarSide, r: f64, u: f64, t: f64 },
    /// Inserted copy of `Y_j`, in its own `(x, y, z)`; `y` runs along the
    /// meridian and `z` along the core curve.
    Insert { tube: usize, point: Point3 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssembledMetric {
    pub cfg: AssemblyConfig,
    pub cylinder: CylinderMetric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeamResiduals {
    /// Collar against the flat metric at the collar's far edge.
    pub flat_collar: f64,
    /// Collar against `Y_j` at the cut.
    pub collar_insert: f64,
}

pub fn assemble(cfg: &AssemblyConfig) -> Result<AssembledMetric> {
    cfg.validate()?;
    Ok(AssembledMetric { cylinder: CylinderMetric::new(cfg.j)?, cfg: cfg.clone() })
}

impl AssembledMetric {
    /// Blend weight of the unit-square torus metric; one on the cut, zero at
    /// the collar edges.
    fn blend(&self, r: f64) -> f64 {
        (1.0 - (r - self.cfg.tube_radius).abs() / self.cfg.collar_width).clamp(0.0, 1.0)
    }

    fn collar_gram(&self, r: f64) -> Result<GramMatrix3> {
        let w = self.blend(r);
        let guu = (1.0 - w) * (TAU * r).powi(2) + w;
        if !(guu > 0.0) {
            return Err(SystoleError::NotPositiveDefinite { det: guu });
        }
        Ok(GramMatrix3(Matrix3::from_diagonal(&nalgebra::Vector3::new(1.0, guu, 1.0))))
    }

    fn check_collar(&self, side: CollarSide, r: f64) -> Result<()> {
        let (lo, hi) = match side {
            CollarSide::Outer => (self.cfg.tube_radius, self.cfg.outer_radius()),
            CollarSide::Inner => (self.cfg.inner_radius(), self.cfg.tube_radius),
        };
        if !(lo..=hi).contains(&r) {
            return Err(SystoleError::InvalidArgument(format!("r = {r} is outside the {side:?} collar")));
        }
        Ok(())
    }

    /// Gram matrix in the chart of `p`.
    pub fn metric_at(&self, p: &AssembledPoint) -> Result<GramMatrix3> {
        match *p {
            AssembledPoint::Flat(_) => Ok(GramMatrix3(Matrix3::identity())),
            AssembledPoint::Collar { tube, side, r, .. } => {
                if tube >= 3 {
                    return Err(SystoleError::InvalidArgument(format!("no tube {tube}")));
                }
                self.check_collar(side, r)?;
                self.collar_gram(r)
            }
            AssembledPoint::Insert { tube, point } => {
                if tube >= 3 || !self.cylinder.contains(point) {
                    return Err(SystoleError::InvalidArgument(format!("{point:?} is not in insert {tube}")));
                }
                Ok(self.cylinder.gram(point))
            }
        }
    }

    /// Ambient point from tube coordinates.
    pub fn tube_to_ambient(&self, tube: usize, r: f64, u: f64, t: f64) -> [f64; 3] {
        let c = &self.cfg.curves[tube];
        let [p, q] = c.transverse_axes();
        let mut a = [0.0; 3];
        a[c.axis] = t.rem_euclid(1.0);
        a[p] = (c.offset[0] + r * (TAU * u).cos()).rem_euclid(1.0);
        a[q] = (c.offset[1] + r * (TAU * u).sin()).rem_euclid(1.0);
        a
    }

    /// Jacobian of [`tube_to_ambient`](Self::tube_to_ambient), columns `d/dr, d/du, d/dt`.
    pub fn tube_jacobian(&self, tube: usize, r: f64, u: f64) -> Matrix3<f64> {
        let c = &self.cfg.curves[tube];
        let [p, q] = c.transverse_axes();
        let mut j = Matrix3::zeros();
        j[(p, 0)] = (TAU * u).cos();
        j[(q, 0)] = (TAU * u).sin();
        j[(p, 1)] = -TAU * r * (TAU * u).sin();
        j[(q, 1)] = TAU * r * (TAU * u).cos();
        j[(c.axis, 2)] = 1.0;
        j
    }

    /// Chart of an ambient point of `T^3` away from the cut tori. Points on
    /// a cut torus belong to both collars; the outer one is returned.
    pub fn locate(&self, a: [f64; 3]) -> AssembledPoint {
        for (tube, c) in self.cfg.curves.iter().enumerate() {
            let [p, q] = c.transverse_axes();
            let mut dp = (a[p] - c.offset[0]).rem_euclid(1.0);
            let mut dq = (a[q] - c.offset[1]).rem_euclid(1.0);
            if dp > 0.5 {
                dp -= 1.0;
            }
            if dq > 0.5 {
                dq -= 1.0;
            }
            let r = dp.hypot(dq);
            let inside = r < self.cfg.outer_radius() && r > self.cfg.inner_radius();
            if inside {
                let side = if r >= self.cfg.tube_radius { CollarSide::Outer } else { CollarSide::Inner };
                let u = dq.atan2(dp).rem_euclid(TAU) / TAU;
                return AssembledPoint::Collar { tube, side, r, u, t: a[c.axis] };
            }
        }
        AssembledPoint::Flat(a)
    }

    /// Two-sided metric agreement over a sample of seam points. Each side is
    /// expressed in the chart of the other through the glueing map.
    pub fn seam_residuals(&self, samples: usize) -> Result<SeamResiduals> {
        let mut res = SeamResiduals { flat_collar: 0.0, collar_insert: 0.0 };
        let n = samples.max(1);
        // The insert's x runs from the outer seam (x = 0) to the inner one
        // (x = 2j), i.e. against r: d/dx = -d/dr, y = u, z = t.
        let glue = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        let outer = self.cfg.outer_radius();
        let inner = self.cfg.inner_radius();
        for tube in 0..3 {
            for s in 0..n {
                let u = (s as f64 + 0.25) / n as f64;
                let t = (s as f64 * 0.618_033_988_749_895).fract();
                for (edge, side) in [(outer, CollarSide::Outer), (inner, CollarSide::Inner)] {
                    let jac = self.tube_jacobian(tube, edge, u);
                    let flat = jac.transpose() * jac;
                    let collar = self.metric_at(&AssembledPoint::Collar { tube, side, r: edge, u, t })?;
                    res.flat_collar = res.flat_collar.max((flat - collar.0).abs().max());
                }
                for (x, side) in [(0.0, CollarSide::Outer), (self.cylinder.length(), CollarSide::Inner)] {
                    let r = self.cfg.tube_radius;
                    let collar = self.metric_at(&AssembledPoint::Collar { tube, side, r, u, t })?;
                    let ins = self.metric_at(&AssembledPoint::Insert { tube, point: Point3::new(x, u, t) })?;
                    let pulled = glue.transpose() * collar.0 * glue;
                    res.collar_insert = res.collar_insert.max((pulled - ins.0).abs().max());
                }
            }
        }
        Ok(res)
    }

    /// Change in volume of one collar relative to the flat metric.
    pub fn collar_volume_excess(&self) -> Result<f64> {
        let (lo, mid, hi) = (self.cfg.inner_radius(), self.cfg.tube_radius, self.cfg.outer_radius());
        let r = integrate_piecewise(
            |r| self.collar_gram(r).map(|g| g.det().sqrt()).unwrap_or(f64::NAN) - TAU * r,
            &[lo, mid, hi],
            self.cfg.tol,
        )?;
        Ok(r.value)
    }

    /// `vol(T^3) + 3 (collar excess) + 3 vol(Y_j)`.
    pub fn volume(&self) -> Result<f64> {
        Ok(1.0 + 3.0 * self.collar_volume_excess()? + 3.0 * self.cylinder.volume(self.cfg.tol)?)
    }
}

/// j-independent part of the 1-systole estimate: the flat systole of the
/// unmodified region, the shortest loops found in `Y_1`, and the homotopy
/// systole estimate of the nilmanifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sys1Constants {
    pub fixed_region: f64,
    pub nilmanifold: f64,
    pub converged: bool,
}

impl Sys1Constants {
    pub fn estimate(restarts: usize, seed: u64) -> Result<Self> {
        let cfg = ShorteningConfig::default();
        let y1 = sys1_estimate(&CylinderMetric::new(1)?, &default_torus_classes(), restarts, seed, &cfg)?;
        let nil = nilmanifold_sys1_estimate(restarts, seed, &cfg)?;
        Ok(Sys1Constants {
            fixed_region: y1.value.min(1.0),
            nilmanifold: nil.value,
            converged: y1.converged && nil.converged,
        })
    }

    pub fn value(&self) -> f64 {
        self.fixed_region.min(self.nilmanifold)
    }
}

pub const FLAG_SYS1_UNCERTIFIED: &str = "sys1_uncertified";
pub const FLAG_SYS1_NONCONVERGED: &str = "sys1_nonconverged";

/// Flags that indicate a failed computation rather than a caveat.
pub fn is_nonconvergence_flag(flag: &str) -> bool {
    flag == FLAG_SYS1_NONCONVERGED
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreedomReport {
    pub j: u32,
    pub volume: f64,
    pub sys1_estimate: f64,
    pub sys2_lower: f64,
    pub ratio: f64,
    pub flags: Vec<String>,
}

pub fn report(cfg: &AssemblyConfig, sys1: &Sys1Constants) -> Result<FreedomReport> {
    let asm = assemble(cfg)?;
    let volume = asm.volume()?;
    let sys2_lower = beta_pairing_matrix(3, &asm.cylinder, 1.0, cfg.tol)?.min_nonzero_bound();
    let s1 = sys1.value();
    let mut flags = vec![FLAG_SYS1_UNCERTIFIED.to_string()];
    if !sys1.converged {
        flags.push(FLAG_SYS1_NONCONVERGED.to_string());
    }
    flags.sort();
    let ratio = volume / (s1 * sys2_lower);
    if !(ratio.is_finite() && ratio > 0.0) {
        return Err(SystoleError::InvalidArgument(format!("degenerate report at j = {}", cfg.j)));
    }
    Ok(FreedomReport { j: cfg.j, volume, sys1_estimate: s1, sys2_lower, ratio, flags })
}

/// `T^3 x S^1` with the circle of length `j^2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct T4Report {
    pub j: u32,
    pub volume: f64,
    pub sys2_lower: f64,
    /// `sys2_lower / sqrt(volume)`
    pub sys2_over_sqrt_volume: f64,
    pub flags: Vec<String>,
}

pub fn t4_product_report(cfg: &AssemblyConfig, sys1: &Sys1Constants) -> Result<T4Report> {
    let base = report(cfg, sys1)?;
    let circle = (cfg.j as f64).powi(2);
    let volume = base.volume * circle;
    // Tori T^2 = (curve in T^3) x S^1 have area >= sys1 * j^2.
    let sys2_lower = base.sys2_lower.min(base.sys1_estimate * circle);
    Ok(T4Report { j: cfg.j, volume, sys2_lower, sys2_over_sqrt_volume: sys2_lower / volume.sqrt(), flags: base.flags })
}

/// Volume of `T^3 x S^1_{j^2}` by quadrature of the product volume density
/// over the circle factor.
pub fn t4_volume_quadrature(cfg: &AssemblyConfig) -> Result<f64> {
    let asm = assemble(cfg)?;
    let base = asm.volume()?;
    let circle = (cfg.j as f64).powi(2);
    Ok(integrate(|_| base, 0.0, circle, cfg.tol)?.value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn consts() -> Sys1Constants {
        Sys1Constants { fixed_region: 1.0, nilmanifold: 1.0, converged: true }
    }

    #[test]
    fn standard_configuration_is_valid() {
        let cfg = AssemblyConfig::standard(1);
        cfg.validate().unwrap();
        assert_eq!(intersection_counts(&cfg).unwrap(), [[1, 0, 0], [0, 1, 0], [0, 0, 1]]);
        for a in 0..3 {
            for b in a + 1..3 {
                assert!((curve_distance(&cfg.curves[a], &cfg.curves[b]) - 1.0 / 3.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn overlapping_tubes_are_rejected() {
        let mut cfg = AssemblyConfig::standard(2);
        cfg.tube_radius = 0.16;
        cfg.collar_width = 0.02;
        assert!(matches!(assemble(&cfg), Err(SystoleError::OverlappingNeighborhoods(_))));
        let mut cfg = AssemblyConfig::standard(2);
        cfg.curves[1].offset = [0.0, 2.0 / 3.0];
        assert!(assemble(&cfg).is_err());
    }

    #[test]
    fn far_points_are_flat() {
        let asm = assemble(&AssemblyConfig::standard(1)).unwrap();
        let p = asm.locate([0.9, 0.9, 0.05]);
        assert!(matches!(p, AssembledPoint::Flat(_)));
        assert_eq!(asm.metric_at(&p).unwrap().0, Matrix3::identity());
        let p = asm.locate(asm.tube_to_ambient(1, 0.12, 0.3, 0.4));
        assert!(matches!(p, AssembledPoint::Collar { tube: 1, side: CollarSide::Outer, .. }));
    }

    #[test]
    fn seams_are_continuous() {
        for j in [1, 3, 8] {
            let asm = assemble(&AssemblyConfig::standard(j)).unwrap();
            let r = asm.seam_residuals(32).unwrap();
            assert!(r.flat_collar < 1e-12 && r.collar_insert < 1e-12, "{r:?}");
        }
    }

    #[test]
    fn volume_is_affine_in_j() {
        let v: Vec<f64> = (1..=8).map(|j| assemble(&AssemblyConfig::standard(j)).unwrap().volume().unwrap()).collect();
        let c1 = v[1] - v[0];
        let c0 = v[0] - c1;
        assert!((c1 - 6.0).abs() < 1e-8);
        for (i, vj) in v.iter().enumerate().skip(2) {
            assert!((vj - (c1 * (i + 1) as f64 + c0)).abs() < 1e-6);
        }
    }

    #[test]
    fn ratio_decreases() {
        let r: Vec<f64> =
            [4, 8, 16, 32].iter().map(|&j| report(&AssemblyConfig::standard(j), &consts()).unwrap().ratio).collect();
        assert!(r.windows(2).all(|w| w[1] < w[0]), "{r:?}");
        assert!(r[3] < 0.25 * r[0]);
    }

    #[test]
    fn t4_volume_matches_quadrature() {
        for j in [1, 3] {
            let cfg = AssemblyConfig::standard(j);
            let rep = t4_product_report(&cfg, &consts()).unwrap();
            assert!((rep.volume - t4_volume_quadrature(&cfg).unwrap()).abs() < 1e-9);
            assert!(rep.sys2_over_sqrt_volume.is_finite() && rep.sys2_over_sqrt_volume > 0.0);
        }
    }
}
