//! Pointwise Riemannian metrics on 3-dimensional coordinate domains.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

/// Coordinates `(x, y, z)`; `y` and `z` are periodic with period 1 wherever
/// the ambient space is a torus bundle, but are stored unwrapped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    pub fn to_vector(self) -> Vector3<f64> {
        Vector3::new(self.x, self.y, self.z)
    }

    pub fn from_vector(v: &Vector3<f64>) -> Self {
        Point3::new(v[0], v[1], v[2])
    }
}

/// Metric tensor at a point, in the coordinate basis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GramMatrix3(pub Matrix3<f64>);

impl GramMatrix3 {
    pub fn det(&self) -> f64 {
        self.0.determinant()
    }

    pub fn quadratic(&self, v: &Vector3<f64>) -> f64 {
        v.dot(&(self.0 * v))
    }

    /// Area density of the coordinate 2-plane spanned by axes `i < k`.
    pub fn minor_sqrt(&self, i: usize, k: usize) -> f64 {
        let g = &self.0;
        (g[(i, i)] * g[(k, k)] - g[(i, k)] * g[(k, i)]).sqrt()
    }

    pub fn max_abs_diff(&self, other: &GramMatrix3) -> f64 {
        (self.0 - other.0).abs().max()
    }
}

/// Which one-sided limit to take at a kink of the metric.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FoldSide {
    Left,
    Right,
}

/// A metric `dx^2 + h(f(x))` whose coefficients depend on `x` alone.
pub trait MetricField: Sync {
    fn gram(&self, p: Point3) -> GramMatrix3;

    /// `d/dx` of the Gram matrix, continuing the smooth branch on `side` of
    /// the fold (if any) through the whole line.
    fn gram_dx(&self, p: Point3, side: FoldSide) -> Matrix3<f64>;

    /// The Gram matrix continued from `side` of the fold.
    fn gram_branch(&self, p: Point3, _side: FoldSide) -> GramMatrix3 {
        self.gram(p)
    }

    /// Location of a derivative discontinuity, if any.
    fn fold(&self) -> Option<f64> {
        None
    }

    /// Admissible range of `x`, if bounded.
    fn x_range(&self) -> Option<(f64, f64)> {
        None
    }

    /// The side of the fold a point lies on, used for derivative evaluation.
    fn side_of(&self, x: f64) -> FoldSide {
        match self.fold() {
            Some(f) if x > f => FoldSide::Right,
            _ => FoldSide::Left,
        }
    }
}

/// Gram matrix of `dx^2 + dy^2 + (dz - s dy)^2`.
pub fn sheared_gram(s: f64) -> Matrix3<f64> {
    Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0 + s * s, -s, 0.0, -s, 1.0)
}

/// `d/ds` of [`sheared_gram`].
pub fn sheared_gram_ds(s: f64) -> Matrix3<f64> {
    Matrix3::new(0.0, 0.0, 0.0, 0.0, 2.0 * s, -1.0, 0.0, -1.0, 0.0)
}

/// Left-invariant metric `dx^2 + dy^2 + (dz - x dy)^2` on the Heisenberg group.
#[derive(Debug, Clone, Copy, Default)]
pub struct HeisenbergMetric;

impl MetricField for HeisenbergMetric {
    fn gram(&self, p: Point3) -> GramMatrix3 {
        GramMatrix3(sheared_gram(p.x))
    }

    fn gram_dx(&self, p: Point3, _side: FoldSide) -> Matrix3<f64> {
        sheared_gram_ds(p.x)
    }
}

/// Euclidean metric; a flat reference for tests and overrides.
#[derive(Debug, Clone, Copy, Default)]
pub struct FlatMetric {
    pub x_range: Option<(f64, f64)>,
}

impl MetricField for FlatMetric {
    fn gram(&self, _p: Point3) -> GramMatrix3 {
        GramMatrix3(Matrix3::identity())
    }

    fn gram_dx(&self, _p: Point3, _side: FoldSide) -> Matrix3<f64> {
        Matrix3::zeros()
    }

    fn x_range(&self) -> Option<(f64, f64)> {
        self.x_range
    }
}
