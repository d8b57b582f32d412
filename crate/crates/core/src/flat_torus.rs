//! Flat 2-tori `R^2 / Z^2` with a constant metric.
//!
//! Everything here works with integer coefficient vectors in the standard
//! basis of `Z^2` and the Gram matrix of the metric in that basis.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SystoleError};

/// Symmetric positive-definite 2x2 matrix `[[a, b], [b, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GramMatrix2 {
    pub a: f64,
    pub b: f64,
    pub d: f64,
}

impl GramMatrix2 {
    pub fn new(a: f64, b: f64, d: f64) -> Result<Self> {
        let g = GramMatrix2 { a, b, d };
        if !(a > 0.0) || !(g.det() > 0.0) || !b.is_finite() || !d.is_finite() {
            return Err(SystoleError::NotPositiveDefinite { det: g.det() });
        }
        Ok(g)
    }

    pub const IDENTITY: GramMatrix2 = GramMatrix2 { a: 1.0, b: 0.0, d: 1.0 };

    /// The hexagonal (equilateral) torus of unit systole.
    pub const HEXAGONAL: GramMatrix2 = GramMatrix2 { a: 1.0, b: 0.5, d: 1.0 };

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.b
    }

    /// `u^T g v` for integer coefficient vectors.
    pub fn inner(&self, u: [i64; 2], v: [i64; 2]) -> f64 {
        let (u0, u1, v0, v1) = (u[0] as f64, u[1] as f64, v[0] as f64, v[1] as f64);
        self.a * u0 * v0 + self.b * (u0 * v1 + u1 * v0) + self.d * u1 * v1
    }

    pub fn norm_sq(&self, v: [i64; 2]) -> f64 {
        self.inner(v, v)
    }
}

/// Point `s + i t` of the standard fundamental domain of `SL(2, Z)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModuliPoint {
    pub s: f64,
    pub t: f64,
}

/// Metric `(1 + x^2) dy^2 - 2x dy dz + dz^2` on the fibre torus over `x`.
pub fn slice_gram(xhat: f64) -> GramMatrix2 {
    GramMatrix2 { a: 1.0 + xhat * xhat, b: -xhat, d: 1.0 }
}

/// Length of the closed geodesic in the homology class `v`.
pub fn class_length(g: &GramMatrix2, v: [i64; 2]) -> f64 {
    g.norm_sq(v).sqrt()
}

/// Lagrange–Gauss reduced basis `(u, v)` of the lattice, with `|u| <= |v|`,
/// `|<u, v>| <= |u|^2 / 2` and `<u, v> <= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReducedBasis {
    pub u: [i64; 2],
    pub v: [i64; 2],
}

fn sub_mul(v: [i64; 2], k: i64, u: [i64; 2]) -> [i64; 2] {
    [v[0] - k * u[0], v[1] - k * u[1]]
}

pub fn reduce(g: &GramMatrix2) -> ReducedBasis {
    let mut u = [1i64, 0];
    let mut v = [0i64, 1];
    if g.norm_sq(v) < g.norm_sq(u) {
        std::mem::swap(&mut u, &mut v);
    }
    loop {
        let k = (g.inner(u, v) / g.norm_sq(u)).round() as i64;
        v = sub_mul(v, k, u);
        if g.norm_sq(v) < g.norm_sq(u) {
            std::mem::swap(&mut u, &mut v);
        } else {
            break;
        }
    }
    if g.inner(u, v) > 0.0 {
        v = [-v[0], -v[1]];
    }
    ReducedBasis { u, v }
}

/// Shortest nonzero lattice vector: `(length, coefficients)`, with the first
/// nonzero coefficient positive.
pub fn shortest_vector(g: &GramMatrix2) -> (f64, [i64; 2]) {
    let basis = reduce(g);
    let mut best = (f64::INFINITY, basis.u);
    // The reduced basis already contains a shortest vector; the window is slack.
    for p in -2i64..=2 {
        for q in -2i64..=2 {
            if p == 0 && q == 0 {
                continue;
            }
            let w = [p * basis.u[0] + q * basis.v[0], p * basis.u[1] + q * basis.v[1]];
            let n = g.norm_sq(w);
            if n < best.0 {
                best = (n, w);
            }
        }
    }
    let w = best.1;
    let w = if w[0] < 0 || (w[0] == 0 && w[1] < 0) { [-w[0], -w[1]] } else { w };
    (best.0.sqrt(), w)
}

/// Diameter of the flat torus, i.e. the covering radius of the lattice.
///
/// For an obtuse reduced basis the triangle `0, u, u + v` is a non-obtuse
/// Delaunay triangle, so the covering radius is its circumradius.
pub fn torus_diameter(g: &GramMatrix2) -> f64 {
    let ReducedBasis { u, v } = reduce(g);
    let uv = [u[0] + v[0], u[1] + v[1]];
    let (a, b, c) = (g.norm_sq(u).sqrt(), g.norm_sq(v).sqrt(), g.norm_sq(uv).sqrt());
    let area = 0.5 * g.det().sqrt();
    a * b * c / (4.0 * area)
}

/// Position of the torus (normalized to unit area) in the moduli space.
pub fn moduli_point(g: &GramMatrix2) -> ModuliPoint {
    // tau = omega_2 / omega_1 for the oriented basis (e1, e2).
    let mut s = g.b / g.a;
    let mut t = g.det().sqrt() / g.a;
    for _ in 0..256 {
        s -= s.round();
        let r2 = s * s + t * t;
        if r2 < 1.0 - 1e-15 {
            // tau -> -1 / tau
            s = -s / r2;
            t /= r2;
        } else {
            break;
        }
    }
    if s == -0.0 {
        s = 0.0;
    }
    ModuliPoint { s, t }
}

/// `sys_1^2 / area`; bounded by `2 / sqrt(3)` for every flat torus.
pub fn loewner_ratio(g: &GramMatrix2) -> f64 {
    let (sys, _) = shortest_vector(g);
    sys * sys / g.det().sqrt()
}

pub const LOEWNER_BOUND: f64 = 1.154_700_538_379_251_5;
