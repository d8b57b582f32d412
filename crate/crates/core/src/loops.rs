//! Closed polygonal loops in a fixed free homotopy class and their
//! shortening under a metric. Used for empirical (non-certified) estimates of
//! `sys_1(Y_j)` and of the homotopy 1-systole of the Heisenberg nilmanifold.

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cylinder::CylinderMetric;
use crate::error::{Result, SystoleError};
use crate::group::UnipotentMatrix;
use crate::metric::{HeisenbergMetric, MetricField, Point3};

/// Deck transformation closing a loop in the universal cover.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LoopClass {
    /// Translation by `(0, wy, wz)` on `T^2 x I`; `x` must return.
    Torus { wy: i64, wz: i64 },
    /// Left multiplication by an integer Heisenberg element `(x, y, z)`.
    Heisenberg { x: i64, y: i64, z: i64 },
}

impl LoopClass {
    pub fn is_trivial(&self) -> bool {
        match *self {
            LoopClass::Torus { wy, wz } => wy == 0 && wz == 0,
            LoopClass::Heisenberg { x, y, z } => x == 0 && y == 0 && z == 0,
        }
    }

    pub fn apply(&self, q: &Vector3<f64>) -> Vector3<f64> {
        match *self {
            LoopClass::Torus { wy, wz } => q + Vector3::new(0.0, wy as f64, wz as f64),
            LoopClass::Heisenberg { x, y, z } => {
                Vector3::new(q[0] + x as f64, q[1] + y as f64, q[2] + z as f64 + x as f64 * q[1])
            }
        }
    }

    pub fn differential(&self) -> Matrix3<f64> {
        match *self {
            LoopClass::Torus { .. } => Matrix3::identity(),
            LoopClass::Heisenberg { x, .. } => Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, x as f64, 1.0),
        }
    }

    pub fn heisenberg(g: UnipotentMatrix) -> Self {
        LoopClass::Heisenberg { x: g.x, y: g.y, z: g.z }
    }

    /// Integer translation seen by the projection to the periodic base torus:
    /// `(y, z)` for `T^2 x I`, `(x, y)` for the nilmanifold.
    pub fn base_translation(&self) -> (i64, i64) {
        match *self {
            LoopClass::Torus { wy, wz } => (wy, wz),
            LoopClass::Heisenberg { x, y, .. } => (x, y),
        }
    }

    fn base_axes(&self) -> (usize, usize) {
        match self {
            LoopClass::Torus { .. } => (1, 2),
            LoopClass::Heisenberg { .. } => (0, 1),
        }
    }
}

/// Vertices `v_0 .. v_{n-1}` in the universal cover; the last edge runs from
/// `v_{n-1}` to `class.apply(v_0)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ClosedLoop {
    pub vertices: Vec<Vector3<f64>>,
    pub class: LoopClass,
}

fn segment_length<M: MetricField + ?Sized>(metric: &M, a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    let d = b - a;
    let mid = Point3::from_vector(&(0.5 * (a + b)));
    metric.gram(mid).quadratic(&d).max(0.0).sqrt()
}

/// Gradients of the segment length with respect to its two endpoints.
fn segment_gradient<M: MetricField + ?Sized>(
    metric: &M,
    a: &Vector3<f64>,
    b: &Vector3<f64>,
) -> (Vector3<f64>, Vector3<f64>) {
    let d = b - a;
    let mid = Point3::from_vector(&(0.5 * (a + b)));
    let g = metric.gram(mid).0;
    let len = d.dot(&(g * d)).max(0.0).sqrt();
    if len == 0.0 {
        return (Vector3::zeros(), Vector3::zeros());
    }
    let gd = g * d / len;
    let dgx = metric.gram_dx(mid, metric.side_of(mid.x));
    let ex = Vector3::new(0.25 * d.dot(&(dgx * d)) / len, 0.0, 0.0);
    (-gd + ex, gd + ex)
}

impl ClosedLoop {
    /// Straight coordinate segment from `base` to `class.apply(base)` with `n` vertices.
    pub fn straight(base: Vector3<f64>, class: LoopClass, n: usize) -> Self {
        let end = class.apply(&base);
        let vertices = (0..n.max(2)).map(|i| base + (end - base) * (i as f64 / n.max(2) as f64)).collect();
        ClosedLoop { vertices, class }
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    fn successor(&self, i: usize) -> Vector3<f64> {
        if i + 1 < self.vertices.len() {
            self.vertices[i + 1]
        } else {
            self.class.apply(&self.vertices[0])
        }
    }

    pub fn length<M: MetricField + ?Sized>(&self, metric: &M) -> f64 {
        (0..self.vertices.len()).map(|i| segment_length(metric, &self.vertices[i], &self.successor(i))).sum()
    }

    pub fn gradient<M: MetricField + ?Sized>(&self, metric: &M) -> Vec<Vector3<f64>> {
        let n = self.vertices.len();
        let mut grad = vec![Vector3::zeros(); n];
        for i in 0..n {
            let (ga, gb) = segment_gradient(metric, &self.vertices[i], &self.successor(i));
            grad[i] += ga;
            if i + 1 < n {
                grad[i + 1] += gb;
            } else {
                grad[0] += self.class.differential().transpose() * gb;
            }
        }
        grad
    }

    /// Inserts the midpoint of every edge.
    pub fn subdivide(&mut self) {
        let n = self.vertices.len();
        let mut out = Vec::with_capacity(2 * n);
        for i in 0..n {
            let next = self.successor(i);
            out.push(self.vertices[i]);
            out.push(0.5 * (self.vertices[i] + next));
        }
        self.vertices = out;
    }

    /// Recovers the base-torus translation from the vertex positions reduced
    /// mod 1, summing nearest-image increments. Valid while every edge is
    /// shorter than 1/2 in the base coordinates.
    pub fn winding(&self) -> (i64, i64) {
        let (i, k) = self.class.base_axes();
        let wrap = |v: &Vector3<f64>| (v[i].rem_euclid(1.0), v[k].rem_euclid(1.0));
        let mut total = (0.0, 0.0);
        let n = self.vertices.len();
        for s in 0..n {
            let a = wrap(&self.vertices[s]);
            let b_raw = self.successor(s);
            let b = wrap(&b_raw);
            let di = b.0 - a.0;
            let dk = b.1 - a.1;
            total.0 += di - di.round();
            total.1 += dk - dk.round();
        }
        (total.0.round() as i64, total.1.round() as i64)
    }

    fn clamp_x(&mut self, range: Option<(f64, f64)>) {
        if let Some((lo, hi)) = range {
            for v in &mut self.vertices {
                v[0] = v[0].clamp(lo, hi);
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShorteningConfig {
    pub max_iterations: usize,
    /// Stop after several consecutive relative improvements below this.
    pub relative_tolerance: f64,
}

impl Default for ShorteningConfig {
    fn default() -> Self {
        ShorteningConfig { max_iterations: 4000, relative_tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ShorteningOutcome {
    pub lp: ClosedLoop,
    pub length: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Length after every accepted iteration, starting with the initial length.
    pub history: Vec<f64>,
}

fn add_scaled(lp: &ClosedLoop, dir: &[Vector3<f64>], t: f64, range: Option<(f64, f64)>) -> ClosedLoop {
    let mut out = lp.clone();
    for (v, d) in out.vertices.iter_mut().zip(dir) {
        *v += t * d;
    }
    out.clamp_x(range);
    out
}

/// Solves `(I + lambda L) u = rhs` where `L` is the graph Laplacian of the
/// cycle, by the Thomas algorithm with a Sherman-Morrison corner correction.
fn solve_cyclic(rhs: &[f64], lambda: f64) -> Vec<f64> {
    let n = rhs.len();
    if n < 3 || lambda == 0.0 {
        return rhs.to_vec();
    }
    let (diag, off) = (1.0 + 2.0 * lambda, -lambda);
    // A = T + u v^T with u = (gamma, 0.., off), v = (1, 0.., off / gamma).
    let gamma = -diag;
    let solve_tri = |d: &[f64]| -> Vec<f64> {
        let mut c = vec![0.0; n];
        let mut x = vec![0.0; n];
        let b0 = diag - gamma;
        let bn = diag - off * off / gamma;
        let b = |i: usize| {
            if i == 0 {
                b0
            } else if i == n - 1 {
                bn
            } else {
                diag
            }
        };
        c[0] = off / b(0);
        x[0] = d[0] / b(0);
        for i in 1..n {
            let m = b(i) - off * c[i - 1];
            c[i] = off / m;
            x[i] = (d[i] - off * x[i - 1]) / m;
        }
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        x
    };
    let y = solve_tri(rhs);
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off;
    let z = solve_tri(&u);
    let vy = y[0] + off / gamma * y[n - 1];
    let vz = z[0] + off / gamma * z[n - 1];
    let f = vy / (1.0 + vz);
    y.iter().zip(&z).map(|(a, b)| a - f * b).collect()
}

/// Sobolev-type preconditioner: smooths a vertex field along the loop so that
/// long-wavelength motions are not throttled by the stiffness of short ones.
///
/// The closing edge is twisted by the deck differential `D = I + K` (`K^2 = 0`
/// here). With `u_i = (I + (i/n) K) w_i` the twisted sequence `u` becomes a
/// periodic `w`, and the smoothing is applied there: `P = T A^-1 T^T`.
fn precondition(g: &[Vector3<f64>], class: &LoopClass) -> Vec<Vector3<f64>> {
    let n = g.len();
    let k = class.differential() - Matrix3::identity();
    let twist = |i: usize| Matrix3::identity() + k * (i as f64 / n as f64);
    let tg: Vec<Vector3<f64>> = g.iter().enumerate().map(|(i, v)| twist(i).transpose() * v).collect();
    let lambda = (n as f64 / std::f64::consts::TAU).powi(2);
    let cols: Vec<Vec<f64>> =
        (0..3).map(|c| solve_cyclic(&tg.iter().map(|v| v[c]).collect::<Vec<_>>(), lambda)).collect();
    (0..n).map(|i| twist(i) * Vector3::new(cols[0][i], cols[1][i], cols[2][i])).collect()
}

fn dot(a: &[Vector3<f64>], b: &[Vector3<f64>]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u.dot(v)).sum()
}

/// Length descent by projected, preconditioned nonlinear conjugate gradients
/// (Polak-Ribiere+) with backtracking. Only strict decreases are accepted, so the length
/// sequence is monotone. The homotopy class is fixed by construction.
pub fn shorten<M: MetricField + ?Sized>(metric: &M, initial: ClosedLoop, cfg: &ShorteningConfig) -> ShorteningOutcome {
    let range = metric.x_range();
    let mut lp = initial;
    lp.clamp_x(range);
    let mut len = lp.length(metric);
    let mut history = vec![len];
    let mut grad = lp.gradient(metric);
    let mut pgrad = precondition(&grad, &lp.class);
    let mut dir: Vec<Vector3<f64>> = pgrad.iter().map(|g| -g).collect();
    let mut step = 1e-2;
    let mut small = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iterations {
        iterations += 1;
        let slope = dot(&grad, &dir);
        if slope >= 0.0 {
            dir = pgrad.iter().map(|g| -g).collect();
        }
        let mut t = step * 2.0;
        let mut accepted = None;
        for _ in 0..60 {
            let trial = add_scaled(&lp, &dir, t, range);
            let tl = trial.length(metric);
            if tl < len {
                accepted = Some((trial, tl));
                break;
            }
            t *= 0.5;
        }
        let Some((next, next_len)) = accepted else {
            // No decrease along this direction; fall back to steepest descent once.
            let steepest: Vec<Vector3<f64>> = pgrad.iter().map(|g| -g).collect();
            if dir == steepest {
                converged = true;
                break;
            }
            dir = steepest;
            continue;
        };
        step = t;
        let improvement = (len - next_len) / len;
        lp = next;
        len = next_len;
        history.push(len);
        if improvement < cfg.relative_tolerance {
            small += 1;
            if small >= 8 {
                converged = true;
                break;
            }
        } else {
            small = 0;
        }
        let new_grad = lp.gradient(metric);
        let new_pgrad = precondition(&new_grad, &lp.class);
        let gg = dot(&grad, &pgrad);
        let beta = if gg > 0.0 { (dot(&new_grad, &new_pgrad) - dot(&grad, &new_pgrad)) / gg } else { 0.0 }.max(0.0);
        dir = new_pgrad.iter().zip(&dir).map(|(g, d)| -g + beta * d).collect();
        grad = new_grad;
        pgrad = new_pgrad;
    }
    ShorteningOutcome { lp, length: len, iterations, converged, history }
}

/// Initial loop: coarse polygon with smooth random perturbation, refined by
/// midpoint insertion to at least `64 * ceil(length)` vertices.
pub fn initial_loop<M: MetricField + ?Sized>(
    metric: &M,
    class: LoopClass,
    base: Vector3<f64>,
    amplitude: f64,
    rng: &mut ChaCha8Rng,
) -> ClosedLoop {
    let coarse_n = 8;
    let mut lp = ClosedLoop::straight(base, class, coarse_n);
    if amplitude > 0.0 {
        let phases: Vec<(f64, f64)> = (0..3).map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..1.0))).collect();
        for (i, v) in lp.vertices.iter_mut().enumerate().skip(1) {
            let s = i as f64 / coarse_n as f64;
            for (axis, (amp, phase)) in phases.iter().enumerate() {
                v[axis] +=
                    amplitude * amp * (std::f64::consts::TAU * (s + phase)).sin() * (std::f64::consts::PI * s).sin();
            }
        }
    }
    lp.clamp_x(metric.x_range());
    while (lp.len() as f64) < 64.0 * lp.length(metric).ceil() {
        lp.subdivide();
    }
    lp
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEstimate {
    pub class: LoopClass,
    pub best: f64,
    pub worst: f64,
    pub mean: f64,
    pub runs: usize,
    pub unconverged_runs: usize,
}

/// Shortest length found over all classes and restarts. An upper bound on the
/// true systole of the listed classes, never a certified value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sys1Estimate {
    pub value: f64,
    pub classes: Vec<ClassEstimate>,
    pub restarts: usize,
    pub certified: bool,
    pub converged: bool,
}

fn estimate_classes<M: MetricField + ?Sized>(
    metric: &M,
    classes: &[LoopClass],
    restarts: usize,
    seed: u64,
    base_x: impl Fn(&mut ChaCha8Rng) -> f64,
    cfg: &ShorteningConfig,
) -> Result<Sys1Estimate> {
    if classes.is_empty() {
        return Err(SystoleError::InvalidArgument("need at least one homotopy class".into()));
    }
    if let Some(c) = classes.iter().find(|c| c.is_trivial()) {
        return Err(SystoleError::InvalidArgument(format!("class {c:?} is contractible")));
    }
    if restarts == 0 {
        return Err(SystoleError::InvalidArgument("need at least one restart".into()));
    }
    let mut per_class = Vec::with_capacity(classes.len());
    for (ci, &class) in classes.iter().enumerate() {
        let mut lengths = Vec::with_capacity(restarts);
        let mut unconverged = 0;
        for r in 0..restarts {
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((ci as u64) << 32) ^ r as u64);
            let base = Vector3::new(base_x(&mut rng), rng.gen(), rng.gen());
            // Restart 0 starts from the unperturbed coordinate loop.
            let amplitude = if r == 0 { 0.0 } else { 0.15 };
            let start = initial_loop(metric, class, base, amplitude, &mut rng);
            let out = shorten(metric, start, cfg);
            debug_assert_eq!(out.lp.winding(), class.base_translation());
            unconverged += (!out.converged) as usize;
            lengths.push(out.length);
        }
        per_class.push(ClassEstimate {
            class,
            best: lengths.iter().copied().fold(f64::INFINITY, f64::min),
            worst: lengths.iter().copied().fold(0.0, f64::max),
            mean: lengths.iter().sum::<f64>() / lengths.len() as f64,
            runs: restarts,
            unconverged_runs: unconverged,
        });
    }
    Ok(Sys1Estimate {
        value: per_class.iter().map(|c| c.best).fold(f64::INFINITY, f64::min),
        converged: per_class.iter().all(|c| c.unconverged_runs == 0),
        classes: per_class,
        restarts,
        certified: false,
    })
}

/// Short classes of `T^2 x I`: `(wy, wz)` with small windings.
pub fn default_torus_classes() -> Vec<LoopClass> {
    [(1, 0), (0, 1), (1, 1), (1, -1), (1, 2)].into_iter().map(|(wy, wz)| LoopClass::Torus { wy, wz }).collect()
}

/// Generators of the Heisenberg lattice and a few short words.
pub fn default_heisenberg_classes() -> Vec<LoopClass> {
    [(1, 0, 0), (0, 1, 0), (0, 0, 1), (1, 1, 0), (1, -1, 0), (0, 1, 1), (1, 0, 1)]
        .into_iter()
        .map(|(x, y, z)| LoopClass::Heisenberg { x, y, z })
        .collect()
}

pub fn sys1_estimate(
    m: &CylinderMetric,
    classes: &[LoopClass],
    restarts: usize,
    seed: u64,
    cfg: &ShorteningConfig,
) -> Result<Sys1Estimate> {
    if let Some(c) = classes.iter().find(|c| !matches!(c, LoopClass::Torus { .. })) {
        return Err(SystoleError::InvalidArgument(format!("{c:?} is not a class of T^2 x I")));
    }
    let len = m.length();
    estimate_classes(m, classes, restarts, seed, |rng| rng.gen_range(0.0..=len), cfg)
}

/// Homotopy 1-systole estimate of the nilmanifold with metric `dx^2 + dy^2 + (dz - x dy)^2`.
pub fn nilmanifold_sys1_estimate(restarts: usize, seed: u64, cfg: &ShorteningConfig) -> Result<Sys1Estimate> {
    estimate_classes(
        &HeisenbergMetric,
        &default_heisenberg_classes(),
        restarts,
        seed,
        |rng| rng.gen_range(0.0..1.0),
        cfg,
    )
}
