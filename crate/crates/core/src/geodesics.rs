//! Geodesic flow for metrics whose coefficients depend on `x` only.

use nalgebra::{Matrix3, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Result, SystoleError};
use crate::metric::{FoldSide, MetricField, Point3};

/// `gamma[k][i][l] = Gamma^k_{il}`
pub type Christoffel = [[[f64; 3]; 3]; 3];

/// Christoffel symbols of the second kind at `p`; at the fold the one-sided
/// limit from `side` is used.
pub fn christoffel_at<M: MetricField + ?Sized>(metric: &M, p: Point3, side: FoldSide) -> Christoffel {
    let g = metric.gram_branch(p, side).0;
    let ginv = g.try_inverse().expect("metric is positive definite");
    let dgx = metric.gram_dx(p, side);
    // Only d/dx is nonzero: dg[l] = d_l g.
    let dg = |l: usize| if l == 0 { dgx } else { Matrix3::zeros() };
    let mut gamma = [[[0.0; 3]; 3]; 3];
    for k in 0..3 {
        for i in 0..3 {
            for j in 0..3 {
                let mut s = 0.0;
                for l in 0..3 {
                    s += ginv[(k, l)] * (dg(i)[(l, j)] + dg(j)[(l, i)] - dg(l)[(i, j)]);
                }
                gamma[k][i][j] = 0.5 * s;
            }
        }
    }
    gamma
}

fn acceleration(gamma: &Christoffel, v: &Vector3<f64>) -> Vector3<f64> {
    Vector3::from_fn(|k, _| {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += gamma[k][i][j] * v[i] * v[j];
            }
        }
        -s
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeodesicState {
    pub position: Point3,
    pub velocity: [f64; 3],
}

impl GeodesicState {
    pub fn new(position: Point3, velocity: [f64; 3]) -> Self {
        GeodesicState { position, velocity }
    }

    pub fn speed<M: MetricField + ?Sized>(&self, metric: &M) -> f64 {
        metric.gram(self.position).quadratic(&Vector3::from(self.velocity)).sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<GeodesicState>,
    /// Largest relative deviation of the speed from its initial value.
    pub speed_drift: f64,
    /// Set when integration stopped early because `x` left its range.
    pub hit_boundary: bool,
    pub fold_crossings: usize,
}

impl Trajectory {
    pub fn last(&self) -> &GeodesicState {
        self.states.last().expect("trajectory has an initial state")
    }
}

type Phase = (Vector3<f64>, Vector3<f64>);

fn rk4_step<M: MetricField + ?Sized>(metric: &M, state: Phase, dt: f64, side: FoldSide) -> Phase {
    let f = |(q, v): Phase| -> Phase {
        let gamma = christoffel_at(metric, Point3::from_vector(&q), side);
        (v, acceleration(&gamma, &v))
    };
    let (q, v) = state;
    let k1 = f(state);
    let k2 = f((q + 0.5 * dt * k1.0, v + 0.5 * dt * k1.1));
    let k3 = f((q + 0.5 * dt * k2.0, v + 0.5 * dt * k2.1));
    let k4 = f((q + dt * k3.0, v + dt * k3.1));
    (q + dt / 6.0 * (k1.0 + 2.0 * k2.0 + 2.0 * k3.0 + k4.0), v + dt / 6.0 * (k1.1 + 2.0 * k2.1 + 2.0 * k3.1 + k4.1))
}

/// Advances across a possible fold crossing: if the step lands on the other
/// side, the crossing time is located by bisection and the remainder of the
/// step uses the one-sided derivatives of the new side. Position and velocity
/// pass through the fold unchanged.
fn step_with_fold<M: MetricField + ?Sized>(metric: &M, state: Phase, dt: f64) -> (Phase, bool) {
    let side = metric.side_of(state.0[0]);
    let next = rk4_step(metric, state, dt, side);
    let Some(fold) = metric.fold() else {
        return (next, false);
    };
    if metric.side_of(next.0[0]) == side {
        return (next, false);
    }
    let (mut lo, mut hi) = (0.0, dt);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        let trial = rk4_step(metric, state, mid, side);
        if (trial.0[0] - fold).signum() == (state.0[0] - fold).signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let at_fold = rk4_step(metric, state, hi, side);
    let other = match side {
        FoldSide::Left => FoldSide::Right,
        FoldSide::Right => FoldSide::Left,
    };
    let rest = rk4_step(metric, at_fold, dt - hi, other);
    (rest, true)
}

/// Fixed-step RK4 integration of the geodesic equation up to time `t_end`.
/// Integration stops if `x` leaves the metric's admissible range.
pub fn integrate_geodesic<M: MetricField + ?Sized>(
    metric: &M,
    start: GeodesicState,
    t_end: f64,
    step: f64,
) -> Result<Trajectory> {
    if !(step > 0.0) || !(t_end >= 0.0) {
        return Err(SystoleError::InvalidArgument(format!("need step > 0 and T >= 0, got {step}, {t_end}")));
    }
    let speed0 = start.speed(metric);
    let mut state: Phase = (start.position.to_vector(), Vector3::from(start.velocity));
    let mut traj =
        Trajectory { times: vec![0.0], states: vec![start], speed_drift: 0.0, hit_boundary: false, fold_crossings: 0 };
    let n = (t_end / step).ceil() as usize;
    let mut t = 0.0;
    for i in 0..n {
        let dt = if i + 1 == n { t_end - t } else { step };
        if dt <= 0.0 {
            break;
        }
        let (next, crossed) = step_with_fold(metric, state, dt);
        if let Some((lo, hi)) = metric.x_range() {
            if next.0[0] < lo || next.0[0] > hi {
                traj.hit_boundary = true;
                break;
            }
        }
        state = next;
        t += dt;
        traj.fold_crossings += crossed as usize;
        let s = GeodesicState::new(Point3::from_vector(&state.0), [state.1[0], state.1[1], state.1[2]]);
        if speed0 > 0.0 {
            traj.speed_drift = traj.speed_drift.max((s.speed(metric) - speed0).abs() / speed0);
        }
        traj.times.push(t);
        traj.states.push(s);
    }
    Ok(traj)
}
