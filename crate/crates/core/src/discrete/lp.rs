//! Minimal weighted l1 mass in a relative homology class, with an LP dual
//! certificate.

use clarabel::algebra::CscMatrix;
use clarabel::solver::{DefaultSettingsBuilder, DefaultSolver, IPSolver, NonnegativeConeT, SolverStatus};
use serde::{Deserialize, Serialize};

use super::complex::{Chain2, CubicalComplex, FaceKind};
use crate::calibration::{alpha_at, CutoffProfile};
use crate::error::{Result, SystoleError};
use crate::metric::Point3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LpSettings {
    pub max_iterations: u32,
    pub tolerance: f64,
}

impl Default for LpSettings {
    fn default() -> Self {
        LpSettings { max_iterations: 200, tolerance: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MassCertificate {
    /// Optimal chain `ref + d_3 potential`, zero on wall faces.
    pub chain: Vec<f64>,
    pub potential: Vec<f64>,
    pub reference: Vec<f64>,
    pub primal_mass: f64,
    /// Discrete calibration: one value per face, zero on wall faces.
    pub dual: Vec<f64>,
    /// `<dual, reference>`
    pub pairing: f64,
    /// `primal_mass - pairing`
    pub gap: f64,
    pub iterations: u32,
    /// False if the solver stopped early; the chain is then the best found.
    pub converged: bool,
}

impl MassCertificate {
    pub fn chain2(&self) -> Chain2 {
        Chain2::from_dense(&self.chain)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CertificateViolation {
    /// `|dual_f| > w_f`
    DualBound {
        face: usize,
        value: f64,
        weight: f64,
    },
    /// Dual does not vanish on the boundary of a cube.
    NotClosed {
        cube: usize,
        residual: f64,
    },
    /// Dual is nonzero on a wall face.
    WallFace {
        face: usize,
    },
    /// Chain differs from `ref + d_3 potential` off the walls.
    NotHomologous {
        face: usize,
        residual: f64,
    },
    /// Mass and pairing disagree beyond the tolerance.
    Gap {
        primal: f64,
        pairing: f64,
    },
    Dimension,
}

impl std::fmt::Display for CertificateViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Minimizes `sum_f w_f |c_f|` over `c = ref + d_3 d` modulo wall faces.
///
/// Variables are the cube potential `d` (one cube fixed as a gauge, since the
/// sum of all cubes has no interior boundary) and face bounds `t >= |c|`.
pub fn minimize_mass(c: &CubicalComplex, reference: &Chain2, settings: &LpSettings) -> Result<MassCertificate> {
    let r_full = reference.to_dense(c.num_faces());
    if reference.relative_boundary(c).iter().any(|v| v.abs() > 1e-12) {
        return Err(SystoleError::InvalidArgument("reference chain is not a relative cycle".into()));
    }
    let interior: Vec<usize> = (0..c.num_faces()).filter(|&f| !c.is_wall_face(f)).collect();
    let mut row_of = vec![usize::MAX; c.num_faces()];
    for (row, &f) in interior.iter().enumerate() {
        row_of[f] = row;
    }
    let nf = interior.len();
    let nd = c.num_cubes() - 1;
    let n = nd + nf;

    let (mut ii, mut jj, mut vv) = (Vec::new(), Vec::new(), Vec::new());
    for (cube, col) in c.boundary3.columns.iter().enumerate().skip(1) {
        for &(f, s) in col {
            let row = row_of[f];
            if row == usize::MAX {
                continue;
            }
            let s = s as f64;
            ii.extend([row, nf + row]);
            jj.extend([cube - 1, cube - 1]);
            vv.extend([s, -s]);
        }
    }
    for row in 0..nf {
        ii.extend([row, nf + row]);
        jj.extend([nd + row, nd + row]);
        vv.extend([-1.0, -1.0]);
    }
    let a = CscMatrix::new_from_triplets(2 * nf, n, ii, jj, vv);
    let p = CscMatrix::zeros((n, n));
    let mut q = vec![0.0; n];
    for (row, &f) in interior.iter().enumerate() {
        q[nd + row] = c.face_weights[f];
    }
    let mut b = vec![0.0; 2 * nf];
    for (row, &f) in interior.iter().enumerate() {
        b[row] = -r_full[f];
        b[nf + row] = r_full[f];
    }
    let cones = [NonnegativeConeT(2 * nf)];
    let clarabel_settings = DefaultSettingsBuilder::default()
        .verbose(false)
        .max_iter(settings.max_iterations)
        .tol_gap_abs(settings.tolerance)
        .tol_gap_rel(settings.tolerance)
        .tol_feas(settings.tolerance)
        .max_threads(1)
        .build()
        .map_err(|e| SystoleError::LinearProgram(format!("settings: {e:?}")))?;
    let mut solver = DefaultSolver::new(&p, &q, &a, &b, &cones, clarabel_settings)
        .map_err(|e| SystoleError::LinearProgram(format!("setup: {e:?}")))?;
    solver.solve();
    let sol = &solver.solution;
    let converged = match sol.status {
        SolverStatus::Solved => true,
        SolverStatus::AlmostSolved
        | SolverStatus::MaxIterations
        | SolverStatus::MaxTime
        | SolverStatus::InsufficientProgress => false,
        other => return Err(SystoleError::LinearProgram(format!("solver status {other:?}"))),
    };

    let mut potential = vec![0.0; c.num_cubes()];
    potential[1..].copy_from_slice(&sol.x[..nd]);
    let mut chain = r_full.clone();
    for (f, v) in c.boundary3.apply(&potential).into_iter().enumerate() {
        chain[f] += v;
    }
    let mut dual = vec![0.0; c.num_faces()];
    for (row, &f) in interior.iter().enumerate() {
        dual[f] = sol.z[row] - sol.z[nf + row];
    }
    for f in 0..c.num_faces() {
        if c.is_wall_face(f) {
            chain[f] = 0.0;
        }
    }
    let primal_mass = Chain2::from_dense(&chain).mass(c);
    let pairing: f64 = dual.iter().zip(&r_full).map(|(y, r)| y * r).sum();
    Ok(MassCertificate {
        chain,
        potential,
        reference: r_full,
        primal_mass,
        pairing,
        gap: primal_mass - pairing,
        dual,
        iterations: sol.iterations,
        converged,
    })
}

/// Checks dual feasibility, closedness, homology of the chain with the
/// reference, and agreement of mass with the pairing, each to relative
/// tolerance `tol`.
pub fn certificate_check(
    cert: &MassCertificate,
    c: &CubicalComplex,
    tol: f64,
) -> std::result::Result<(), CertificateViolation> {
    let nf = c.num_faces();
    if cert.dual.len() != nf
        || cert.chain.len() != nf
        || cert.reference.len() != nf
        || cert.potential.len() != c.num_cubes()
    {
        return Err(CertificateViolation::Dimension);
    }
    dual_feasibility(&cert.dual, c, tol)?;
    let bd = c.boundary3.apply(&cert.potential);
    let scale = cert.reference.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    for f in 0..nf {
        if c.is_wall_face(f) {
            continue;
        }
        let residual = cert.chain[f] - cert.reference[f] - bd[f];
        if residual.abs() > tol * scale {
            return Err(CertificateViolation::NotHomologous { face: f, residual });
        }
    }
    let primal = Chain2::from_dense(&cert.chain).mass(c);
    let pairing: f64 = cert.dual.iter().zip(&cert.reference).map(|(y, r)| y * r).sum();
    if (primal - pairing).abs() > tol * primal.abs().max(1.0) {
        return Err(CertificateViolation::Gap { primal, pairing });
    }
    Ok(())
}

/// A dual is feasible if it vanishes on wall faces, `|y_f| <= w_f (1 + tol)`,
/// and it sums to (nearly) zero on every cube boundary.
pub fn dual_feasibility(dual: &[f64], c: &CubicalComplex, tol: f64) -> std::result::Result<(), CertificateViolation> {
    if dual.len() != c.num_faces() {
        return Err(CertificateViolation::Dimension);
    }
    for (f, (&y, &w)) in dual.iter().zip(&c.face_weights).enumerate() {
        if c.is_wall_face(f) {
            if y != 0.0 {
                return Err(CertificateViolation::WallFace { face: f });
            }
            continue;
        }
        if y.abs() > w * (1.0 + tol) {
            return Err(CertificateViolation::DualBound { face: f, value: y, weight: w });
        }
    }
    let wmax = c.face_weights.iter().fold(0.0f64, |m, w| m.max(*w));
    for (cube, residual) in c.boundary3.apply_transpose(dual).into_iter().enumerate() {
        if residual.abs() > tol * wmax {
            return Err(CertificateViolation::NotClosed { cube, residual });
        }
    }
    Ok(())
}

/// `phi_j alpha` integrated over each face by its barycenter value, on the
/// half `x < j` of the complex for `Y_j`; zero elsewhere.
pub fn sampled_calibration_dual(c: &CubicalComplex, phi: &CutoffProfile) -> Vec<f64> {
    let (dx, dy, dz) = c.spacing();
    let j = phi.j() as f64;
    (0..c.num_faces())
        .map(|f| {
            let x = c.face_x(f);
            if x >= j {
                return 0.0;
            }
            let a = alpha_at(Point3::new(x, 0.0, 0.0)).scale(phi.value(x));
            match c.face_position(f).0 {
                FaceKind::Xy => a.xy * dx * dy,
                FaceKind::Xz => a.xz * dx * dz,
                FaceKind::Yz => 0.0,
            }
        })
        .collect()
}

pub fn pairing(dual: &[f64], chain: &Chain2) -> f64 {
    chain.coefficients.iter().map(|(&f, v)| dual[f] * v).sum()
}
