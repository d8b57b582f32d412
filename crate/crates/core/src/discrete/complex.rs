//! Cubical complex on `[0, L] x T^2`, periodic in `y` and `z`.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SystoleError};
use crate::metric::{MetricField, Point3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolution {
    pub nx: usize,
    pub ny: usize,
    pub nz: usize,
}

impl Resolution {
    pub fn new(nx: usize, ny: usize, nz: usize) -> Self {
        Resolution { nx, ny, nz }
    }

    /// `(8j, 8, 8)`
    pub fn default_for(j: u32) -> Self {
        Resolution::new(8 * j as usize, 8, 8)
    }
}

/// Orientation of a 2-face by the coordinate plane it spans.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FaceKind {
    Xy,
    Xz,
    Yz,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum EdgeKind {
    X,
    Y,
    Z,
}

/// Signed incidence columns: `columns[c]` lists `(row, sign)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IncidenceMatrix {
    pub rows: usize,
    pub columns: Vec<Vec<(usize, i8)>>,
}

impl IncidenceMatrix {
    pub fn cols(&self) -> usize {
        self.columns.len()
    }

    pub fn nnz(&self) -> usize {
        self.columns.iter().map(Vec::len).sum()
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, i64)> + '_ {
        self.columns.iter().enumerate().flat_map(|(c, col)| col.iter().map(move |&(r, s)| (r, c, s as i64)))
    }

    /// `self * v`
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        for (c, col) in self.columns.iter().enumerate() {
            for &(r, s) in col {
                out[r] += s as f64 * v[c];
            }
        }
        out
    }

    /// `self^T * v`
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        self.columns.iter().map(|col| col.iter().map(|&(r, s)| s as f64 * v[r]).sum()).collect()
    }

    /// Exact integer product `self * rhs`, dropping zero entries.
    pub fn compose(&self, rhs: &IncidenceMatrix) -> BTreeMap<(usize, usize), i64> {
        let mut out = BTreeMap::new();
        for (c, col) in rhs.columns.iter().enumerate() {
            for &(mid, s) in col {
                for &(r, t) in &self.columns[mid] {
                    *out.entry((r, c)).or_insert(0i64) += s as i64 * t as i64;
                }
            }
        }
        out.retain(|_, v| *v != 0);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CubicalComplex {
    pub resolution: Resolution,
    pub x_length: f64,
    /// Area of each 2-face under the metric, by midpoint evaluation.
    pub face_weights: Vec<f64>,
    pub cube_volumes: Vec<f64>,
    /// Edges x faces.
    pub boundary2: IncidenceMatrix,
    /// Faces x cubes.
    pub boundary3: IncidenceMatrix,
}

impl CubicalComplex {
    pub fn spacing(&self) -> (f64, f64, f64) {
        let r = self.resolution;
        (self.x_length / r.nx as f64, 1.0 / r.ny as f64, 1.0 / r.nz as f64)
    }

    pub fn num_faces(&self) -> usize {
        self.face_weights.len()
    }

    pub fn num_cubes(&self) -> usize {
        self.cube_volumes.len()
    }

    pub fn num_edges(&self) -> usize {
        self.boundary2.rows
    }

    fn plane(&self) -> usize {
        self.resolution.ny * self.resolution.nz
    }

    fn yz(&self, j: usize, k: usize) -> usize {
        let r = self.resolution;
        (j % r.ny) * r.nz + k % r.nz
    }

    pub fn cube_index(&self, i: usize, j: usize, k: usize) -> usize {
        i * self.plane() + self.yz(j, k)
    }

    /// `Xy` and `Xz` faces have `i < nx`; `Yz` faces have `i <= nx`. For `Xy`
    /// the `k` index is the `z` layer, for `Xz` the `j` index is the `y` layer.
    pub fn face_index(&self, kind: FaceKind, i: usize, j: usize, k: usize) -> usize {
        let block = self.resolution.nx * self.plane();
        let off = match kind {
            FaceKind::Xy => 0,
            FaceKind::Xz => block,
            FaceKind::Yz => 2 * block,
        };
        off + i * self.plane() + self.yz(j, k)
    }

    pub fn edge_index(&self, kind: EdgeKind, i: usize, j: usize, k: usize) -> usize {
        let p = self.plane();
        let nx = self.resolution.nx;
        let off = match kind {
            EdgeKind::X => 0,
            EdgeKind::Y => nx * p,
            EdgeKind::Z => nx * p + (nx + 1) * p,
        };
        off + i * p + self.yz(j, k)
    }

    /// Inverse of [`face_index`](Self::face_index).
    pub fn face_position(&self, f: usize) -> (FaceKind, usize, usize, usize) {
        let p = self.plane();
        let block = self.resolution.nx * p;
        let (kind, rem) = if f < block {
            (FaceKind::Xy, f)
        } else if f < 2 * block {
            (FaceKind::Xz, f - block)
        } else {
            (FaceKind::Yz, f - 2 * block)
        };
        let nz = self.resolution.nz;
        (kind, rem / p, (rem % p) / nz, rem % nz)
    }

    /// Faces lying in the walls `x = 0` and `x = L`.
    pub fn is_wall_face(&self, f: usize) -> bool {
        match self.face_position(f) {
            (FaceKind::Yz, i, _, _) => i == 0 || i == self.resolution.nx,
            _ => false,
        }
    }

    pub fn is_wall_edge(&self, e: usize) -> bool {
        let p = self.plane();
        let nx = self.resolution.nx;
        let x_edges = nx * p;
        if e < x_edges {
            return false;
        }
        let i = ((e - x_edges) % ((nx + 1) * p)) / p;
        i == 0 || i == nx
    }

    /// `x` coordinate of the barycenter of face `f`.
    pub fn face_x(&self, f: usize) -> f64 {
        let (dx, _, _) = self.spacing();
        match self.face_position(f) {
            (FaceKind::Yz, i, _, _) => i as f64 * dx,
            (_, i, _, _) => (i as f64 + 0.5) * dx,
        }
    }

    /// `d_2 d_3 = 0` over the integers.
    pub fn boundary_squared_vanishes(&self) -> bool {
        self.boundary2.compose(&self.boundary3).is_empty()
    }
}

/// Builds the complex with `resolution` cells over `[0, L] x [0,1)^2`, where
/// `[0, L]` is the metric's admissible `x` range. Requires `n_y, n_z >= 4`
/// and `n_x >= 2L` (i.e. `n_x >= 4j` for `Y_j`).
pub fn build_complex<M: MetricField + ?Sized>(metric: &M, resolution: Resolution) -> Result<CubicalComplex> {
    let Some((x0, x1)) = metric.x_range() else {
        return Err(SystoleError::InvalidArgument("metric must have a bounded x range".into()));
    };
    let x_length = x1 - x0;
    let Resolution { nx, ny, nz } = resolution;
    if ny < 4 || nz < 4 || (nx as f64) < 2.0 * x_length || nx == 0 {
        return Err(SystoleError::ResolutionTooCoarse(format!(
            "need n_x >= {} and n_y, n_z >= 4, got ({nx}, {ny}, {nz})",
            (2.0 * x_length).ceil()
        )));
    }
    let mut c = CubicalComplex {
        resolution,
        x_length,
        face_weights: Vec::new(),
        cube_volumes: Vec::new(),
        boundary2: IncidenceMatrix { rows: 0, columns: Vec::new() },
        boundary3: IncidenceMatrix { rows: 0, columns: Vec::new() },
    };
    let (dx, dy, dz) = c.spacing();
    let p = ny * nz;
    let n_faces = 3 * nx * p + p;
    let n_edges = nx * p + 2 * (nx + 1) * p;
    let n_cubes = nx * p;

    let gram_at = |x: f64| metric.gram(Point3::new(x0 + x, 0.0, 0.0));
    // Weights depend on x only; evaluate once per slab.
    let slab: Vec<(f64, f64, f64)> = (0..nx)
        .into_par_iter()
        .map(|i| {
            let g = gram_at((i as f64 + 0.5) * dx);
            (g.minor_sqrt(0, 1) * dx * dy, g.minor_sqrt(0, 2) * dx * dz, g.det().sqrt() * dx * dy * dz)
        })
        .collect();
    let walls: Vec<f64> = (0..=nx).map(|i| gram_at(i as f64 * dx).minor_sqrt(1, 2) * dy * dz).collect();

    c.face_weights = (0..n_faces)
        .into_par_iter()
        .map(|f| match c.face_position(f) {
            (FaceKind::Xy, i, _, _) => slab[i].0,
            (FaceKind::Xz, i, _, _) => slab[i].1,
            (FaceKind::Yz, i, _, _) => walls[i],
        })
        .collect();
    c.cube_volumes = (0..n_cubes).map(|q| slab[q / p].2).collect();

    let e = |kind, i, j, k| c.edge_index(kind, i, j, k);
    let f = |kind, i, j, k| c.face_index(kind, i, j, k);
    let mut faces = vec![Vec::new(); n_faces];
    for i in 0..=nx {
        for j in 0..ny {
            for k in 0..nz {
                if i < nx {
                    faces[f(FaceKind::Xy, i, j, k)] = vec![
                        (e(EdgeKind::X, i, j, k), 1),
                        (e(EdgeKind::Y, i + 1, j, k), 1),
                        (e(EdgeKind::X, i, j + 1, k), -1),
                        (e(EdgeKind::Y, i, j, k), -1),
                    ];
                    faces[f(FaceKind::Xz, i, j, k)] = vec![
                        (e(EdgeKind::X, i, j, k), 1),
                        (e(EdgeKind::Z, i + 1, j, k), 1),
                        (e(EdgeKind::X, i, j, k + 1), -1),
                        (e(EdgeKind::Z, i, j, k), -1),
                    ];
                }
                faces[f(FaceKind::Yz, i, j, k)] = vec![
                    (e(EdgeKind::Y, i, j, k), 1),
                    (e(EdgeKind::Z, i, j + 1, k), 1),
                    (e(EdgeKind::Y, i, j, k + 1), -1),
                    (e(EdgeKind::Z, i, j, k), -1),
                ];
            }
        }
    }
    let mut cubes = vec![Vec::new(); n_cubes];
    for i in 0..nx {
        for j in 0..ny {
            for k in 0..nz {
                cubes[c.cube_index(i, j, k)] = vec![
                    (f(FaceKind::Yz, i + 1, j, k), 1),
                    (f(FaceKind::Yz, i, j, k), -1),
                    (f(FaceKind::Xz, i, j + 1, k), -1),
                    (f(FaceKind::Xz, i, j, k), 1),
                    (f(FaceKind::Xy, i, j, k + 1), 1),
                    (f(FaceKind::Xy, i, j, k), -1),
                ];
            }
        }
    }
    c.boundary2 = IncidenceMatrix { rows: n_edges, columns: faces };
    c.boundary3 = IncidenceMatrix { rows: n_faces, columns: cubes };
    if !c.boundary_squared_vanishes() {
        return Err(SystoleError::LinearProgram("boundary of boundary is nonzero".into()));
    }
    if c.face_weights.iter().chain(&c.cube_volumes).any(|w| !(*w > 0.0)) {
        return Err(SystoleError::NotPositiveDefinite { det: 0.0 });
    }
    Ok(c)
}

/// Sparse real 2-chain: face index to coefficient.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Chain2 {
    pub coefficients: BTreeMap<usize, f64>,
}

impl Chain2 {
    pub fn from_dense(values: &[f64]) -> Self {
        Chain2 { coefficients: values.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(i, v)| (i, *v)).collect() }
    }

    pub fn to_dense(&self, len: usize) -> Vec<f64> {
        let mut out = vec![0.0; len];
        for (&i, &v) in &self.coefficients {
            out[i] = v;
        }
        out
    }

    pub fn mass(&self, c: &CubicalComplex) -> f64 {
        self.coefficients.iter().map(|(&f, v)| c.face_weights[f] * v.abs()).sum()
    }

    /// Boundary restricted to edges off the walls.
    pub fn relative_boundary(&self, c: &CubicalComplex) -> Vec<f64> {
        let mut b = c.boundary2.apply(&self.to_dense(c.num_faces()));
        for (e, v) in b.iter_mut().enumerate() {
            if c.is_wall_edge(e) {
                *v = 0.0;
            }
        }
        b
    }
}

/// All `(x, y)`-faces in the `z` layer `k` with coefficient one: the cylinder
/// `M` as a relative cycle.
pub fn reference_cycle_m(c: &CubicalComplex, k: usize) -> Chain2 {
    let r = c.resolution;
    let mut coefficients = BTreeMap::new();
    for i in 0..r.nx {
        for j in 0..r.ny {
            coefficients.insert(c.face_index(FaceKind::Xy, i, j, k), 1.0);
        }
    }
    Chain2 { coefficients }
}
