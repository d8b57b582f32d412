//! Discrete stable 2-mass on a cubical model of `Y_j`.

mod complex;
mod lp;
pub mod sparse_io;

pub use complex::{
    build_complex, reference_cycle_m, Chain2, CubicalComplex, EdgeKind, FaceKind, IncidenceMatrix, Resolution,
};
pub use lp::{
    certificate_check, dual_feasibility, minimize_mass, pairing, sampled_calibration_dual, CertificateViolation,
    LpSettings, MassCertificate,
};
