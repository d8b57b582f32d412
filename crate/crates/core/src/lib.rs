//! Numerical companion for systolic freedom of Heisenberg-cylinder metrics:
//! flat torus slices, the cylinders `Y_j`, calibrating forms, loop shortening,
//! a discrete mass LP, and the assembled `T^3` example.

pub mod calibration;
pub mod cylinder;
pub mod discrete;
pub mod error;
pub mod flat_torus;
pub mod geodesics;
pub mod group;
pub mod loops;
pub mod metric;
pub mod quadrature;
pub mod report;
pub mod torus3;
pub mod verify;

pub use error::{Result, SystoleError};
