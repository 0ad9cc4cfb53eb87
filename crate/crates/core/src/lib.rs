//! Exact solver for the finite-horizon upper-quantile Kelly problem.

pub mod arrangement;
pub mod error;
pub mod family;
pub mod geometry;
pub mod linalg;
pub mod lp;
pub mod problem;
pub mod quantile;
pub mod rational;
pub mod shadow;
pub mod solver;
pub mod stratum;
pub mod verify;

pub use error::{Error, InstanceError, Result};
