pub mod cli;
pub mod cones;
pub mod discrimination;
pub mod error;
pub mod herm;
pub mod metrics;
pub mod report;
pub mod symmetry;
pub mod tol;
pub mod verify;

pub use error::{Error, Result};
