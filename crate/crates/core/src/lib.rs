//! Simulation and verification toolkit for Gaussian strong approximation of
//! mixing sequences in Hilbert spaces.

pub mod blocking;
pub mod config;
pub mod covariance;
pub mod error;
pub mod far;
pub mod harness;
pub mod hilbert;
mod linalg;
pub mod markov;
pub mod mixing;
pub mod rates;
pub mod reduce;
pub mod rng;

pub use error::{Error, Result};
pub use hilbert::{HilbertVec, SymOperator};

/// Library version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
