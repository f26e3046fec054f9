//! Duality and thinning toolkit for Lloyd-Sudbury interacting particle systems.

pub mod duality;
pub mod error;
pub mod exact;
pub mod model;
pub mod rng;
pub mod scalar;
pub mod stochastic;
pub mod thinning;

pub use error::{Error, Result};
pub use scalar::{parse_rational, parse_scalar, Rational, Scalar};

/// Crate version, recorded in run reports.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
