//! High-order finite difference schemes for hyperbolic conservation laws
//! built on multi-resolution ENO reconstruction.

pub mod coeff;
pub mod config;
pub mod error;
pub mod flux;
pub mod harness;
pub mod physics;
pub mod real;
pub mod reconstruct;
pub mod solver;
pub mod timeint;
mod reference_tables;

pub use error::{Error, Result};
pub use real::{DoubleDouble, Real};
