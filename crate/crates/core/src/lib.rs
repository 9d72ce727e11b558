//! Symbol-based multigrid for structured saddle-point systems arising from a
//! Q1-iso-Q2/Q1 Stokes discretization.

pub mod analysis;
pub mod cli;
pub mod error;
pub mod experiments;
pub mod saddle_mg;
pub mod smoothers;
pub mod sparse;
pub mod stokes;
pub mod structured;
pub mod symbol;

pub use error::{Error, Result};
