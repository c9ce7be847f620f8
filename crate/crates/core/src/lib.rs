//! Rough-path calculus on time grids.

pub mod continuity;
pub mod controlled;
pub mod error;
pub mod fbm;
pub mod flow;
pub mod harness;
pub mod par;
pub mod quadrature;
pub mod rough_path;
pub mod sewing;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
