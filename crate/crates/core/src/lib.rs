pub mod adapted_metric;
pub mod ball_extension;
pub mod determinant_i2;
pub mod error;
pub mod report;
pub mod sphere_spectral;
pub mod trace_inequalities;

pub use error::{Error, Result};
