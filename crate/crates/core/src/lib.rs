//! Numerical toolkit for certifying essential spectra of model manifolds.

pub mod cli;
pub mod comparison;
pub mod error;
pub mod geometry;
pub mod model_file;
pub mod oracle;
pub mod profile;
pub mod quadrature;
pub mod report;
pub mod smoothing;
pub mod volume;
pub mod weyl;

pub use error::{Error, Result};
