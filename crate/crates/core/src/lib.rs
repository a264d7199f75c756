//! Identifies who performed a hand gesture from multi-sensor motion-capture
//! recordings.
//!
//! The crate is organized as a pipeline:
//!
//! - [`dataset`]: recording/corpus data model, on-disk format, synthetic
//!   corpus generator.
//! - [`preprocess`]: resampling to a fixed length, per-sensor t-statistic
//!   normalization, vectorization.
//! - [`decomp`]: symmetric eigendecomposition, pseudoinverse and the boxed
//!   QP solver the classifiers are built on.
//! - [`classifiers`]: PCA reduction plus LDA, k-NN and SVM classifiers
//!   behind a uniform fit/predict contract.
//! - [`eval`]: scenario-based data splitting, nested cross-validation with
//!   grid search, and accuracy/confusion reporting.

pub mod classifiers;
pub mod dataset;
pub mod decomp;
pub mod eval;
pub mod io_util;
pub mod preprocess;

mod error;

pub use error::{Error, Result};
