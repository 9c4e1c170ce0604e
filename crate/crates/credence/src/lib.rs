//! Model-agnostic confidence tooling for classifier prediction dumps.
//!
//! Given a dump of per-example class scores (logits or probabilities,
//! optionally with ground-truth labels), this crate provides:
//!
//! - [`stats`] — multi-run summarization (mean ± 3σ) and one-sided
//!   paired t-tests for comparing models, with separate statistical and
//!   practical significance flags;
//! - [`calibration`] — reliability bins, expected calibration error,
//!   a total calibration error over all class scores, and temperature
//!   scaling (global or per-class) fitted by deterministic grid search;
//! - [`rejection`] — accept/reject threshold fitting under coverage or
//!   risk constraints;
//! - [`hierarchy`] — bottom-up generalization of under-confident
//!   predictions through a class hierarchy, plus hierarchy-free subset
//!   generalization;
//! - [`prior_shift`] — recovery of class-conditional likelihoods (up to
//!   scale) from posteriors and training priors, and posterior
//!   re-estimation under new priors;
//! - [`cli`] — a batch front end wiring the above together, with fitted
//!   artifacts persisted in a single [`policy::PolicyBundle`] file.
//!
//! Everything is a pure function over immutable inputs; there is no
//! stochastic component anywhere, so identical inputs always produce
//! identical outputs. See the crate's `examples/` directory for one
//! runnable example per capability.

pub mod calibration;
pub mod cli;
pub mod error;
pub mod hierarchy;
pub mod io;
pub mod model;
pub mod policy;
pub mod prior_shift;
pub mod rejection;
pub mod stats;

pub use error::{Error, Result};
pub use model::{argmax_class, softmax, ClassCatalog, PredictionSet, RunScoreTable, ScoreKind};
