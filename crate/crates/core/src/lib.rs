//! Hierarchical Bayesian linear regression for reaction-time effects in
//! numerical cognition: the SNARC effect (dRT regressed on digit) and the
//! numerical distance effect (RT regressed on ratio bin).
//!
//! The pipeline runs from trial files ([`dataset`]) through a Gibbs sampler
//! ([`sampler`]) to convergence checks ([`diagnostics`]), posterior
//! summaries and Savage–Dickey Bayes factors ([`inference`]). The classical
//! per-subject regression baseline lives in [`rca`] and the shrinkage
//! simulation in [`simulate`]. Model variants and Bayes-factor density
//! estimators are looked up by name through [`registry`].

// `!(x > 0.0)` is used on purpose so NaN fails validation
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod dataset;
pub mod diagnostics;
pub mod error;
pub mod inference;
pub mod model;
pub mod rca;
pub mod registry;
pub mod sampler;
pub mod simulate;
pub mod variants;

pub use error::{Error, Result};
