//! Bayesian evaluation of repeated-trial LLM benchmarks.
//!
//! The core estimator ([`bayes::evaluate_performance`]) turns an `M × N`
//! matrix of categorical outcomes into a posterior mean and standard
//! deviation. Around it sit the Pass@k family, ranking and agreement
//! utilities, bootstrap convergence analysis, a synthetic cohort simulator,
//! rubric-to-category mapping and file IO.

pub mod bayes;
pub mod bootstrap;
pub mod error;
pub mod io;
pub mod method;
pub mod model;
pub mod numeric;
pub mod passk;
pub mod ranking;
pub mod rng;
pub mod rubric;
pub mod simulate;

pub use bayes::{evaluate_performance, naive_weighted_average};
pub use error::{Error, Result};
pub use method::Method;
pub use model::{validate_matrix, PosteriorSummary, PriorData, ResultsMatrix, WeightVector};
