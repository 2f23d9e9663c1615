//! Scoring methods and their textual spec grammar.
//!
//! ```text
//! bayes | avg | pass@K | pass^K | naive^K | gpass@K:TAU | mgpass@K
//! ```
//!
//! `TAU` is a decimal (`0.5`) or a fraction (`1/2`).

use std::fmt;
use std::str::FromStr;

use crate::bayes::{avg_sigma_from_bayes, evaluate_performance, uniform_posterior};
use crate::error::{Error, Result};
use crate::model::{PriorData, ResultsMatrix, WeightVector};
use crate::passk::{
    g_pass_single, mg_pass_single, pass_at_k_single, pass_hat_k_single, BinaryTally, Tau,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Posterior mean under the uniform prior.
    Bayes,
    /// Naive weighted average (avg@N).
    Avg,
    PassAt(usize),
    PassHat(usize),
    NaiveHat(usize),
    GPass(usize, Tau),
    MGPass(usize),
}

/// A method's value on one model, with its standard deviation when the method has one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Score {
    pub value: f64,
    pub sigma: f64,
}

impl Method {
    /// Smallest trial count at which the method is defined.
    pub fn min_trials(&self) -> usize {
        match *self {
            Method::Bayes => 0,
            Method::Avg => 1,
            Method::NaiveHat(_) => 1,
            Method::PassAt(k) | Method::PassHat(k) | Method::GPass(k, _) | Method::MGPass(k) => k,
        }
    }

    /// True for the Pass@k family, which only reads binary outcomes.
    pub fn needs_binary(&self) -> bool {
        !matches!(self, Method::Bayes | Method::Avg)
    }

    fn undefined(&self, n: usize) -> Error {
        Error::MethodUndefinedAtN {
            method: self.to_string(),
            n,
            required: self.min_trials(),
        }
    }

    fn check(&self, max_category: u32, trials: usize) -> Result<()> {
        if self.needs_binary() && max_category != 1 {
            return Err(Error::NotBinary(max_category));
        }
        if trials < self.min_trials() {
            return Err(self.undefined(trials));
        }
        Ok(())
    }

    /// Scores a full matrix. `weights` is used by `bayes` and `avg` only.
    pub fn score(&self, matrix: &ResultsMatrix, weights: &WeightVector) -> Result<Score> {
        self.check(matrix.max_category(), matrix.trials())?;
        match *self {
            Method::Bayes => {
                let s = evaluate_performance(matrix, &PriorData::Uniform, weights)?;
                Ok(Score {
                    value: s.mu,
                    sigma: s.sigma,
                })
            }
            Method::Avg => {
                let s = evaluate_performance(matrix, &PriorData::Uniform, weights)?;
                let value = crate::bayes::naive_weighted_average(matrix, weights)?;
                let sigma = avg_sigma_from_bayes(s.sigma, matrix.trials(), matrix.max_category())?;
                Ok(Score { value, sigma })
            }
            _ => {
                let tally = BinaryTally::from_matrix(matrix)?;
                let value = self.mean_over(tally.pairs().iter().copied());
                Ok(Score { value, sigma: 0.0 })
            }
        }
    }

    /// Scores from flattened per-question counts `n_{αk}` after `trials` trials.
    /// Callers have already checked shape and binary-ness.
    pub(crate) fn score_counts(&self, counts: &[u32], weights: &[f64], trials: usize) -> Option<Score> {
        if trials < self.min_trials() {
            return None;
        }
        let k = weights.len();
        match *self {
            Method::Bayes => {
                let (value, sigma) = uniform_posterior(counts, weights, trials);
                Some(Score { value, sigma })
            }
            Method::Avg => {
                let (_, sigma_b) = uniform_posterior(counts, weights, trials);
                let questions = counts.len() / k;
                let total: f64 = counts
                    .chunks_exact(k)
                    .map(|row| row.iter().zip(weights).map(|(&n, &w)| n as f64 * w).sum::<f64>())
                    .sum();
                let value = total / (questions * trials) as f64;
                let sigma = sigma_b * (k + trials) as f64 / trials as f64;
                Some(Score { value, sigma })
            }
            _ => {
                let value = self.mean_over(counts.chunks_exact(2).map(|row| (trials, row[1] as usize)));
                Some(Score { value, sigma: 0.0 })
            }
        }
    }

    fn mean_over(&self, pairs: impl ExactSizeIterator<Item = (usize, usize)>) -> f64 {
        let len = pairs.len() as f64;
        let sum: f64 = pairs.map(|(n, c)| self.single_value(n, c)).sum();
        sum / len
    }

    /// Per-question value of a pass-family method with `c` successes out of `n`.
    pub(crate) fn single_value(&self, n: usize, c: usize) -> f64 {
        match *self {
            Method::PassAt(k) => pass_at_k_single(n, c, k),
            Method::PassHat(k) => pass_hat_k_single(n, c, k),
            Method::NaiveHat(k) => 1.0 - (1.0 - c as f64 / n as f64).powi(k as i32),
            Method::GPass(k, tau) => g_pass_single(n, c, k, tau),
            Method::MGPass(k) => mg_pass_single(n, c, k),
            Method::Bayes | Method::Avg => unreachable!("not a pass-family method"),
        }
    }

    /// Validates the method against a matrix shape without scoring.
    pub fn check_shape(&self, max_category: u32, trials: usize) -> Result<()> {
        self.check(max_category, trials)
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidMethod(s.to_string());
        let s = s.trim();
        let lower = s.to_ascii_lowercase();
        let k_of = |rest: &str| -> Result<usize> { rest.parse::<usize>().map_err(|_| bad()) };
        let method = match lower.as_str() {
            "bayes" => Method::Bayes,
            "avg" => Method::Avg,
            _ => {
                if let Some(rest) = lower.strip_prefix("mgpass@") {
                    Method::MGPass(k_of(rest)?)
                } else if let Some(rest) = lower.strip_prefix("gpass@") {
                    let (k, tau) = rest.split_once(':').ok_or_else(bad)?;
                    Method::GPass(k_of(k)?, tau.parse().map_err(|_| bad())?)
                } else if let Some(rest) = lower.strip_prefix("pass@") {
                    Method::PassAt(k_of(rest)?)
                } else if let Some(rest) = lower.strip_prefix("pass^") {
                    Method::PassHat(k_of(rest)?)
                } else if let Some(rest) = lower.strip_prefix("naive^") {
                    Method::NaiveHat(k_of(rest)?)
                } else {
                    return Err(bad());
                }
            }
        };
        match method {
            Method::PassAt(0) | Method::PassHat(0) | Method::NaiveHat(0) | Method::GPass(0, _) => Err(bad()),
            Method::MGPass(k) if k < 2 => Err(bad()),
            m => Ok(m),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Bayes => write!(f, "bayes"),
            Method::Avg => write!(f, "avg"),
            Method::PassAt(k) => write!(f, "pass@{k}"),
            Method::PassHat(k) => write!(f, "pass^{k}"),
            Method::NaiveHat(k) => write!(f, "naive^{k}"),
            Method::GPass(k, tau) => write!(f, "gpass@{k}:{tau}"),
            Method::MGPass(k) => write!(f, "mgpass@{k}"),
        }
    }
}

/// Parses a comma-separated method list.
pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',')
        .filter(|s| !s.trim().is_empty())
        .map(str::parse)
        .collect()
}
