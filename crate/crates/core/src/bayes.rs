//! Closed-form posterior mean and uncertainty of a weighted rubric metric.
//!
//! Each question's category probabilities get a Dirichlet posterior with
//! parameters `ν_α = n_α + n⁰_α`. The metric `π̄ = (1/M) Σ_α w·π_α` then has
//!
//! ```text
//! μ = w_0 + 1/(M T) Σ_α Σ_j ν_αj (w_j - w_0)
//! σ² = 1/(M² (T+1)) Σ_α { Σ_j (ν_αj/T)(w_j - w_0)² - (Σ_j (ν_αj/T)(w_j - w_0))² }
//! ```
//!
//! with `T = 1 + C + D + N`. Both sums are evaluated exactly in this form.

use crate::error::{Error, Result};
use crate::model::{tally, PosteriorSummary, PriorData, ResultsMatrix, TallyTable, WeightVector};
use crate::numeric::CompensatedSum;

/// Posterior mean `μ` and standard deviation `σ` of the weighted metric.
pub fn evaluate_performance(
    matrix: &ResultsMatrix,
    prior: &PriorData,
    weights: &WeightVector,
) -> Result<PosteriorSummary> {
    weights.check_for(matrix)?;
    let table = tally(matrix, prior)?;
    let (mu, sigma) = posterior_from_tally(&table, weights);
    Ok(PosteriorSummary {
        mu,
        sigma,
        questions: matrix.questions(),
        trials: matrix.trials(),
        max_category: matrix.max_category(),
        prior_depth: prior.depth(),
    })
}

/// `(μ, σ)` from an existing tally. Panics if `weights` has the wrong length.
pub fn posterior_from_tally(table: &TallyTable, weights: &WeightVector) -> (f64, f64) {
    assert_eq!(weights.len(), table.categories(), "weight length mismatch");
    posterior_moments(
        table.questions(),
        table.total() as f64,
        weights.as_slice(),
        |q| table.posterior(q),
        0,
    )
}

/// `(μ, σ)` under the uniform prior straight from flattened data counts `n_{αk}`.
///
/// `counts` holds `questions * weights.len()` entries and each row sums to `trials`.
pub(crate) fn uniform_posterior(counts: &[u32], weights: &[f64], trials: usize) -> (f64, f64) {
    let k = weights.len();
    let questions = counts.len() / k;
    let total = (k + trials) as f64;
    posterior_moments(questions, total, weights, |q| &counts[q * k..(q + 1) * k], 1)
}

fn posterior_moments<'a>(
    questions: usize,
    total: f64,
    w: &[f64],
    nu_row: impl Fn(usize) -> &'a [u32],
    pseudo: u32,
) -> (f64, f64) {
    let w0 = w[0];
    let mut mean_sum = CompensatedSum::new();
    let mut var_sum = CompensatedSum::new();
    for q in 0..questions {
        let nu = nu_row(q);
        let mut linear = 0.0;
        let mut first = 0.0;
        let mut second = 0.0;
        for (&n, &wj) in nu.iter().zip(w) {
            let nu_j = (n + pseudo) as f64;
            let d = wj - w0;
            linear += nu_j * d;
            let p = nu_j / total;
            first += p * d;
            second += p * d * d;
        }
        mean_sum.add(linear);
        var_sum.add(second - first * first);
    }
    let m = questions as f64;
    let mu = w0 + mean_sum.value() / (m * total);
    let var = var_sum.value() / (m * m * (total + 1.0));
    (mu, var.max(0.0).sqrt())
}

/// Naive weighted average `a = 1/(M N) Σ_α Σ_j w_j n_αj`; avg@N for binary weights.
pub fn naive_weighted_average(matrix: &ResultsMatrix, weights: &WeightVector) -> Result<f64> {
    weights.check_for(matrix)?;
    if matrix.trials() == 0 {
        return Err(Error::ZeroTrials);
    }
    let w = weights.as_slice();
    let sum: CompensatedSum = matrix
        .rows()
        .map(|row| row.iter().map(|&v| w[v as usize]).sum::<f64>())
        .collect();
    Ok(sum.value() / (matrix.questions() * matrix.trials()) as f64)
}

/// Offset and scale of the uniform-prior identity `μ = A + scale · a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineBridge {
    /// `A = Σ_j w_j / (1 + C + N)`
    pub offset: f64,
    /// `N / (1 + C + N)`
    pub scale: f64,
}

impl AffineBridge {
    pub fn apply(&self, average: f64) -> f64 {
        self.offset + self.scale * average
    }
}

/// Constants linking the uniform-prior posterior mean to the naive average.
/// Depends only on `N`, `C` (through the weight length) and the weights.
pub fn affine_bridge(trials: usize, weights: &WeightVector) -> AffineBridge {
    let denom = (weights.len() + trials) as f64;
    AffineBridge {
        offset: weights.as_slice().iter().sum::<f64>() / denom,
        scale: trials as f64 / denom,
    }
}

/// Standard deviation of the naive average implied by the Bayesian one:
/// `σ_avg = (1 + C + N)/N · σ_Bayes`.
pub fn avg_sigma_from_bayes(sigma_bayes: f64, trials: usize, max_category: u32) -> Result<f64> {
    if trials == 0 {
        return Err(Error::ZeroTrials);
    }
    let factor = (1 + max_category as usize + trials) as f64 / trials as f64;
    Ok(factor * sigma_bayes)
}
