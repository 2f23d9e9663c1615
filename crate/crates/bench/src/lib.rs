//! Shared inputs for the criterion benches.

use bayeseval::rng::{keyed, tag};
use bayeseval::{validate_matrix, ResultsMatrix};
use rand::Rng;

/// Uniformly random `questions x trials` matrix over categories `0..=max_category`.
pub fn random_matrix(questions: usize, trials: usize, max_category: u32, seed: u64) -> ResultsMatrix {
    let mut rng = keyed(&[seed, tag::FIXTURE]);
    let rows: Vec<Vec<i64>> = (0..questions)
        .map(|_| (0..trials).map(|_| rng.random_range(0..=max_category as i64)).collect())
        .collect();
    validate_matrix(&rows, max_category).expect("generated cells are in range")
}
