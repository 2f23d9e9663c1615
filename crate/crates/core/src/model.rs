//! Core domain types: results matrices, priors, weights and per-question tallies.
//!
//! Categories are plain integers `0..=C`. Any mapping from human-readable
//! labels to indices happens in [`crate::io`]; nothing in here looks at labels.

use serde::Serialize;

use crate::error::{Error, Result};

/// An `M x N` grid of categorical trial outcomes, one row per question.
///
/// `C` (the largest category) is declared by the caller rather than inferred,
/// so an all-zero binary matrix still has `C = 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ResultsMatrix {
    questions: usize,
    trials: usize,
    max_category: u32,
    cells: Vec<u32>,
    question_ids: Option<Vec<String>>,
}

/// Validates a rectangular grid of raw integers against the category bound `max_category` (C).
pub fn validate_matrix<R: AsRef<[i64]>>(raw: &[R], max_category: u32) -> Result<ResultsMatrix> {
    if max_category < 1 {
        return Err(Error::TooFewCategories(max_category as usize + 1));
    }
    let first = raw.first().ok_or(Error::EmptyMatrix)?;
    let trials = first.as_ref().len();
    let mut cells = Vec::with_capacity(raw.len() * trials);
    for (row, values) in raw.iter().enumerate() {
        let values = values.as_ref();
        if values.len() != trials {
            return Err(Error::RaggedRows {
                row,
                expected: trials,
                found: values.len(),
            });
        }
        for (col, &value) in values.iter().enumerate() {
            if value < 0 || value > max_category as i64 {
                return Err(Error::CategoryOutOfRange {
                    row,
                    col,
                    value,
                    max: max_category,
                });
            }
            cells.push(value as u32);
        }
    }
    Ok(ResultsMatrix {
        questions: raw.len(),
        trials,
        max_category,
        cells,
        question_ids: None,
    })
}

impl ResultsMatrix {
    /// Builds a matrix from row-major cells that are already known to be in range.
    pub(crate) fn from_cells(
        questions: usize,
        trials: usize,
        max_category: u32,
        cells: Vec<u32>,
    ) -> Self {
        debug_assert_eq!(cells.len(), questions * trials);
        debug_assert!(cells.iter().all(|&v| v <= max_category));
        ResultsMatrix {
            questions,
            trials,
            max_category,
            cells,
            question_ids: None,
        }
    }

    pub fn with_question_ids(mut self, ids: Vec<String>) -> Result<Self> {
        if ids.len() != self.questions {
            return Err(Error::RaggedRows {
                row: ids.len(),
                expected: self.questions,
                found: ids.len(),
            });
        }
        self.question_ids = Some(ids);
        Ok(self)
    }

    /// Number of questions, M.
    pub fn questions(&self) -> usize {
        self.questions
    }

    /// Number of trials per question, N.
    pub fn trials(&self) -> usize {
        self.trials
    }

    /// Largest category value, C.
    pub fn max_category(&self) -> u32 {
        self.max_category
    }

    /// C + 1.
    pub fn num_categories(&self) -> usize {
        self.max_category as usize + 1
    }

    pub fn question_ids(&self) -> Option<&[String]> {
        self.question_ids.as_deref()
    }

    pub fn row(&self, question: usize) -> &[u32] {
        &self.cells[question * self.trials..(question + 1) * self.trials]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        (0..self.questions).map(move |q| self.row(q))
    }

    pub fn get(&self, question: usize, trial: usize) -> u32 {
        self.cells[question * self.trials + trial]
    }

    /// The first `n` trials of every question.
    pub fn prefix(&self, n: usize) -> ResultsMatrix {
        let n = n.min(self.trials);
        let mut cells = Vec::with_capacity(self.questions * n);
        for row in self.rows() {
            cells.extend_from_slice(&row[..n]);
        }
        ResultsMatrix {
            questions: self.questions,
            trials: n,
            max_category: self.max_category,
            cells,
            question_ids: self.question_ids.clone(),
        }
    }

    /// Column-wise concatenation `[self | other]`.
    pub fn concat_trials(&self, other: &ResultsMatrix) -> Result<ResultsMatrix> {
        if self.questions != other.questions || self.max_category != other.max_category {
            return Err(Error::PriorShapeMismatch {
                questions: other.questions,
                max: other.max_category,
                prior_questions: self.questions,
                prior_max: self.max_category,
            });
        }
        let trials = self.trials + other.trials;
        let mut cells = Vec::with_capacity(self.questions * trials);
        for q in 0..self.questions {
            cells.extend_from_slice(self.row(q));
            cells.extend_from_slice(other.row(q));
        }
        Ok(ResultsMatrix {
            questions: self.questions,
            trials,
            max_category: self.max_category,
            cells,
            question_ids: self.question_ids.clone(),
        })
    }

    /// Row-major copy of the cells as signed integers.
    pub fn to_rows(&self) -> Vec<Vec<i64>> {
        self.rows()
            .map(|r| r.iter().map(|&v| v as i64).collect())
            .collect()
    }

    /// Per-question category counts `n_{αk}` of this matrix, flattened row-major.
    pub fn category_counts(&self) -> Vec<u32> {
        let k = self.num_categories();
        let mut counts = vec![0u32; self.questions * k];
        for (q, row) in self.rows().enumerate() {
            for &v in row {
                counts[q * k + v as usize] += 1;
            }
        }
        counts
    }
}

/// Dirichlet prior for every question: uniform, or built from an earlier `M x D` matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum PriorData {
    #[default]
    Uniform,
    Matrix(ResultsMatrix),
}

impl PriorData {
    /// D, the number of prior trials (0 for the uniform prior).
    pub fn depth(&self) -> usize {
        match self {
            PriorData::Uniform => 0,
            PriorData::Matrix(m) => m.trials(),
        }
    }

    fn check_compatible(&self, matrix: &ResultsMatrix) -> Result<()> {
        if let PriorData::Matrix(prior) = self {
            if prior.questions() != matrix.questions()
                || prior.max_category() != matrix.max_category()
            {
                return Err(Error::PriorShapeMismatch {
                    questions: matrix.questions(),
                    max: matrix.max_category(),
                    prior_questions: prior.questions(),
                    prior_max: prior.max_category(),
                });
            }
        }
        Ok(())
    }
}

/// Rubric weights `w_0 .. w_C`. Any finite reals are allowed, including negatives.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::TooFewCategories(weights.len()));
        }
        if let Some(index) = weights.iter().position(|w| !w.is_finite()) {
            return Err(Error::NonFiniteWeight { index });
        }
        Ok(WeightVector(weights))
    }

    /// `(0, 1)`: the posterior mean is the expected fraction correct.
    pub fn binary() -> Self {
        WeightVector(vec![0.0, 1.0])
    }

    /// `w_k = k`: the average category label.
    pub fn linear(max_category: u32) -> Self {
        WeightVector((0..=max_category).map(f64::from).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub(crate) fn check_for(&self, matrix: &ResultsMatrix) -> Result<()> {
        if self.len() != matrix.num_categories() {
            return Err(Error::WeightLengthMismatch {
                expected: matrix.num_categories(),
                found: self.len(),
            });
        }
        Ok(())
    }
}

/// Per-question data counts, prior pseudo-counts and posterior Dirichlet parameters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TallyTable {
    questions: usize,
    categories: usize,
    counts: Vec<u32>,
    prior_counts: Vec<u32>,
    posterior: Vec<u32>,
    total: u64,
}

/// Tallies `R` (and `R⁰` when given) into `n`, `n⁰` and `ν = n + n⁰`.
pub fn tally(matrix: &ResultsMatrix, prior: &PriorData) -> Result<TallyTable> {
    prior.check_compatible(matrix)?;
    let counts = matrix.category_counts();
    let prior_counts: Vec<u32> = match prior {
        PriorData::Uniform => vec![1; counts.len()],
        PriorData::Matrix(p) => p.category_counts().into_iter().map(|c| c + 1).collect(),
    };
    let posterior = counts
        .iter()
        .zip(&prior_counts)
        .map(|(n, n0)| n + n0)
        .collect();
    let total = 1 + matrix.max_category() as u64 + prior.depth() as u64 + matrix.trials() as u64;
    Ok(TallyTable {
        questions: matrix.questions(),
        categories: matrix.num_categories(),
        counts,
        prior_counts,
        posterior,
        total,
    })
}

impl TallyTable {
    pub fn questions(&self) -> usize {
        self.questions
    }

    pub fn categories(&self) -> usize {
        self.categories
    }

    /// `T = 1 + C + D + N`, shared by every question.
    pub fn total(&self) -> u64 {
        self.total
    }

    /// `n_{α·}` for one question.
    pub fn counts(&self, question: usize) -> &[u32] {
        &self.counts[question * self.categories..(question + 1) * self.categories]
    }

    /// `n⁰_{α·}` for one question.
    pub fn prior_counts(&self, question: usize) -> &[u32] {
        &self.prior_counts[question * self.categories..(question + 1) * self.categories]
    }

    /// `ν_{α·}` for one question.
    pub fn posterior(&self, question: usize) -> &[u32] {
        &self.posterior[question * self.categories..(question + 1) * self.categories]
    }
}

/// Posterior mean and standard deviation of the weighted metric, plus the shape it came from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PosteriorSummary {
    pub mu: f64,
    pub sigma: f64,
    #[serde(rename = "M")]
    pub questions: usize,
    #[serde(rename = "N")]
    pub trials: usize,
    #[serde(rename = "C")]
    pub max_category: u32,
    #[serde(rename = "D")]
    pub prior_depth: usize,
}
