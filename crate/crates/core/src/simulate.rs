//! Biased-coin mimics of stochastic models with known ground truth.
//!
//! A coin model answers question `α` correctly with probability `π_α`. Cohorts
//! are drawn from Beta distributions; the shipped fixture cohort additionally
//! pins each model's mean to its target value.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Beta, Distribution};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bayes::uniform_posterior;
use crate::bootstrap::{run_batch, tau_curves, Cohort, Collect, ResamplePlan, Scheme, TauCurve};
use crate::error::{Error, Result};
use crate::method::Method;
use crate::model::{ResultsMatrix, WeightVector};
use crate::ranking::{rank_without_ci, RankTable, ScoredModel};
use crate::rng::{keyed, tag};

/// Target true means of the fixture models LLM1..LLM11.
pub const REFERENCE_MEANS: [f64; 11] = [
    0.2332, 0.2545, 0.3604, 0.3642, 0.3642, 0.4466, 0.5418, 0.5276, 0.608, 0.6213, 0.7327,
];

/// Beta shape index `i` (Beta(i, 18 - i)) of each fixture model.
pub const REFERENCE_SHAPES: [u32; 11] = [4, 5, 6, 7, 7, 8, 9, 10, 11, 12, 13];

/// Questions per fixture model.
pub const REFERENCE_QUESTIONS: usize = 30;

/// Seed of the per-question draws behind the fixture cohort.
pub const FIXTURE_SEED: u64 = 1234;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CoinModel {
    model_id: String,
    probabilities: Vec<f64>,
    true_mean: f64,
}

impl CoinModel {
    pub fn new(model_id: impl Into<String>, probabilities: Vec<f64>) -> Result<Self> {
        let model_id = model_id.into();
        if probabilities.is_empty() {
            return Err(Error::InvalidCohort(format!("{model_id} has no questions")));
        }
        if let Some(p) = probabilities.iter().find(|p| !(0.0..=1.0).contains(*p)) {
            return Err(Error::InvalidCohort(format!("{model_id} has probability {p} outside [0, 1]")));
        }
        let true_mean = probabilities.iter().sum::<f64>() / probabilities.len() as f64;
        Ok(CoinModel {
            model_id,
            probabilities,
            true_mean,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn questions(&self) -> usize {
        self.probabilities.len()
    }

    /// `π̄`, the arithmetic mean of the per-question probabilities.
    pub fn true_mean(&self) -> f64 {
        self.true_mean
    }
}

/// How one model's probabilities are produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelSpec {
    /// Independent draws from `Beta(alpha, beta)`.
    Beta { id: String, alpha: f64, beta: f64 },
    /// The same vector as an earlier model.
    Copy { id: String, same_as: String },
    /// Explicit probabilities.
    Fixed { id: String, probabilities: Vec<f64> },
}

impl ModelSpec {
    fn id(&self) -> &str {
        match self {
            ModelSpec::Beta { id, .. } | ModelSpec::Copy { id, .. } | ModelSpec::Fixed { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub questions: usize,
    pub seed: u64,
    pub models: Vec<ModelSpec>,
}

impl CohortSpec {
    /// Eleven models: `Beta(i, 18 - i)` for `i = 4..=13` with the `i = 7` vector shared by LLM4 and LLM5.
    pub fn reference(seed: u64) -> Self {
        let mut models = Vec::with_capacity(REFERENCE_SHAPES.len());
        for (idx, &i) in REFERENCE_SHAPES.iter().enumerate() {
            let id = format!("LLM{}", idx + 1);
            if idx > 0 && REFERENCE_SHAPES[idx - 1] == i {
                models.push(ModelSpec::Copy {
                    id,
                    same_as: format!("LLM{idx}"),
                });
            } else {
                models.push(ModelSpec::Beta {
                    id,
                    alpha: i as f64,
                    beta: (18 - i) as f64,
                });
            }
        }
        CohortSpec {
            questions: REFERENCE_QUESTIONS,
            seed,
            models,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.questions == 0 {
            return Err(Error::InvalidCohort("questions must be at least 1".into()));
        }
        if self.models.is_empty() {
            return Err(Error::InvalidCohort("no models".into()));
        }
        let mut seen: HashMap<&str, usize> = HashMap::new();
        for m in &self.models {
            match m {
                ModelSpec::Beta { id, alpha, beta } => {
                    if !(*alpha > 0.0 && *beta > 0.0 && alpha.is_finite() && beta.is_finite()) {
                        return Err(Error::InvalidCohort(format!("{id}: Beta shapes must be positive")));
                    }
                }
                ModelSpec::Copy { id, same_as } => {
                    if !seen.contains_key(same_as.as_str()) {
                        return Err(Error::InvalidCohort(format!(
                            "{id}: same_as {same_as:?} must name an earlier model"
                        )));
                    }
                }
                ModelSpec::Fixed { id, probabilities } => {
                    if probabilities.len() != self.questions {
                        return Err(Error::InvalidCohort(format!(
                            "{id}: {} probabilities for {} questions",
                            probabilities.len(),
                            self.questions
                        )));
                    }
                }
            }
            if seen.insert(m.id(), seen.len()).is_some() {
                return Err(Error::InvalidCohort(format!("duplicate model id {:?}", m.id())));
            }
        }
        Ok(())
    }
}

/// Draws every model's probability vector. Model `j` uses its own keyed stream.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Vec<CoinModel>> {
    spec.validate()?;
    let mut out: Vec<CoinModel> = Vec::with_capacity(spec.models.len());
    for (j, m) in spec.models.iter().enumerate() {
        let probabilities = match m {
            ModelSpec::Beta { alpha, beta, .. } => {
                let dist = Beta::new(*alpha, *beta)
                    .map_err(|e| Error::InvalidCohort(format!("{}: {e}", m.id())))?;
                let mut rng = keyed(&[spec.seed, tag::COHORT, j as u64]);
                (0..spec.questions).map(|_| dist.sample(&mut rng)).collect()
            }
            ModelSpec::Copy { same_as, .. } => out
                .iter()
                .find(|c| c.model_id == *same_as)
                .expect("validated")
                .probabilities
                .clone(),
            ModelSpec::Fixed { probabilities, .. } => probabilities.clone(),
        };
        out.push(CoinModel::new(m.id(), probabilities)?);
    }
    Ok(out)
}

/// Rescales `p` about its mean to `variance`, then shifts it (clamping to [0, 1])
/// so that its mean equals `target`.
fn calibrate(p: &[f64], target: f64, variance: f64) -> Vec<f64> {
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let m = mean(p);
    let var = p.iter().map(|x| (x - m).powi(2)).sum::<f64>() / p.len() as f64;
    let scale = if var > 0.0 { (variance / var).sqrt() } else { 1.0 };
    let spread: Vec<f64> = p.iter().map(|x| (x - m) * scale).collect();
    let shifted = |s: f64| -> Vec<f64> { spread.iter().map(|&x| (x + s).clamp(0.0, 1.0)).collect() };
    let (mut lo, mut hi) = (-2.0f64, 2.0f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mean(&shifted(mid)) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    shifted(0.5 * (lo + hi))
}

/// The fixture cohort: fixed Beta draws standardized to the target mean and
/// the variance of their Beta shape. LLM4 and LLM5 share one vector.
pub fn reference_cohort() -> Vec<CoinModel> {
    let drawn = generate_cohort(&CohortSpec::reference(FIXTURE_SEED)).expect("reference spec is valid");
    drawn
        .iter()
        .zip(REFERENCE_MEANS.iter().zip(REFERENCE_SHAPES.iter()))
        .map(|(m, (&target, &i))| {
            let (a, b) = (i as f64, (18 - i) as f64);
            let variance = a * b / ((a + b).powi(2) * (a + b + 1.0));
            let p = calibrate(&m.probabilities, target, variance);
            CoinModel::new(m.model_id.clone(), p).expect("clamped to [0, 1]")
        })
        .collect()
}

fn row_stream(seed: u64, replicate: u64, model: u64, row: usize) -> ChaCha8Rng {
    keyed(&[seed, tag::TRIALS, replicate, model, row as u64])
}

fn draw_matrix(model: &CoinModel, n: usize, seed: u64, replicate: u64, model_key: u64) -> ResultsMatrix {
    let mut cells = Vec::with_capacity(model.questions() * n);
    for (q, &p) in model.probabilities.iter().enumerate() {
        let mut rng = row_stream(seed, replicate, model_key, q);
        cells.extend((0..n).map(|_| u32::from(rng.random::<f64>() < p)));
    }
    ResultsMatrix::from_cells(model.questions(), n, 1, cells)
}

/// `M x N` Bernoulli trials for one model. Row `α` is its own stream, so the
/// first `n` trials do not depend on `N`. Distinct models need distinct seeds;
/// [`sample_cohort`] handles that.
pub fn sample_trials(model: &CoinModel, n: usize, seed: u64) -> Result<ResultsMatrix> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    Ok(draw_matrix(model, n, seed, 0, 0))
}

/// One trial matrix per model, with independent streams per model.
pub fn sample_cohort(cohort: &[CoinModel], n: usize, seed: u64) -> Result<Vec<ResultsMatrix>> {
    if n == 0 {
        return Err(Error::ZeroTrials);
    }
    check_shared_questions(cohort)?;
    Ok(cohort
        .iter()
        .enumerate()
        .map(|(i, m)| draw_matrix(m, n, seed, 0, i as u64))
        .collect())
}

fn check_shared_questions(cohort: &[CoinModel]) -> Result<()> {
    let first = cohort.first().ok_or_else(|| Error::InvalidCohort("no models".into()))?;
    if let Some(m) = cohort.iter().find(|m| m.questions() != first.questions()) {
        return Err(Error::CohortMismatch(format!(
            "{} has {} questions, {} has {}",
            m.model_id,
            m.questions(),
            first.model_id,
            first.questions()
        )));
    }
    Ok(())
}

/// Ranking by true mean; exactly equal means share a rank.
pub fn gold_ranking(cohort: &[CoinModel]) -> RankTable {
    let scored: Vec<ScoredModel> = cohort
        .iter()
        .map(|m| ScoredModel {
            model_id: m.model_id.clone(),
            mu: m.true_mean,
            sigma: 0.0,
        })
        .collect();
    rank_without_ci(&scored)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeparationPoint {
    #[serde(rename = "N")]
    pub n: usize,
    /// Fraction of replicates where Bayes@N puts `a` above `b` (exact ties count half).
    pub p_correct: f64,
    /// Mean of `|z|` over replicates.
    pub mean_z: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeparationCurve {
    pub a: String,
    pub b: String,
    pub replicates: usize,
    pub points: Vec<SeparationPoint>,
}

impl SeparationCurve {
    pub fn at(&self, n: usize) -> Option<&SeparationPoint> {
        self.points.iter().find(|p| p.n == n)
    }

    /// Smallest grid `N` whose mean `|z|` reaches `target`.
    pub fn first_n_reaching(&self, target: f64) -> Option<usize> {
        self.points.iter().find(|p| p.mean_z >= target).map(|p| p.n)
    }
}

const SEP_BLOCK: u64 = 64;

/// Repeatedly samples `a` and `b` and records, at each `N` in `n_grid`, how often
/// Bayes@N orders `a` above `b` and the mean `|z|` between them.
pub fn separation_experiment(
    a: &CoinModel,
    b: &CoinModel,
    n_grid: &[usize],
    replicates: usize,
    seed: u64,
) -> Result<SeparationCurve> {
    if replicates == 0 {
        return Err(Error::InvalidPlan("replicates must be at least 1".into()));
    }
    if n_grid.is_empty() || n_grid.contains(&0) || n_grid.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidPlan("N grid must be strictly increasing and positive".into()));
    }
    check_shared_questions(&[a.clone(), b.clone()])?;
    let weights = WeightVector::binary();
    let w = weights.as_slice();
    let n_max = *n_grid.last().expect("non-empty");
    let questions = a.questions();
    let blocks = (replicates as u64).div_ceil(SEP_BLOCK);

    // (twice the a-above-b count, sum of |z|) per grid point
    let partials: Vec<(Vec<u64>, Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut wins = vec![0u64; n_grid.len()];
            let mut zsum = vec![0.0; n_grid.len()];
            for r in blk * SEP_BLOCK..((blk + 1) * SEP_BLOCK).min(replicates as u64) {
                let mut streams: Vec<[ChaCha8Rng; 2]> = (0..questions)
                    .map(|q| [row_stream(seed, r, 0, q), row_stream(seed, r, 1, q)])
                    .collect();
                let mut counts = [vec![0u32; 2 * questions], vec![0u32; 2 * questions]];
                let mut next = 0;
                for n in 1..=n_max {
                    for (q, pair) in streams.iter_mut().enumerate() {
                        for (side, model) in [a, b].iter().enumerate() {
                            let hit = pair[side].random::<f64>() < model.probabilities[q];
                            counts[side][2 * q + usize::from(hit)] += 1;
                        }
                    }
                    if n == n_grid[next] {
                        let (mu_a, s_a) = uniform_posterior(&counts[0], w, n);
                        let (mu_b, s_b) = uniform_posterior(&counts[1], w, n);
                        wins[next] += match mu_a.total_cmp(&mu_b) {
                            std::cmp::Ordering::Greater => 2,
                            std::cmp::Ordering::Equal => 1,
                            std::cmp::Ordering::Less => 0,
                        };
                        zsum[next] += crate::ranking::z_score(
                            &ScoredModel {
                                model_id: String::new(),
                                mu: mu_a,
                                sigma: s_a,
                            },
                            &ScoredModel {
                                model_id: String::new(),
                                mu: mu_b,
                                sigma: s_b,
                            },
                        );
                        next += 1;
                    }
                }
            }
            (wins, zsum)
        })
        .collect();

    let mut wins = vec![0u64; n_grid.len()];
    let mut zsum = vec![0.0; n_grid.len()];
    for (w_blk, z_blk) in partials {
        for i in 0..n_grid.len() {
            wins[i] += w_blk[i];
            zsum[i] += z_blk[i];
        }
    }
    let r = replicates as f64;
    Ok(SeparationCurve {
        a: a.model_id.clone(),
        b: b.model_id.clone(),
        replicates,
        points: n_grid
            .iter()
            .enumerate()
            .map(|(i, &n)| SeparationPoint {
                n,
                p_correct: wins[i] as f64 / (2.0 * r),
                mean_z: zsum[i] / r,
            })
            .collect(),
    })
}

/// Mean τ_b against the true-mean ranking over independent fresh trial matrices.
pub fn fresh_tau_curves(
    cohort: &[CoinModel],
    methods: &[Method],
    n_max: usize,
    matrices: usize,
    seed: u64,
) -> Result<Vec<TauCurve>> {
    check_shared_questions(cohort)?;
    if n_max == 0 || matrices == 0 {
        return Err(Error::InvalidPlan("n_max and matrix count must be at least 1".into()));
    }
    let gold = gold_ranking(cohort).ranks_by_input();
    let collect = Collect {
        tau: true,
        convergence: false,
        ci: None,
    };
    let out = run_batch(
        methods,
        &WeightVector::binary(),
        &gold,
        n_max,
        matrices as u64,
        collect,
        |r| {
            cohort
                .iter()
                .enumerate()
                .map(|(i, m)| draw_matrix(m, n_max, seed, r, i as u64))
                .collect()
        },
    );
    Ok(out.tau)
}

/// Column-wise minus row-wise mean τ at one `N`, with a standard error
/// clustered by source matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeGap {
    #[serde(rename = "N")]
    pub n: usize,
    pub col_mean: f64,
    pub row_mean: f64,
    pub diff: f64,
    pub stderr: f64,
}

impl SchemeGap {
    /// `|diff| <= k · stderr`.
    pub fn within(&self, k: f64) -> bool {
        self.diff.abs() <= k * self.stderr
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SchemeComparison {
    pub method: String,
    pub gaps: Vec<SchemeGap>,
}

/// Bootstraps `per_source` replicates under each scheme from each of `sources`
/// fresh `n_max`-trial cohort matrices and compares the two mean τ curves.
pub fn compare_schemes(
    cohort: &[CoinModel],
    methods: &[Method],
    n_max: usize,
    sources: usize,
    per_source: usize,
    seed: u64,
) -> Result<Vec<SchemeComparison>> {
    if sources < 2 {
        return Err(Error::InvalidPlan("at least two source matrices are needed".into()));
    }
    let ids: Vec<String> = cohort.iter().map(|m| m.model_id.clone()).collect();
    // per source: per scheme: curves
    let per: Vec<[Vec<TauCurve>; 2]> = (0..sources as u64)
        .into_par_iter()
        .map(|s| -> Result<[Vec<TauCurve>; 2]> {
            let matrices = cohort
                .iter()
                .enumerate()
                .map(|(i, m)| draw_matrix(m, n_max, seed, s, i as u64))
                .collect();
            let c = Cohort::new(ids.clone(), matrices)?;
            let plan_seed = keyed(&[seed, tag::BOOTSTRAP, s]).random::<u64>();
            let col = tau_curves(&c, methods, &ResamplePlan::new(Scheme::ColumnWise, per_source, plan_seed, n_max)?)?;
            let row = tau_curves(&c, methods, &ResamplePlan::new(Scheme::RowWise, per_source, plan_seed, n_max)?)?;
            Ok([col, row])
        })
        .collect::<Result<_>>()?;

    let s = sources as f64;
    Ok(methods
        .iter()
        .enumerate()
        .map(|(mi, m)| {
            let points = &per[0][0][mi].points;
            let gaps = points
                .iter()
                .enumerate()
                .map(|(pi, p)| {
                    let col: Vec<f64> = per.iter().map(|x| x[0][mi].points[pi].mean).collect();
                    let row: Vec<f64> = per.iter().map(|x| x[1][mi].points[pi].mean).collect();
                    let diffs: Vec<f64> = col.iter().zip(&row).map(|(c, r)| c - r).collect();
                    let diff = diffs.iter().sum::<f64>() / s;
                    let var = diffs.iter().map(|d| (d - diff).powi(2)).sum::<f64>() / (s - 1.0);
                    SchemeGap {
                        n: p.n,
                        col_mean: col.iter().sum::<f64>() / s,
                        row_mean: row.iter().sum::<f64>() / s,
                        diff,
                        stderr: (var / s).sqrt(),
                    }
                })
                .collect();
            SchemeComparison {
                method: m.to_string(),
                gaps,
            }
        })
        .collect())
}
