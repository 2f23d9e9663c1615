//! Bootstrap resampling and convergence analytics.
//!
//! A replicate draws `n_max` trials for every model once and then evaluates
//! every prefix `1..=n_max` of that draw. Replicates are independent work
//! units keyed by `(seed, replicate)` (column-wise) or `(seed, replicate,
//! model, row)` (row-wise), and all aggregates are reduced in a fixed block
//! order, so results do not depend on the thread count.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::method::{Method, Score};
use crate::model::{ResultsMatrix, WeightVector};
use crate::ranking::{kendall_tau_b, rank_with_ci, rank_without_ci, RankTable, ScoredModel};
use crate::rng::{keyed, tag};

/// How trials are resampled with replacement.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    /// Draw trial (column) indices once per replicate and apply them to every
    /// question of every model.
    #[serde(rename = "col")]
    ColumnWise,
    /// Draw trial indices independently for every question.
    #[serde(rename = "row")]
    RowWise,
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "col" | "column" | "columnwise" | "column-wise" => Ok(Scheme::ColumnWise),
            "row" | "rowwise" | "row-wise" => Ok(Scheme::RowWise),
            _ => Err(Error::InvalidPlan(format!("unknown scheme {s:?}, expected col or row"))),
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::ColumnWise => "col",
            Scheme::RowWise => "row",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ResamplePlan {
    pub scheme: Scheme,
    pub replicates: usize,
    pub seed: u64,
    pub n_max: usize,
}

impl ResamplePlan {
    /// Replicate count used for τ curves.
    pub const TAU_REPLICATES: usize = 10_000;
    /// Replicate count used for convergence PMFs.
    pub const PMF_REPLICATES: usize = 100_000;

    pub fn new(scheme: Scheme, replicates: usize, seed: u64, n_max: usize) -> Result<Self> {
        let plan = ResamplePlan {
            scheme,
            replicates,
            seed,
            n_max,
        };
        plan.validate()?;
        Ok(plan)
    }

    fn validate(&self) -> Result<()> {
        if self.replicates == 0 {
            return Err(Error::InvalidPlan("replicates must be at least 1".into()));
        }
        if self.n_max == 0 {
            return Err(Error::InvalidPlan("n_max must be at least 1".into()));
        }
        Ok(())
    }

    fn check_against(&self, trials: usize) -> Result<()> {
        self.validate()?;
        if self.n_max > trials {
            return Err(Error::InvalidPlan(format!(
                "n_max = {} exceeds the {trials} trials available",
                self.n_max
            )));
        }
        Ok(())
    }
}

/// Resamples one matrix for `replicate`, as model 0 of a cohort would be.
pub fn resample(matrix: &ResultsMatrix, plan: &ResamplePlan, replicate: u64) -> Result<ResultsMatrix> {
    plan.check_against(matrix.trials())?;
    Ok(resample_keyed(matrix, plan, replicate, 0))
}

fn resample_keyed(matrix: &ResultsMatrix, plan: &ResamplePlan, replicate: u64, model: u64) -> ResultsMatrix {
    let n = matrix.trials();
    let mut cells = Vec::with_capacity(matrix.questions() * plan.n_max);
    match plan.scheme {
        Scheme::ColumnWise => {
            let mut rng = keyed(&[plan.seed, tag::BOOTSTRAP, replicate]);
            let cols: Vec<usize> = (0..plan.n_max).map(|_| rng.random_range(0..n)).collect();
            for row in matrix.rows() {
                cells.extend(cols.iter().map(|&j| row[j]));
            }
        }
        Scheme::RowWise => {
            for (q, row) in matrix.rows().enumerate() {
                let mut rng = keyed(&[plan.seed, tag::BOOTSTRAP, replicate, model, q as u64]);
                cells.extend((0..plan.n_max).map(|_| row[rng.random_range(0..n)]));
            }
        }
    }
    ResultsMatrix::from_cells(matrix.questions(), plan.n_max, matrix.max_category(), cells)
}

/// A set of models evaluated on the same questions, with the weights used by `bayes`/`avg`.
#[derive(Debug, Clone)]
pub struct Cohort {
    ids: Vec<String>,
    matrices: Vec<ResultsMatrix>,
    weights: WeightVector,
}

impl Cohort {
    /// Binary cohorts default to weights `(0, 1)`, categorical ones to `w_k = k`.
    pub fn new(ids: Vec<String>, matrices: Vec<ResultsMatrix>) -> Result<Self> {
        let first = matrices
            .first()
            .ok_or_else(|| Error::InvalidCohort("no models".into()))?;
        if ids.len() != matrices.len() {
            return Err(Error::InvalidCohort(format!(
                "{} ids for {} matrices",
                ids.len(),
                matrices.len()
            )));
        }
        for (id, m) in ids.iter().zip(&matrices) {
            if (m.questions(), m.trials(), m.max_category())
                != (first.questions(), first.trials(), first.max_category())
            {
                return Err(Error::CohortMismatch(format!(
                    "{id} is {}x{} with C={}, expected {}x{} with C={}",
                    m.questions(),
                    m.trials(),
                    m.max_category(),
                    first.questions(),
                    first.trials(),
                    first.max_category()
                )));
            }
        }
        let weights = if first.max_category() == 1 {
            WeightVector::binary()
        } else {
            WeightVector::linear(first.max_category())
        };
        Ok(Cohort {
            ids,
            matrices,
            weights,
        })
    }

    pub fn with_weights(mut self, weights: WeightVector) -> Result<Self> {
        if weights.len() != self.matrices[0].num_categories() {
            return Err(Error::WeightLengthMismatch {
                expected: self.matrices[0].num_categories(),
                found: weights.len(),
            });
        }
        self.weights = weights;
        Ok(self)
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn matrices(&self) -> &[ResultsMatrix] {
        &self.matrices
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn trials(&self) -> usize {
        self.matrices[0].trials()
    }

    pub fn max_category(&self) -> u32 {
        self.matrices[0].max_category()
    }

    /// Scores every model with `method` on its full matrix.
    pub fn score(&self, method: Method) -> Result<Vec<ScoredModel>> {
        self.ids
            .iter()
            .zip(&self.matrices)
            .map(|(id, m)| {
                let s = method.score(m, &self.weights)?;
                ScoredModel::new(id.clone(), s.value, s.sigma)
            })
            .collect()
    }

    /// Gold ranking: `bayes` on the first `n_max` unresampled trials.
    pub fn gold_ranking(&self, n_max: usize, ci: Option<f64>) -> Result<RankTable> {
        let scored = self
            .ids
            .iter()
            .zip(&self.matrices)
            .map(|(id, m)| {
                let s = Method::Bayes.score(&m.prefix(n_max), &self.weights)?;
                ScoredModel::new(id.clone(), s.value, s.sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(match ci {
            Some(z) => rank_with_ci(&scored, z),
            None => rank_without_ci(&scored),
        })
    }

    fn check_methods(&self, methods: &[Method]) -> Result<()> {
        for m in methods {
            if m.needs_binary() && self.max_category() != 1 {
                return Err(Error::NotBinary(self.max_category()));
            }
        }
        Ok(())
    }
}

/// Mean τ_b at one prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TauPoint {
    #[serde(rename = "N")]
    pub n: usize,
    pub mean: f64,
    pub stderr: f64,
    /// Replicates whose ranking was entirely tied (τ_b undefined, counted as 0).
    pub undefined: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TauCurve {
    pub method: String,
    pub points: Vec<TauPoint>,
}

impl TauCurve {
    pub fn at(&self, n: usize) -> Option<&TauPoint> {
        self.points.iter().find(|p| p.n == n)
    }
}

/// Distribution of convergence@n over replicates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConvergenceDistribution {
    pub method: String,
    pub n_max: usize,
    pub replicates: u64,
    /// `counts[n - 1]` replicates converged at `n`.
    pub counts: Vec<u64>,
    pub censored: u64,
}

impl ConvergenceDistribution {
    fn empty(method: String, n_max: usize) -> Self {
        ConvergenceDistribution {
            method,
            n_max,
            replicates: 0,
            counts: vec![0; n_max],
            censored: 0,
        }
    }

    fn record(&mut self, outcome: Option<usize>) {
        self.replicates += 1;
        match outcome {
            Some(n) => self.counts[n - 1] += 1,
            None => self.censored += 1,
        }
    }

    fn merge(&mut self, other: &ConvergenceDistribution) {
        self.replicates += other.replicates;
        self.censored += other.censored;
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
    }

    /// `pmf[n - 1] = P(convergence at n)`.
    pub fn pmf(&self) -> Vec<f64> {
        let r = self.replicates as f64;
        self.counts.iter().map(|&c| c as f64 / r).collect()
    }

    pub fn censored_mass(&self) -> f64 {
        self.censored as f64 / self.replicates as f64
    }

    /// Running sum of [`pmf`](Self::pmf).
    pub fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.pmf()
            .into_iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect()
    }

    /// Mean convergence point over replicates that converged.
    pub fn mean(&self) -> Option<f64> {
        let converged: u64 = self.counts.iter().sum();
        if converged == 0 {
            return None;
        }
        let total: u64 = self
            .counts
            .iter()
            .enumerate()
            .map(|(i, &c)| (i as u64 + 1) * c)
            .sum();
        Some(total as f64 / converged as f64)
    }

    /// Converged plus censored replicates equals the replicate count.
    pub fn is_conserved(&self) -> bool {
        self.counts.iter().sum::<u64>() + self.censored == self.replicates
    }
}

/// Rank tables of one replicate at every prefix length, with its convergence point.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub method: String,
    pub replicate: u64,
    /// `None` when the replicate never converged within `n_max`.
    pub convergence: Option<usize>,
    pub tables: Vec<(usize, RankTable)>,
}

/// What a batch run should collect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Collect {
    pub tau: bool,
    pub convergence: bool,
    /// CI threshold for method rankings during convergence, if any.
    pub ci: Option<f64>,
}

/// Output of a batch run, one entry per method.
pub(crate) struct BatchOutput {
    pub tau: Vec<TauCurve>,
    pub convergence: Vec<ConvergenceDistribution>,
    pub outcomes: Vec<Vec<Option<usize>>>,
}

/// Precomputed per-question values of a method for every `(N, c)`.
struct PassTable {
    stride: usize,
    values: Vec<f64>,
}

impl PassTable {
    fn build(method: Method, n_max: usize) -> Option<Self> {
        if !method.needs_binary() {
            return None;
        }
        let stride = n_max + 1;
        let mut values = vec![f64::NAN; stride * stride];
        for n in method.min_trials().max(1)..=n_max {
            for c in 0..=n {
                values[n * stride + c] = method.single_value(n, c);
            }
        }
        Some(PassTable { stride, values })
    }

    fn get(&self, n: usize, c: u32) -> f64 {
        self.values[n * self.stride + c as usize]
    }
}

/// Evaluates methods on prefix counts of one replicate's per-model matrices.
pub(crate) struct PrefixScorer<'a> {
    methods: &'a [Method],
    tables: Vec<Option<PassTable>>,
    weights: &'a [f64],
}

impl<'a> PrefixScorer<'a> {
    pub(crate) fn new(methods: &'a [Method], weights: &'a WeightVector, n_max: usize) -> Self {
        PrefixScorer {
            methods,
            tables: methods.iter().map(|&m| PassTable::build(m, n_max)).collect(),
            weights: weights.as_slice(),
        }
    }

    fn score(&self, method_idx: usize, counts: &[u32], n: usize) -> Option<Score> {
        let method = self.methods[method_idx];
        if n < method.min_trials() {
            return None;
        }
        match &self.tables[method_idx] {
            Some(table) => {
                let questions = counts.len() / 2;
                let sum: f64 = counts.chunks_exact(2).map(|row| table.get(n, row[1])).sum();
                Some(Score {
                    value: sum / questions as f64,
                    sigma: 0.0,
                })
            }
            None => method.score_counts(counts, self.weights, n),
        }
    }
}

/// Ranks as dense integers in model order for every method and every prefix `1..=n_max`.
/// `ranks[method][n - 1]` is `None` where the method is undefined.
fn prefix_ranks(
    scorer: &PrefixScorer<'_>,
    matrices: &[ResultsMatrix],
    n_max: usize,
    ci: Option<f64>,
) -> Vec<Vec<Option<Vec<u32>>>> {
    let k = scorer.weights.len();
    let questions = matrices[0].questions();
    let mut counts: Vec<Vec<u32>> = vec![vec![0; questions * k]; matrices.len()];
    let mut out: Vec<Vec<Option<Vec<u32>>>> = vec![Vec::with_capacity(n_max); scorer.methods.len()];
    let mut scored: Vec<ScoredModel> = (0..matrices.len())
        .map(|i| ScoredModel {
            model_id: i.to_string(),
            mu: 0.0,
            sigma: 0.0,
        })
        .collect();
    for n in 1..=n_max {
        for (m, c) in matrices.iter().zip(counts.iter_mut()) {
            for q in 0..questions {
                c[q * k + m.get(q, n - 1) as usize] += 1;
            }
        }
        for (mi, slot) in out.iter_mut().enumerate() {
            let mut defined = true;
            for (s, c) in scored.iter_mut().zip(&counts) {
                match scorer.score(mi, c, n) {
                    Some(score) => {
                        s.mu = score.value;
                        s.sigma = score.sigma;
                    }
                    None => defined = false,
                }
            }
            slot.push(defined.then(|| {
                match ci {
                    Some(z) => rank_with_ci(&scored, z),
                    None => rank_without_ci(&scored),
                }
                .ranks_by_input()
            }));
        }
    }
    out
}

/// Smallest `n` such that every prefix from `n` to the end matches `gold`.
pub(crate) fn convergence_point(ranks: &[Option<Vec<u32>>], gold: &[u32]) -> Option<usize> {
    let mut point = None;
    for (i, r) in ranks.iter().enumerate().rev() {
        if r.as_deref() == Some(gold) {
            point = Some(i + 1);
        } else {
            break;
        }
    }
    point
}

#[derive(Clone)]
struct Block {
    tau_sum: Vec<Vec<f64>>,
    tau_sq: Vec<Vec<f64>>,
    tau_undefined: Vec<Vec<u64>>,
    tau_count: Vec<Vec<u64>>,
    conv: Vec<ConvergenceDistribution>,
    outcomes: Vec<Vec<Option<usize>>>,
}

impl Block {
    fn new(methods: &[Method], n_max: usize) -> Self {
        let grid = || vec![vec![0.0; n_max]; methods.len()];
        Block {
            tau_sum: grid(),
            tau_sq: grid(),
            tau_undefined: vec![vec![0; n_max]; methods.len()],
            tau_count: vec![vec![0; n_max]; methods.len()],
            conv: methods
                .iter()
                .map(|m| ConvergenceDistribution::empty(m.to_string(), n_max))
                .collect(),
            outcomes: vec![Vec::new(); methods.len()],
        }
    }

    fn merge(&mut self, other: Block) {
        for mi in 0..self.tau_sum.len() {
            for n in 0..self.tau_sum[mi].len() {
                self.tau_sum[mi][n] += other.tau_sum[mi][n];
                self.tau_sq[mi][n] += other.tau_sq[mi][n];
                self.tau_undefined[mi][n] += other.tau_undefined[mi][n];
                self.tau_count[mi][n] += other.tau_count[mi][n];
            }
            self.conv[mi].merge(&other.conv[mi]);
        }
        for (a, b) in self.outcomes.iter_mut().zip(other.outcomes) {
            a.extend(b);
        }
    }
}

const BLOCK: u64 = 64;

/// Runs `replicates` replicates, each producing per-model matrices with `n_max` trials.
///
/// `gold` is the reference ranking in model order. Reduction happens per fixed
/// block of replicates and then across blocks in index order.
pub(crate) fn run_batch<F>(
    methods: &[Method],
    weights: &WeightVector,
    gold: &[u32],
    n_max: usize,
    replicates: u64,
    collect: Collect,
    draw: F,
) -> BatchOutput
where
    F: Fn(u64) -> Vec<ResultsMatrix> + Sync,
{
    let scorer = PrefixScorer::new(methods, weights, n_max);
    let blocks = replicates.div_ceil(BLOCK);
    let partials: Vec<Block> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let mut block = Block::new(methods, n_max);
            for r in b * BLOCK..((b + 1) * BLOCK).min(replicates) {
                let matrices = draw(r);
                let point = (collect.tau || collect.convergence && collect.ci.is_none())
                    .then(|| prefix_ranks(&scorer, &matrices, n_max, None));
                if collect.tau {
                    let ranks = point.as_ref().expect("point ranks computed for tau");
                    for (mi, per_n) in ranks.iter().enumerate() {
                        for (i, r) in per_n.iter().enumerate() {
                            let Some(r) = r else { continue };
                            let tau = kendall_tau_b(r, gold).unwrap_or_else(|_| {
                                block.tau_undefined[mi][i] += 1;
                                0.0
                            });
                            block.tau_sum[mi][i] += tau;
                            block.tau_sq[mi][i] += tau * tau;
                            block.tau_count[mi][i] += 1;
                        }
                    }
                }
                if collect.convergence {
                    let ci_ranks;
                    let ranks = match collect.ci {
                        None => point.as_ref().expect("point ranks computed for convergence"),
                        Some(z) => {
                            ci_ranks = prefix_ranks(&scorer, &matrices, n_max, Some(z));
                            &ci_ranks
                        }
                    };
                    for (mi, per_n) in ranks.iter().enumerate() {
                        let point = convergence_point(per_n, gold);
                        block.conv[mi].record(point);
                        block.outcomes[mi].push(point);
                    }
                }
            }
            block
        })
        .collect();

    let mut total = Block::new(methods, n_max);
    for b in partials {
        total.merge(b);
    }

    let tau = if collect.tau {
        methods
            .iter()
            .enumerate()
            .map(|(mi, m)| TauCurve {
                method: m.to_string(),
                points: (0..n_max)
                    .filter(|&i| total.tau_count[mi][i] > 0)
                    .map(|i| {
                        let count = total.tau_count[mi][i] as f64;
                        let mean = total.tau_sum[mi][i] / count;
                        let var = if count > 1.0 {
                            ((total.tau_sq[mi][i] - count * mean * mean) / (count - 1.0)).max(0.0)
                        } else {
                            0.0
                        };
                        TauPoint {
                            n: i + 1,
                            mean,
                            stderr: (var / count).sqrt(),
                            undefined: total.tau_undefined[mi][i],
                        }
                    })
                    .collect(),
            })
            .collect()
    } else {
        Vec::new()
    };
    let convergence = if collect.convergence { total.conv } else { Vec::new() };
    BatchOutput {
        tau,
        convergence,
        outcomes: total.outcomes,
    }
}

fn prepare(cohort: &Cohort, methods: &[Method], plan: &ResamplePlan, ci: Option<f64>) -> Result<Vec<u32>> {
    plan.check_against(cohort.trials())?;
    cohort.check_methods(methods)?;
    Ok(cohort.gold_ranking(plan.n_max, ci)?.ranks_by_input())
}

fn bootstrap_draw<'a>(cohort: &'a Cohort, plan: &'a ResamplePlan) -> impl Fn(u64) -> Vec<ResultsMatrix> + Sync + 'a {
    move |r| {
        cohort
            .matrices
            .iter()
            .enumerate()
            .map(|(i, m)| resample_keyed(m, plan, r, i as u64))
            .collect()
    }
}

/// Mean τ_b against the gold ranking at every defined `N` for each method.
pub fn tau_curves(cohort: &Cohort, methods: &[Method], plan: &ResamplePlan) -> Result<Vec<TauCurve>> {
    let gold = prepare(cohort, methods, plan, None)?;
    let collect = Collect {
        tau: true,
        convergence: false,
        ci: None,
    };
    let out = run_batch(
        methods,
        &cohort.weights,
        &gold,
        plan.n_max,
        plan.replicates as u64,
        collect,
        bootstrap_draw(cohort, plan),
    );
    Ok(out.tau)
}

pub fn tau_curve(cohort: &Cohort, method: Method, plan: &ResamplePlan) -> Result<TauCurve> {
    Ok(tau_curves(cohort, &[method], plan)?.remove(0))
}

/// Convergence@n distributions for each method. With `ci = Some(z)`, both the
/// gold and the method rankings use credible-interval ties at threshold `z`.
pub fn convergence_distributions(
    cohort: &Cohort,
    methods: &[Method],
    plan: &ResamplePlan,
    ci: Option<f64>,
) -> Result<Vec<ConvergenceDistribution>> {
    Ok(convergence_with_outcomes(cohort, methods, plan, ci)?.0)
}

/// Per-replicate convergence points of one method.
type Outcomes = Vec<Option<usize>>;

fn convergence_with_outcomes(
    cohort: &Cohort,
    methods: &[Method],
    plan: &ResamplePlan,
    ci: Option<f64>,
) -> Result<(Vec<ConvergenceDistribution>, Vec<Outcomes>)> {
    let gold = prepare(cohort, methods, plan, ci)?;
    let collect = Collect {
        tau: false,
        convergence: true,
        ci,
    };
    let out = run_batch(
        methods,
        &cohort.weights,
        &gold,
        plan.n_max,
        plan.replicates as u64,
        collect,
        bootstrap_draw(cohort, plan),
    );
    Ok((out.convergence, out.outcomes))
}

pub fn convergence_at_n(cohort: &Cohort, method: Method, plan: &ResamplePlan) -> Result<ConvergenceDistribution> {
    Ok(convergence_distributions(cohort, &[method], plan, None)?.remove(0))
}

/// τ curves and convergence distributions from a single pass over the replicates.
pub fn tau_and_convergence(
    cohort: &Cohort,
    methods: &[Method],
    plan: &ResamplePlan,
) -> Result<(Vec<TauCurve>, Vec<ConvergenceDistribution>)> {
    let gold = prepare(cohort, methods, plan, None)?;
    let collect = Collect {
        tau: true,
        convergence: true,
        ci: None,
    };
    let out = run_batch(
        methods,
        &cohort.weights,
        &gold,
        plan.n_max,
        plan.replicates as u64,
        collect,
        bootstrap_draw(cohort, plan),
    );
    Ok((out.tau, out.convergence))
}

/// Rank trajectory of the replicate that converged last (censored counts as latest;
/// ties go to the lowest replicate index).
pub fn worst_case_trajectory(cohort: &Cohort, method: Method, plan: &ResamplePlan) -> Result<Trajectory> {
    let (_, outcomes) = convergence_with_outcomes(cohort, &[method], plan, None)?;
    let severity = |o: &Option<usize>| o.unwrap_or(plan.n_max + 1);
    let mut worst = 0usize;
    for (i, o) in outcomes[0].iter().enumerate() {
        if severity(o) > severity(&outcomes[0][worst]) {
            worst = i;
        }
    }
    let replicate = worst as u64;
    let matrices = bootstrap_draw(cohort, plan)(replicate);
    let mut tables = Vec::new();
    for n in method.min_trials().max(1)..=plan.n_max {
        let scored = cohort
            .ids
            .iter()
            .zip(&matrices)
            .map(|(id, m)| {
                let s = method.score(&m.prefix(n), &cohort.weights)?;
                ScoredModel::new(id.clone(), s.value, s.sigma)
            })
            .collect::<Result<Vec<_>>>()?;
        tables.push((n, rank_without_ci(&scored)));
    }
    Ok(Trajectory {
        method: method.to_string(),
        replicate,
        convergence: outcomes[0][worst],
        tables,
    })
}
