//! Rank tables with and without credible-interval ties, the z-score rule,
//! ranking confidence and Kendall's τ-b.

use serde::Serialize;
use statrs::function::erf::erf;

use crate::error::{Error, Result};

/// A model's point estimate and its standard deviation (0 for point-only methods).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoredModel {
    pub model_id: String,
    pub mu: f64,
    pub sigma: f64,
}

impl ScoredModel {
    pub fn new(model_id: impl Into<String>, mu: f64, sigma: f64) -> Result<Self> {
        let model_id = model_id.into();
        if !mu.is_finite() {
            return Err(Error::InvalidScore {
                model_id,
                reason: format!("mu = {mu} is not finite"),
            });
        }
        if sigma.is_nan() || sigma < 0.0 || !sigma.is_finite() {
            return Err(Error::InvalidScore {
                model_id,
                reason: format!("sigma = {sigma} must be finite and >= 0"),
            });
        }
        Ok(ScoredModel { model_id, mu, sigma })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankEntry {
    pub model_id: String,
    pub mu: f64,
    pub sigma: f64,
    pub rank: u32,
}

/// Models sorted by descending `mu` with dense ranks (1, 2, 2, 3, ...).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RankTable {
    pub entries: Vec<RankEntry>,
    #[serde(skip)]
    input_order: Vec<usize>,
}

impl RankTable {
    /// Rank of each model in the order the models were supplied.
    pub fn ranks_by_input(&self) -> Vec<u32> {
        let mut ranks = vec![0; self.entries.len()];
        for (entry, &idx) in self.entries.iter().zip(&self.input_order) {
            ranks[idx] = entry.rank;
        }
        ranks
    }

    pub fn rank_of(&self, model_id: &str) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.model_id == model_id)
            .map(|e| e.rank)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Number of distinct rank groups.
    pub fn groups(&self) -> u32 {
        self.entries.last().map_or(0, |e| e.rank)
    }
}

/// How credible-interval ties propagate through a sorted list.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TieRule {
    /// Each model is compared with the previous one only; ties chain transitively,
    /// so A and C can share a rank even when `z(A, C)` clears the threshold.
    #[default]
    Chained,
    /// A model joins the current group only if it is within the threshold of every member.
    Clique,
}

fn sorted_order(models: &[ScoredModel]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..models.len()).collect();
    order.sort_by(|&a, &b| models[b].mu.total_cmp(&models[a].mu));
    order
}

fn build(models: &[ScoredModel], order: Vec<usize>, same_group: impl Fn(&[usize], usize) -> bool) -> RankTable {
    let mut entries: Vec<RankEntry> = Vec::with_capacity(order.len());
    let mut group: Vec<usize> = Vec::new();
    let mut rank = 0u32;
    for &idx in &order {
        if group.is_empty() || !same_group(&group, idx) {
            rank += 1;
            group.clear();
        }
        group.push(idx);
        let m = &models[idx];
        entries.push(RankEntry {
            model_id: m.model_id.clone(),
            mu: m.mu,
            sigma: m.sigma,
            rank,
        });
    }
    RankTable {
        entries,
        input_order: order,
    }
}

/// Strict ordering by point estimate; only exactly equal `mu` values share a rank.
pub fn rank_without_ci(models: &[ScoredModel]) -> RankTable {
    let order = sorted_order(models);
    build(models, order, |group, idx| {
        models[*group.last().unwrap()].mu == models[idx].mu
    })
}

/// Ordering by point estimate where consecutive models whose `|z|` falls below
/// `z_threshold` share a rank (chained ties).
pub fn rank_with_ci(models: &[ScoredModel], z_threshold: f64) -> RankTable {
    rank_with_ci_rule(models, z_threshold, TieRule::Chained)
}

pub fn rank_with_ci_rule(models: &[ScoredModel], z_threshold: f64, rule: TieRule) -> RankTable {
    let order = sorted_order(models);
    let tied = |a: usize, b: usize| z_score(&models[a], &models[b]) < z_threshold;
    match rule {
        TieRule::Chained => build(models, order, |group, idx| tied(*group.last().unwrap(), idx)),
        TieRule::Clique => build(models, order, |group, idx| group.iter().all(|&g| tied(g, idx))),
    }
}

/// `|μ_a - μ_b| / sqrt(σ_a² + σ_b²)`.
///
/// With both σ zero this is `0` for equal means and `+∞` otherwise.
pub fn z_score(a: &ScoredModel, b: &ScoredModel) -> f64 {
    let gap = (a.mu - b.mu).abs();
    let spread = (a.sigma * a.sigma + b.sigma * b.sigma).sqrt();
    if spread == 0.0 {
        if gap == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        gap / spread
    }
}

/// Probability that the observed order of two models is the true one:
/// `ρ = (1 + erf(z / √2)) / 2`.
pub fn ranking_confidence(z: f64) -> Result<f64> {
    if z < 0.0 || z.is_nan() {
        return Err(Error::NegativeZ(z));
    }
    if z.is_infinite() {
        return Ok(1.0);
    }
    Ok(0.5 * (1.0 + erf(z / std::f64::consts::SQRT_2)))
}

/// Kendall's τ-b between two rank (or score) vectors, with tie correction on both sides.
pub fn kendall_tau_b<T: PartialOrd>(a: &[T], b: &[T]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::LengthMismatch(a.len(), b.len()));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::TooShort);
    }
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = sign(&a[i], &a[j]);
            let db = sign(&b[i], &b[j]);
            if da == 0 {
                ties_a += 1;
            }
            if db == 0 {
                ties_b += 1;
            }
            match da * db {
                1 => concordant += 1,
                -1 => discordant += 1,
                _ => {}
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = ((pairs - ties_a) as f64 * (pairs - ties_b) as f64).sqrt();
    if denom == 0.0 {
        return Err(Error::AllTied);
    }
    Ok((concordant - discordant) as f64 / denom)
}

fn sign<T: PartialOrd>(x: &T, y: &T) -> i64 {
    match x.partial_cmp(y) {
        Some(std::cmp::Ordering::Less) => -1,
        Some(std::cmp::Ordering::Greater) => 1,
        _ => 0,
    }
}

/// Smallest `N` in `1..=budget` with `|mu_gap| / sigma_at(N) >= target_z`.
///
/// `sigma_at(N)` is the combined standard deviation `sqrt(σ_a² + σ_b²)` at `N` trials,
/// measured or fitted.
pub fn min_trials_for_confidence(
    mu_gap: f64,
    sigma_at: impl Fn(usize) -> f64,
    target_z: f64,
    budget: usize,
) -> Result<usize> {
    let unreachable = || Error::NotReachable {
        target: target_z,
        budget,
    };
    if mu_gap == 0.0 || !mu_gap.is_finite() {
        return Err(unreachable());
    }
    (1..=budget)
        .find(|&n| {
            let s = sigma_at(n);
            s == 0.0 || mu_gap.abs() / s >= target_z
        })
        .ok_or_else(unreachable)
}

/// First `N` of a measured `(N, z)` curve at which `z >= target_z`.
pub fn first_crossing(curve: &[(usize, f64)], target_z: f64) -> Result<usize> {
    curve
        .iter()
        .find(|&&(_, z)| z >= target_z)
        .map(|&(n, _)| n)
        .ok_or(Error::NotReachable {
            target: target_z,
            budget: curve.last().map_or(0, |&(n, _)| n),
        })
}

/// Least-squares fit of `σ(N) = a / sqrt(N)` through measured points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InverseSqrtFit {
    pub coefficient: f64,
}

impl InverseSqrtFit {
    pub fn fit(points: &[(usize, f64)]) -> Option<Self> {
        let (num, den) = points
            .iter()
            .filter(|&&(n, _)| n > 0)
            .fold((0.0, 0.0), |(num, den), &(n, s)| {
                let x = 1.0 / (n as f64).sqrt();
                (num + s * x, den + x * x)
            });
        (den > 0.0).then(|| InverseSqrtFit {
            coefficient: num / den,
        })
    }

    pub fn sigma_at(&self, n: usize) -> f64 {
        self.coefficient / (n as f64).sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn models(mus: &[f64]) -> Vec<ScoredModel> {
        mus.iter()
            .enumerate()
            .map(|(i, &mu)| ScoredModel::new(format!("m{i}"), mu, 0.0).unwrap())
            .collect()
    }

    #[test]
    fn z_score_examples() {
        let a = ScoredModel::new("a", 0.6213, 0.00824).unwrap();
        let b = ScoredModel::new("b", 0.608, 0.00824).unwrap();
        assert!((z_score(&a, &b) - 1.141).abs() < 1e-3);
        assert_eq!(z_score(&a, &a), 0.0);
        let c = ScoredModel::new("c", 1.645 * 2f64.sqrt(), 1.0).unwrap();
        let d = ScoredModel::new("d", 0.0, 1.0).unwrap();
        assert!((z_score(&c, &d) - 1.645).abs() < 1e-12);
        let e = ScoredModel::new("e", 0.3, 0.0).unwrap();
        let f = ScoredModel::new("f", 0.2, 0.0).unwrap();
        assert_eq!(z_score(&e, &f), f64::INFINITY);
        assert_eq!(z_score(&e, &e), 0.0);
    }

    #[test]
    fn confidence_anchor_values() {
        assert_eq!(ranking_confidence(0.0).unwrap(), 0.5);
        let r = ranking_confidence(1.645).unwrap();
        assert!((0.9499..=0.9501).contains(&r));
        let r = ranking_confidence(1.96).unwrap();
        assert!((0.9749..=0.9751).contains(&r));
        assert!(matches!(ranking_confidence(-0.1), Err(Error::NegativeZ(_))));
    }

    #[test]
    fn dense_ranks_without_ci() {
        let t = rank_without_ci(&models(&[0.7, 0.5, 0.5, 0.2]));
        assert_eq!(t.ranks_by_input(), vec![1, 2, 2, 3]);
        let t = rank_without_ci(&models(&[0.4]));
        assert_eq!(t.ranks_by_input(), vec![1]);
        // unsorted input keeps input positions
        let t = rank_without_ci(&models(&[0.2, 0.7, 0.5]));
        assert_eq!(t.ranks_by_input(), vec![3, 1, 2]);
        assert_eq!(t.entries[0].model_id, "m1");
    }

    #[test]
    fn ci_ties_and_separation() {
        let close = vec![
            ScoredModel::new("a", 0.6213, 0.00824).unwrap(),
            ScoredModel::new("b", 0.608, 0.00824).unwrap(),
        ];
        assert_eq!(rank_with_ci(&close, 1.645).ranks_by_input(), vec![1, 1]);
        let apart = vec![
            ScoredModel::new("a", 0.7, 0.01).unwrap(),
            ScoredModel::new("b", 0.7 - 2.5 * 0.01 * 2f64.sqrt(), 0.01).unwrap(),
        ];
        assert_eq!(rank_with_ci(&apart, 1.645).ranks_by_input(), vec![1, 2]);
        let m = models(&[0.9, 0.1, 0.5, 0.3]);
        assert_eq!(rank_with_ci(&m, 1.645).ranks_by_input(), rank_without_ci(&m).ranks_by_input());
    }

    #[test]
    fn chained_versus_clique() {
        // consecutive gaps are each below threshold, the end-to-end gap is not
        let m = vec![
            ScoredModel::new("a", 1.0, 1.0).unwrap(),
            ScoredModel::new("b", 0.0, 1.0).unwrap(),
            ScoredModel::new("c", -1.0, 1.0).unwrap(),
        ];
        assert!(z_score(&m[0], &m[2]) > 1.3);
        assert_eq!(rank_with_ci_rule(&m, 1.3, TieRule::Chained).ranks_by_input(), vec![1, 1, 1]);
        assert_eq!(rank_with_ci_rule(&m, 1.3, TieRule::Clique).ranks_by_input(), vec![1, 1, 2]);
    }

    #[test]
    fn tau_b_examples() {
        assert_eq!(kendall_tau_b(&[1, 2, 3, 4], &[1, 2, 3, 4]).unwrap(), 1.0);
        assert_eq!(kendall_tau_b(&[1, 2, 3, 4], &[4, 3, 2, 1]).unwrap(), -1.0);
        let t = kendall_tau_b(&[1, 2, 3, 4], &[1, 2, 2, 3]).unwrap();
        assert!((t - 5.0 / 30f64.sqrt()).abs() < 1e-12);
        assert!((t - 0.9129).abs() < 1e-4);
        assert!(matches!(kendall_tau_b(&[1, 1], &[1, 2]), Err(Error::AllTied)));
        assert!(matches!(kendall_tau_b(&[1, 2], &[1]), Err(Error::LengthMismatch(2, 1))));
        assert!(matches!(kendall_tau_b(&[1], &[1]), Err(Error::TooShort)));
    }

    #[test]
    fn min_trials_with_inverse_sqrt_sigma() {
        // σ(N) = 1/sqrt(N), gap 0.1: z = 0.1 sqrt(N) >= 1.645 first at N = 271
        let n = min_trials_for_confidence(0.1, |n| 1.0 / (n as f64).sqrt(), 1.645, 1000).unwrap();
        assert_eq!(n, 271);
        assert!(matches!(
            min_trials_for_confidence(0.0, |_| 1.0, 1.645, 1000),
            Err(Error::NotReachable { .. })
        ));
        assert!(matches!(
            min_trials_for_confidence(0.1, |n| 1.0 / (n as f64).sqrt(), 1.645, 100),
            Err(Error::NotReachable { .. })
        ));
    }

    #[test]
    fn inverse_sqrt_fit_recovers_coefficient() {
        let pts: Vec<(usize, f64)> = [10usize, 40, 90].iter().map(|&n| (n, 0.3 / (n as f64).sqrt())).collect();
        let fit = InverseSqrtFit::fit(&pts).unwrap();
        assert!((fit.coefficient - 0.3).abs() < 1e-12);
        assert!((fit.sigma_at(25) - 0.06).abs() < 1e-12);
    }

    #[test]
    fn invalid_scores_rejected() {
        assert!(ScoredModel::new("x", f64::NAN, 0.0).is_err());
        assert!(ScoredModel::new("x", 0.5, -1.0).is_err());
    }
}
