//! The Pass@k family of estimators over binary per-question tallies.
//!
//! Hypergeometric ratios use the exact integer binomial table for `n <= 64`.
//! Beyond that, Pass@k and Pass^k fall back to telescoping products and
//! G-Pass@k to exponentiated log-gamma differences.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::model::ResultsMatrix;
use crate::numeric::{binomial_exact, ln_binomial, EXACT_BINOMIAL_MAX};

/// `(n, c)` per question: trials used and how many were correct.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryTally {
    pairs: Vec<(usize, usize)>,
}

impl BinaryTally {
    pub fn new(pairs: Vec<(usize, usize)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::EmptyMatrix);
        }
        if let Some(row) = pairs.iter().position(|&(n, c)| c > n) {
            let (n, c) = pairs[row];
            return Err(Error::CategoryOutOfRange {
                row,
                col: 0,
                value: c as i64,
                max: n as u32,
            });
        }
        Ok(BinaryTally { pairs })
    }

    /// Counts category-1 cells per row of a binary matrix.
    pub fn from_matrix(matrix: &ResultsMatrix) -> Result<Self> {
        if matrix.max_category() != 1 {
            return Err(Error::NotBinary(matrix.max_category()));
        }
        let n = matrix.trials();
        let pairs = matrix
            .rows()
            .map(|row| (n, row.iter().filter(|&&v| v == 1).count()))
            .collect();
        Ok(BinaryTally { pairs })
    }

    pub fn pairs(&self) -> &[(usize, usize)] {
        &self.pairs
    }

    fn check_k(&self, k: usize) -> Result<()> {
        if k == 0 {
            return Err(Error::KZero);
        }
        if let Some(&(n, _)) = self.pairs.iter().find(|&&(n, _)| k > n) {
            return Err(Error::KExceedsN { k, n });
        }
        Ok(())
    }

    fn mean(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        self.pairs.iter().map(|&(n, c)| f(n, c)).sum::<f64>() / self.pairs.len() as f64
    }
}

/// Tolerance `τ̃ = num/den` in `(0, 1]`, kept rational so `⌈τ̃ k⌉` is exact.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Tau {
    num: u64,
    den: u64,
}

impl Tau {
    pub fn new(num: u64, den: u64) -> Result<Self> {
        if den == 0 || num == 0 || num > den {
            return Err(Error::TauOutOfRange(format!("{num}/{den}")));
        }
        Ok(Tau { num, den })
    }

    /// Converts through the shortest decimal that round-trips `x`, so `0.7` is `7/10`.
    pub fn from_f64(x: f64) -> Result<Self> {
        if !x.is_finite() {
            return Err(Error::TauOutOfRange(x.to_string()));
        }
        format!("{x}").parse()
    }

    pub fn value(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// `⌈τ̃ k⌉` in integer arithmetic.
    pub fn min_correct(&self, k: usize) -> usize {
        let scaled = self.num as u128 * k as u128;
        scaled.div_ceil(self.den as u128) as usize
    }
}

impl FromStr for Tau {
    type Err = Error;

    /// Accepts `a/b` or a plain decimal such as `0.75`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::TauOutOfRange(s.to_string());
        let s = s.trim();
        if let Some((a, b)) = s.split_once('/') {
            let num = a.trim().parse::<u64>().map_err(|_| bad())?;
            let den = b.trim().parse::<u64>().map_err(|_| bad())?;
            return Tau::new(num, den).map_err(|_| bad());
        }
        let (int_part, frac_part) = s.split_once('.').unwrap_or((s, ""));
        if frac_part.len() > 18 || !frac_part.chars().all(|ch| ch.is_ascii_digit()) {
            return Err(bad());
        }
        let int: u64 = if int_part.is_empty() {
            0
        } else {
            int_part.parse().map_err(|_| bad())?
        };
        let den = 10u64.pow(frac_part.len() as u32);
        let frac: u64 = if frac_part.is_empty() {
            0
        } else {
            frac_part.parse().map_err(|_| bad())?
        };
        let num = int
            .checked_mul(den)
            .and_then(|v| v.checked_add(frac))
            .ok_or_else(bad)?;
        let g = gcd(num, den);
        if g == 0 {
            return Err(bad());
        }
        Tau::new(num / g, den / g).map_err(|_| bad())
    }
}

impl fmt::Display for Tau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.num, self.den)
    }
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// `1 - C(n-c, k) / C(n, k)` for one question.
pub fn pass_at_k_single(n: usize, c: usize, k: usize) -> f64 {
    if n - c < k {
        return 1.0;
    }
    if n <= EXACT_BINOMIAL_MAX {
        return 1.0 - binomial_exact(n - c, k) as f64 / binomial_exact(n, k) as f64;
    }
    let miss: f64 = (n - c + 1..=n).map(|i| 1.0 - k as f64 / i as f64).product();
    1.0 - miss
}

/// `C(c, k) / C(n, k)` for one question.
pub fn pass_hat_k_single(n: usize, c: usize, k: usize) -> f64 {
    if c < k {
        return 0.0;
    }
    if n <= EXACT_BINOMIAL_MAX {
        return binomial_exact(c, k) as f64 / binomial_exact(n, k) as f64;
    }
    (0..k).map(|i| (c - i) as f64 / (n - i) as f64).product()
}

/// Probability that at least `⌈τ̃ k⌉` of `k` draws without replacement are correct.
pub fn g_pass_single(n: usize, c: usize, k: usize, tau: Tau) -> f64 {
    let lo = tau.min_correct(k);
    let hi = c.min(k);
    if lo > hi {
        return 0.0;
    }
    let wrong = n - c;
    if n <= EXACT_BINOMIAL_MAX {
        let numer: u128 = (lo..=hi)
            .filter(|&j| k - j <= wrong)
            .map(|j| binomial_exact(c, j) as u128 * binomial_exact(wrong, k - j) as u128)
            .sum();
        return numer as f64 / binomial_exact(n, k) as f64;
    }
    let ln_total = ln_binomial(n, k);
    (lo..=hi)
        .filter(|&j| k - j <= wrong)
        .map(|j| (ln_binomial(c, j) + ln_binomial(wrong, k - j) - ln_total).exp())
        .sum::<f64>()
        .min(1.0)
}

/// Unbiased Pass@k, averaged over questions.
pub fn pass_at_k(tally: &BinaryTally, k: usize) -> Result<f64> {
    tally.check_k(k)?;
    Ok(tally.mean(|n, c| pass_at_k_single(n, c, k)))
}

/// Pass^k: probability that all `k` draws are correct, averaged over questions.
pub fn pass_hat_k(tally: &BinaryTally, k: usize) -> Result<f64> {
    tally.check_k(k)?;
    Ok(tally.mean(|n, c| pass_hat_k_single(n, c, k)))
}

/// Plug-in variant `1 - (1 - c/n)^k`, averaged over questions.
pub fn naive_pass_hat_k(tally: &BinaryTally, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::KZero);
    }
    if tally.pairs.iter().any(|&(n, _)| n == 0) {
        return Err(Error::ZeroTrials);
    }
    Ok(tally.mean(|n, c| 1.0 - (1.0 - c as f64 / n as f64).powi(k as i32)))
}

/// G-Pass@k at tolerance `τ̃`, averaged over questions.
pub fn g_pass_at_k_tau(tally: &BinaryTally, k: usize, tau: Tau) -> Result<f64> {
    tally.check_k(k)?;
    Ok(tally.mean(|n, c| g_pass_single(n, c, k, tau)))
}

/// mG-Pass@k as the discrete sum `(2/k) Σ_{i=⌈k/2⌉+1}^{k} G-Pass@k_{i/k}`.
pub fn mg_pass_at_k(tally: &BinaryTally, k: usize) -> Result<f64> {
    if k < 2 {
        return Err(Error::KTooSmall(k));
    }
    tally.check_k(k)?;
    Ok(tally.mean(|n, c| mg_pass_single(n, c, k)))
}

pub(crate) fn mg_pass_single(n: usize, c: usize, k: usize) -> f64 {
    let start = k.div_ceil(2) + 1;
    let sum: f64 = (start..=k)
        .map(|i| g_pass_single(n, c, k, Tau { num: i as u64, den: k as u64 }))
        .sum();
    2.0 / k as f64 * sum
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one(n: usize, c: usize) -> BinaryTally {
        BinaryTally::new(vec![(n, c)]).unwrap()
    }

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn pass_at_k_examples() {
        assert!(close(pass_at_k(&one(4, 2), 2).unwrap(), 5.0 / 6.0));
        assert_eq!(pass_at_k(&one(6, 0), 3).unwrap(), 0.0);
        assert_eq!(pass_at_k(&one(6, 6), 3).unwrap(), 1.0);
        assert!(close(pass_at_k(&one(10, 3), 1).unwrap(), 0.3));
    }

    #[test]
    fn pass_hat_k_examples() {
        assert!(close(pass_hat_k(&one(4, 2), 2).unwrap(), 1.0 / 6.0));
        assert_eq!(pass_hat_k(&one(5, 5), 3).unwrap(), 1.0);
        assert_eq!(pass_hat_k(&one(5, 2), 3).unwrap(), 0.0);
    }

    #[test]
    fn naive_pass_hat_examples() {
        assert!(close(naive_pass_hat_k(&one(2, 1), 2).unwrap(), 0.75));
        assert_eq!(naive_pass_hat_k(&one(4, 0), 3).unwrap(), 0.0);
        assert_eq!(naive_pass_hat_k(&one(4, 4), 3).unwrap(), 1.0);
        assert!(close(naive_pass_hat_k(&one(10, 3), 1).unwrap(), 0.3));
        assert!(matches!(naive_pass_hat_k(&one(0, 0), 1), Err(Error::ZeroTrials)));
    }

    #[test]
    fn g_pass_examples() {
        let half = Tau::new(1, 2).unwrap();
        let full = Tau::new(1, 1).unwrap();
        assert!(close(g_pass_at_k_tau(&one(4, 2), 2, half).unwrap(), 5.0 / 6.0));
        assert!(close(g_pass_at_k_tau(&one(4, 2), 2, full).unwrap(), 1.0 / 6.0));
        assert_eq!(g_pass_at_k_tau(&one(7, 0), 3, half).unwrap(), 0.0);
    }

    #[test]
    fn mg_pass_examples() {
        assert!(close(mg_pass_at_k(&one(4, 2), 2).unwrap(), 1.0 / 6.0));
        assert!(close(mg_pass_at_k(&one(6, 3), 4).unwrap(), 0.1));
        for k in [2, 4, 6, 8] {
            assert!(close(mg_pass_at_k(&one(8, 8), k).unwrap(), 1.0));
        }
        // Odd k: the discrete sum has (k - ⌈k/2⌉) unit terms, so c = n gives 2/3 at k = 3.
        assert!(close(mg_pass_at_k(&one(8, 8), 3).unwrap(), 2.0 / 3.0));
        assert!(matches!(mg_pass_at_k(&one(8, 8), 1), Err(Error::KTooSmall(1))));
    }

    #[test]
    fn k_errors() {
        assert!(matches!(pass_at_k(&one(3, 1), 0), Err(Error::KZero)));
        assert!(matches!(pass_at_k(&one(3, 1), 4), Err(Error::KExceedsN { k: 4, n: 3 })));
        assert!(matches!(
            g_pass_at_k_tau(&one(3, 1), 4, Tau::new(1, 2).unwrap()),
            Err(Error::KExceedsN { .. })
        ));
    }

    #[test]
    fn tau_parsing_is_exact() {
        assert_eq!("1/2".parse::<Tau>().unwrap(), Tau::new(1, 2).unwrap());
        assert_eq!("0.5".parse::<Tau>().unwrap(), Tau::new(1, 2).unwrap());
        assert_eq!("1".parse::<Tau>().unwrap(), Tau::new(1, 1).unwrap());
        assert_eq!(Tau::from_f64(0.7).unwrap().min_correct(10), 7);
        assert_eq!(Tau::new(1, 2).unwrap().min_correct(2), 1);
        assert_eq!(Tau::new(1, 2).unwrap().min_correct(3), 2);
        assert!("0".parse::<Tau>().is_err());
        assert!("1.5".parse::<Tau>().is_err());
        assert!("3/2".parse::<Tau>().is_err());
        assert!("abc".parse::<Tau>().is_err());
    }

    #[test]
    fn large_n_paths_agree_with_exact_ratios() {
        // n = 80 crosses into the product / log-gamma paths
        for c in [0usize, 1, 17, 40, 79, 80] {
            for k in [1usize, 2, 4, 8] {
                let p = pass_at_k_single(80, c, k);
                let direct: f64 = 1.0 - (0..k).map(|i| (80 - c) as f64 - i as f64).map(|x| x.max(0.0)).product::<f64>()
                    / (0..k).map(|i| 80.0 - i as f64).product::<f64>();
                assert!((p - direct).abs() < 1e-12, "c={c} k={k}");
                let g = g_pass_single(80, c, k, Tau::new(1, 1).unwrap());
                assert!((g - pass_hat_k_single(80, c, k)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn binary_tally_requires_binary_matrix() {
        let m = crate::model::validate_matrix(&[vec![0, 2]], 2).unwrap();
        assert!(matches!(BinaryTally::from_matrix(&m), Err(Error::NotBinary(2))));
        let m = crate::model::validate_matrix(&[vec![0, 1, 1], vec![1, 1, 1]], 1).unwrap();
        assert_eq!(BinaryTally::from_matrix(&m).unwrap().pairs(), &[(3, 2), (3, 3)]);
    }
}
