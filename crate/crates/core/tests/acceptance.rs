//! Acceptance suite. Each test prints one `criterion N: PASS|FAIL` line and
//! then asserts the same condition.

use std::time::Instant;

use bayeseval::bootstrap::{convergence_distributions, Cohort, ResamplePlan, Scheme};
use bayeseval::method::{parse_methods, Method};
use bayeseval::passk::{g_pass_single, mg_pass_at_k, pass_at_k_single, pass_hat_k_single, BinaryTally, Tau};
use bayeseval::ranking::{kendall_tau_b, ranking_confidence};
use bayeseval::rubric::{build_matrix, builtin_names, variable_lattice, AttemptSignals, Schema, SignalRecord};
use bayeseval::simulate::{
    compare_schemes, fresh_tau_curves, reference_cohort, sample_cohort, separation_experiment, CoinModel,
};
use bayeseval::{
    evaluate_performance, naive_weighted_average, validate_matrix, PriorData, ResultsMatrix, WeightVector,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn report(criterion: u32, pass: bool, detail: &str) {
    println!("criterion {criterion}: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

struct Instance {
    matrix: ResultsMatrix,
    prior: PriorData,
    weights: WeightVector,
}

fn random_matrix(rng: &mut ChaCha8Rng, m: usize, n: usize, c: u32) -> ResultsMatrix {
    let rows: Vec<Vec<i64>> = (0..m)
        .map(|_| (0..n).map(|_| rng.random_range(0..=c as i64)).collect())
        .collect();
    validate_matrix(&rows, c).unwrap()
}

fn random_instance(rng: &mut ChaCha8Rng, with_prior: bool) -> Instance {
    let m = rng.random_range(1..=20);
    let n = rng.random_range(1..=50);
    let c = rng.random_range(1..=4u32);
    let weights = WeightVector::new((0..=c).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
    let prior = if with_prior && rng.random_bool(0.5) {
        let d = rng.random_range(1..=10);
        PriorData::Matrix(random_matrix(rng, m, d, c))
    } else {
        PriorData::Uniform
    };
    Instance {
        matrix: random_matrix(rng, m, n, c),
        prior,
        weights,
    }
}

/// Dirichlet moments written out directly: `ν_k = α_k / T`,
/// `Cov(ν_k, ν_l) = (δ_kl ν_k − ν_k ν_l) / (T + 1)`.
fn dirichlet_oracle(inst: &Instance) -> (f64, f64) {
    let m = inst.matrix.questions();
    let k = inst.matrix.num_categories();
    let w = inst.weights.as_slice();
    let mut mean = 0.0;
    let mut var = 0.0;
    for q in 0..m {
        let mut alpha = vec![1.0f64; k];
        for &v in inst.matrix.row(q) {
            alpha[v as usize] += 1.0;
        }
        if let PriorData::Matrix(p) = &inst.prior {
            for &v in p.row(q) {
                alpha[v as usize] += 1.0;
            }
        }
        let t: f64 = alpha.iter().sum();
        let nu: Vec<f64> = alpha.iter().map(|a| a / t).collect();
        for i in 0..k {
            mean += w[i] * nu[i];
            for j in 0..k {
                let delta = if i == j { nu[i] } else { 0.0 };
                var += w[i] * w[j] * (delta - nu[i] * nu[j]) / (t + 1.0);
            }
        }
    }
    let m = m as f64;
    (mean / m, (var / (m * m)).max(0.0).sqrt())
}

#[test]
fn criterion_1_dirichlet_oracle() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..1000 {
        let inst = random_instance(&mut rng, true);
        let s = evaluate_performance(&inst.matrix, &inst.prior, &inst.weights).unwrap();
        let (mu, sigma) = dirichlet_oracle(&inst);
        worst = worst.max((s.mu - mu).abs()).max((s.sigma - sigma).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    let pass = worst <= 1e-12 && secs < 5.0;
    report(1, pass, &format!("max |diff| = {worst:.3e} over 1000 instances in {secs:.2}s"));
    assert!(pass);
}

#[test]
fn criterion_2_uniform_prior_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut sign_ok = true;
    let mut bridge_err = 0.0f64;
    let mut sigma_err = 0.0f64;
    // 100 groups of 10 instances sharing (M, N, C, w), so that every pair within a group is comparable.
    for _ in 0..100 {
        let m = rng.random_range(1..=20);
        let n = rng.random_range(1..=50);
        let c = rng.random_range(1..=4u32);
        let weights = WeightVector::new((0..=c).map(|_| rng.random_range(-2.0..2.0)).collect()).unwrap();
        let mut group = Vec::new();
        for _ in 0..10 {
            let matrix = random_matrix(&mut rng, m, n, c);
            let s = evaluate_performance(&matrix, &PriorData::Uniform, &weights).unwrap();
            let a = naive_weighted_average(&matrix, &weights).unwrap();

            let offset: f64 = weights.as_slice().iter().sum::<f64>() / (1 + c as usize + n) as f64;
            let scale = n as f64 / (1 + c as usize + n) as f64;
            bridge_err = bridge_err.max((s.mu - (offset + scale * a)).abs());

            let avg = Method::Avg.score(&matrix, &weights).unwrap();
            let expected = (1 + c as usize + n) as f64 / n as f64 * s.sigma;
            sigma_err = sigma_err.max((avg.sigma - expected).abs());
            group.push((s.mu, a));
        }
        for (i, x) in group.iter().enumerate() {
            for y in &group[i + 1..] {
                let da = x.1 - y.1;
                let dm = x.0 - y.0;
                let ok = if da.abs() < 1e-12 { dm.abs() < 1e-12 } else { da.signum() == dm.signum() };
                sign_ok &= ok;
            }
        }
    }
    let pass = sign_ok && bridge_err <= 1e-12 && sigma_err <= 1e-12;
    report(
        2,
        pass,
        &format!("order preserved: {sign_ok}; bridge max err {bridge_err:.3e}; sigma_avg max err {sigma_err:.3e}"),
    );
    assert!(pass);
}

/// Fractions of the k-subsets of an (n, c) outcome vector with at least `need` correct.
fn subset_fraction(n: usize, c: usize, k: usize, need: usize) -> f64 {
    let mut hits = 0u64;
    let mut total = 0u64;
    // the first c positions are the correct attempts
    let correct_mask: u32 = (1u32 << c) - 1;
    for s in 0u32..(1 << n) {
        if s.count_ones() as usize != k {
            continue;
        }
        total += 1;
        if (s & correct_mask).count_ones() as usize >= need {
            hits += 1;
        }
    }
    hits as f64 / total as f64
}

#[test]
fn criterion_3_pass_family_brute_force() {
    let mut worst = 0.0f64;
    let mut cases = 0u64;
    for n in 1..=8 {
        for c in 0..=n {
            for k in 1..=n {
                worst = worst.max((pass_at_k_single(n, c, k) - subset_fraction(n, c, k, 1)).abs());
                worst = worst.max((pass_hat_k_single(n, c, k) - subset_fraction(n, c, k, k)).abs());
                let mut g = Vec::with_capacity(k);
                for j in 1..=k {
                    let tau = Tau::new(j as u64, k as u64).unwrap();
                    let brute = subset_fraction(n, c, k, j);
                    worst = worst.max((g_pass_single(n, c, k, tau) - brute).abs());
                    g.push(brute);
                    cases += 1;
                }
                if k >= 2 {
                    let start = k.div_ceil(2) + 1;
                    let sum: f64 = (start..=k).map(|i| g[i - 1]).sum();
                    let expected = 2.0 / k as f64 * sum;
                    let tally = BinaryTally::new(vec![(n, c)]).unwrap();
                    worst = worst.max((mg_pass_at_k(&tally, k).unwrap() - expected).abs());
                }
            }
        }
    }
    let pass = worst <= 1e-12;
    report(3, pass, &format!("max |diff| = {worst:.3e} over {cases} (n, c, k, tau) cases"));
    assert!(pass);
}

fn tau_b_by_pairs(a: &[u8], b: &[u8]) -> Option<f64> {
    let (mut conc, mut disc, mut tie_a, mut tie_b) = (0i64, 0i64, 0i64, 0i64);
    let n = a.len();
    for i in 0..n {
        for j in i + 1..n {
            let da = (a[i] as i64 - a[j] as i64).signum();
            let db = (b[i] as i64 - b[j] as i64).signum();
            if da == 0 {
                tie_a += 1;
            }
            if db == 0 {
                tie_b += 1;
            }
            match da * db {
                1 => conc += 1,
                -1 => disc += 1,
                _ => {}
            }
        }
    }
    let n0 = (n * (n - 1) / 2) as i64;
    let denom = ((n0 - tie_a) as f64 * (n0 - tie_b) as f64).sqrt();
    if denom == 0.0 {
        None
    } else {
        Some((conc - disc) as f64 / denom)
    }
}

fn all_vectors(len: usize) -> Vec<Vec<u8>> {
    (0..4usize.pow(len as u32))
        .map(|mut code| {
            (0..len)
                .map(|_| {
                    let d = (code % 4) as u8 + 1;
                    code /= 4;
                    d
                })
                .collect()
        })
        .collect()
}

#[test]
fn criterion_4_kendall_tau_b_oracle() {
    let mut mismatches = 0u64;
    let mut pairs = 0u64;
    let mut identities_ok = true;
    for len in 2..=6 {
        let vs = all_vectors(len);
        for a in &vs {
            for b in &vs {
                pairs += 1;
                let got = kendall_tau_b(a, b).ok();
                let ok = match (got, tau_b_by_pairs(a, b)) {
                    (Some(x), Some(y)) => (x - y).abs() <= 1e-12,
                    (None, None) => true,
                    _ => false,
                };
                mismatches += u64::from(!ok);
            }
            let mut sorted = a.clone();
            sorted.sort();
            sorted.dedup();
            if sorted.len() == len {
                let rev: Vec<u8> = a.iter().map(|x| 5 - x).collect();
                identities_ok &= kendall_tau_b(a, a).unwrap() == 1.0;
                identities_ok &= kendall_tau_b(a, &rev).unwrap() == -1.0;
            }
        }
    }
    let pass = mismatches == 0 && identities_ok;
    report(
        4,
        pass,
        &format!("{mismatches} mismatches over {pairs} vector pairs; identity/reversal ok: {identities_ok}"),
    );
    assert!(pass);
}

#[test]
fn criterion_5_two_model_separation() {
    let start = Instant::now();
    let cohort = reference_cohort();
    let (a, b) = (&cohort[9], &cohort[8]);
    assert_eq!((a.model_id(), b.model_id()), ("LLM10", "LLM9"));
    let grid: Vec<usize> = (1..=400).collect();
    let curve = separation_experiment(a, b, &grid, 10_000, 2024).unwrap();
    let p80 = curve.at(80).unwrap().p_correct;
    let n95 = curve.first_n_reaching(1.645);
    let n975 = curve.first_n_reaching(1.96);
    let pass = (0.80..=0.87).contains(&p80)
        && n95.is_some_and(|n| (169..=229).contains(&n))
        && n975.is_some_and(|n| (242..=328).contains(&n));
    report(
        5,
        pass,
        &format!(
            "P(LLM10 > LLM9 | N=80) = {p80:.4}; N(z>=1.645) = {n95:?}; N(z>=1.96) = {n975:?}; 10^4 replicates in {:.1}s",
            start.elapsed().as_secs_f64()
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_6_bayes_dominates_and_schemes_agree() {
    let start = Instant::now();
    let cohort = reference_cohort();
    let methods = parse_methods(
        "bayes,pass@2,pass@4,pass@8,naive^2,naive^4,naive^8,gpass@2:0.5,gpass@4:0.5,gpass@8:0.5,mgpass@2,mgpass@4,mgpass@8",
    )
    .unwrap();
    let curves = fresh_tau_curves(&cohort, &methods, 40, 1000, 7).unwrap();
    let bayes = &curves[0];
    let mut worst_margin = f64::INFINITY;
    let mut worst_at = String::new();
    for curve in &curves[1..] {
        for n in 4..=40 {
            let (Some(b), Some(o)) = (bayes.at(n), curve.at(n)) else { continue };
            let margin = b.mean - o.mean;
            if margin < worst_margin {
                worst_margin = margin;
                worst_at = format!("{} at N={n}", curve.method);
            }
        }
    }
    let dominates = worst_margin > 0.0;

    let comparisons = compare_schemes(&cohort, &methods, 40, 1000, 10, 7).unwrap();
    let mut violations = Vec::new();
    let mut worst_ratio = 0.0f64;
    for cmp in &comparisons {
        for g in &cmp.gaps {
            let ratio = if g.stderr > 0.0 { g.diff.abs() / g.stderr } else if g.diff == 0.0 { 0.0 } else { f64::INFINITY };
            worst_ratio = worst_ratio.max(ratio);
            if !g.within(3.0) {
                violations.push(format!("{}@{}", cmp.method, g.n));
            }
        }
    }
    let agree = violations.is_empty();
    let secs = start.elapsed().as_secs_f64();
    let pass = dominates && agree && secs < 600.0;
    report(
        6,
        pass,
        &format!(
            "Bayes tau@4 = {:.4}, tau@40 = {:.4}; smallest Bayes margin {worst_margin:+.4} ({worst_at}); \
             col vs row: {} of {} points beyond 3 se (max |diff|/se = {worst_ratio:.2}{}); {secs:.0}s",
            bayes.at(4).unwrap().mean,
            bayes.at(40).unwrap().mean,
            violations.len(),
            comparisons.iter().map(|c| c.gaps.len()).sum::<usize>(),
            if violations.is_empty() { String::new() } else { format!(": {}", violations.join(" ")) },
        ),
    );
    assert!(pass);
}

#[test]
fn criterion_7_ranking_confidence_calibration() {
    let r95 = ranking_confidence(1.645).unwrap();
    let r975 = ranking_confidence(1.96).unwrap();
    let pass = (0.9499..=0.9501).contains(&r95) && (0.9749..=0.9751).contains(&r975);
    report(7, pass, &format!("rho(1.645) = {r95:.6}; rho(1.96) = {r975:.6}"));
    assert!(pass);
}

/// Model j answers exactly its first j questions, always.
fn separated_cohort() -> Vec<CoinModel> {
    (1..=5)
        .map(|j| CoinModel::new(format!("S{j}"), (0..6).map(|q| if q < j { 1.0 } else { 0.0 }).collect()).unwrap())
        .collect()
}

fn cohort_from(coins: &[CoinModel], n: usize, seed: u64) -> Cohort {
    let matrices = sample_cohort(coins, n, seed).unwrap();
    Cohort::new(coins.iter().map(|c| c.model_id().to_string()).collect(), matrices).unwrap()
}

#[test]
fn criterion_8_convergence_machinery() {
    let methods = parse_methods("bayes,avg,pass@1,mgpass@2").unwrap();
    let separated = cohort_from(&separated_cohort(), 12, 3);
    let mut point_mass = true;
    for scheme in [Scheme::ColumnWise, Scheme::RowWise] {
        let plan = ResamplePlan::new(scheme, 500, 8, 12).unwrap();
        for d in convergence_distributions(&separated, &methods[..3], &plan, None).unwrap() {
            point_mass &= d.counts[0] == 500 && d.censored == 0 && d.pmf()[0] == 1.0;
        }
    }

    let mut conserved = true;
    let mut cdf_exact = true;
    let mut runs = 0;
    let fixture = reference_cohort();
    for (seed, scheme) in [(1, Scheme::RowWise), (2, Scheme::ColumnWise), (3, Scheme::RowWise)] {
        let cohort = cohort_from(&fixture, 16, seed);
        let plan = ResamplePlan::new(scheme, 300, seed, 16).unwrap();
        for ci in [None, Some(1.645)] {
            for d in convergence_distributions(&cohort, &methods, &plan, ci).unwrap() {
                runs += 1;
                conserved &= d.is_conserved() && d.replicates == 300;
                let (pmf, cdf) = (d.pmf(), d.cdf());
                let mut acc = 0.0;
                for (p, c) in pmf.iter().zip(&cdf) {
                    acc += p;
                    cdf_exact &= acc == *c;
                }
                let total = cdf.last().unwrap() + d.censored_mass();
                conserved &= (total - 1.0).abs() < 1e-12;
            }
        }
    }
    let pass = point_mass && conserved && cdf_exact;
    report(
        8,
        pass,
        &format!("separated cohort point mass at n=1: {point_mass}; mass conserved on {runs} runs: {conserved}; cdf = running pmf sum: {cdf_exact}"),
    );
    assert!(pass);
}

#[test]
fn criterion_9_rubric_totality_and_exact_match_bridge() {
    let lattice = variable_lattice();
    let mut total = true;
    let mut invalid_zero = true;
    for name in builtin_names() {
        let schema = Schema::builtin(name).unwrap();
        total &= schema.check_total().is_ok();
        for v in &lattice {
            match schema.classify(v) {
                Ok(c) => invalid_zero &= (c == 0) == v.invalid,
                Err(_) => total = false,
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let (m, n) = (25, 12);
    let mut records = Vec::new();
    let mut rows = vec![vec![0i64; n]; m];
    for (q, row) in rows.iter_mut().enumerate() {
        for (t, cell) in row.iter_mut().enumerate() {
            let correct = rng.random_bool(0.6);
            *cell = i64::from(correct);
            records.push(SignalRecord {
                question_id: format!("q{q}"),
                trial: t as u64,
                signals: AttemptSignals {
                    completion_bpt: rng.random_range(0.2..2.0),
                    prompt_bpt: rng.random_range(0.5..3.0),
                    token_ratio: rng.random_range(0.01..0.5),
                    ..AttemptSignals::binary(correct)
                },
                verifier_defaulted: true,
            });
        }
    }
    let binary = validate_matrix(&rows, 1).unwrap();
    let mu_bin = evaluate_performance(&binary, &PriorData::Uniform, &WeightVector::binary()).unwrap().mu;
    let schema = Schema::builtin("exact-match").unwrap();
    let (three, _) = build_matrix(&records, &schema).unwrap();
    let mu_em = evaluate_performance(&three, &PriorData::Uniform, schema.weights()).unwrap().mu;
    // μ = A + N/(1+C+N)·a at C = 1 (weights 0,1) and C = 2 (weights 0,0,1), same a.
    let nf = n as f64;
    let a = (mu_bin - 1.0 / (2.0 + nf)) * (2.0 + nf) / nf;
    let predicted = 1.0 / (3.0 + nf) + nf / (3.0 + nf) * a;
    let bridge_err = (mu_em - predicted).abs();

    let pass = total && invalid_zero && bridge_err <= 1e-12;
    report(
        9,
        pass,
        &format!(
            "12 schemata total over {} lattice points: {total}; invalid => 0: {invalid_zero}; exact-match bridge err {bridge_err:.3e}",
            lattice.len()
        ),
    );
    assert!(pass);
}
