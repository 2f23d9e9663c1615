use bayeseval::bootstrap::{convergence_distributions, tau_curves, Cohort, ResamplePlan, Scheme};
use bayeseval::method::parse_methods;
use bayeseval::simulate::{reference_cohort, sample_cohort, separation_experiment};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn fixture(n: usize) -> Cohort {
    let coins = reference_cohort();
    let matrices = sample_cohort(&coins, n, 11).unwrap();
    let ids = coins.iter().map(|c| c.model_id().to_string()).collect();
    Cohort::new(ids, matrices).unwrap()
}

fn bootstrap(c: &mut Criterion) {
    let cohort = fixture(80);
    let mut group = c.benchmark_group("bootstrap");
    group.sample_size(10);
    let bayes = parse_methods("bayes").unwrap();
    for scheme in [Scheme::RowWise, Scheme::ColumnWise] {
        let plan = ResamplePlan::new(scheme, 256, 1, 80).unwrap();
        group.bench_function(format!("convergence bayes 256 reps {scheme}"), |b| {
            b.iter(|| convergence_distributions(black_box(&cohort), &bayes, &plan, None).unwrap())
        });
    }
    let all = parse_methods("bayes,pass@2,pass@4,pass@8,naive^4,gpass@4:0.5,mgpass@4").unwrap();
    let plan = ResamplePlan::new(Scheme::RowWise, 128, 1, 40).unwrap();
    group.bench_function("tau curves 7 methods 128 reps", |b| {
        b.iter(|| tau_curves(black_box(&cohort), &all, &plan).unwrap())
    });
    let coins = reference_cohort();
    group.bench_function("separation 1000 reps N<=400", |b| {
        b.iter(|| separation_experiment(&coins[9], &coins[8], &[80, 200, 400], 1000, 3).unwrap())
    });
    group.finish();
}

criterion_group!(benches, bootstrap);
criterion_main!(benches);
