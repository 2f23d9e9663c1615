use bayeseval::method::Method;
use bayeseval::passk::{mg_pass_at_k, pass_at_k, BinaryTally};
use bayeseval::ranking::kendall_tau_b;
use bayeseval::{evaluate_performance, PriorData, WeightVector};
use bayeseval_bench::random_matrix;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn bayes(c: &mut Criterion) {
    let mut group = c.benchmark_group("bayes");
    for &(m, n, cat) in &[(30, 80, 1), (500, 16, 1), (500, 16, 4), (5000, 8, 3)] {
        let matrix = random_matrix(m, n, cat, 1);
        let weights = WeightVector::linear(cat);
        group.bench_with_input(BenchmarkId::from_parameter(format!("{m}x{n}xC{cat}")), &matrix, |b, x| {
            b.iter(|| evaluate_performance(black_box(x), &PriorData::Uniform, &weights).unwrap())
        });
    }
    group.finish();
}

fn pass_family(c: &mut Criterion) {
    let matrix = random_matrix(500, 64, 1, 2);
    let tally = BinaryTally::from_matrix(&matrix).unwrap();
    c.bench_function("pass@8 500x64", |b| b.iter(|| pass_at_k(black_box(&tally), 8).unwrap()));
    c.bench_function("mgpass@16 500x64", |b| b.iter(|| mg_pass_at_k(black_box(&tally), 16).unwrap()));
    let big = random_matrix(100, 500, 1, 3);
    let big_tally = BinaryTally::from_matrix(&big).unwrap();
    c.bench_function("pass@32 100x500 (log-gamma)", |b| {
        b.iter(|| pass_at_k(black_box(&big_tally), 32).unwrap())
    });
    let gpass: Method = "gpass@8:1/2".parse().unwrap();
    c.bench_function("gpass@8:1/2 via Method", |b| {
        b.iter(|| gpass.score(black_box(&matrix), &WeightVector::binary()).unwrap())
    });
}

fn kendall(c: &mut Criterion) {
    let a: Vec<u32> = (0..200).map(|i| (i * 37 % 50) as u32).collect();
    let b: Vec<u32> = (0..200).map(|i| (i * 11 % 40) as u32).collect();
    c.bench_function("kendall_tau_b n=200", |bch| bch.iter(|| kendall_tau_b(black_box(&a), black_box(&b)).unwrap()));
}

criterion_group!(benches, bayes, pass_family, kendall);
criterion_main!(benches);
