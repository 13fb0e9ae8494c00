use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use morph_bench::{knapsack, observations, root_instance};
use morph_core::{generalized_median, solve_exact, solve_greedy, synthesize_brute, synthesize_dp, Amount, Metric};

fn synthesis(c: &mut Criterion) {
    let mut g = c.benchmark_group("synthesis");
    for (children, das) in [(4, 4), (6, 5), (7, 6)] {
        let (_, inst) = root_instance(11, children, das);
        let label = format!("{children}x{das}");
        g.bench_with_input(BenchmarkId::new("brute", &label), &inst, |b, i| {
            b.iter(|| synthesize_brute(black_box(i)).unwrap())
        });
        g.bench_with_input(BenchmarkId::new("dp", &label), &inst, |b, i| {
            b.iter(|| synthesize_dp(black_box(i)).unwrap())
        });
    }
    g.finish();
}

fn median(c: &mut Criterion) {
    let mut g = c.benchmark_group("median");
    for (l, eta) in [(3, 4), (4, 6), (5, 8)] {
        let obs = observations(l, eta);
        g.bench_function(format!("P{l}_{eta}"), |b| {
            b.iter(|| generalized_median(black_box(&obs), l, eta, true, Metric::Max).unwrap())
        });
    }
    g.finish();
}

fn mckp(c: &mut Criterion) {
    let mut g = c.benchmark_group("mckp");
    for (groups, items) in [(5, 8), (20, 10)] {
        let inst = knapsack(3, groups, items);
        let budget = Amount::integer(10 * groups as i64);
        g.bench_function(format!("greedy_{groups}x{items}"), |b| {
            b.iter(|| solve_greedy(black_box(&inst), budget).unwrap())
        });
        g.bench_function(format!("exact_{groups}x{items}"), |b| {
            b.iter(|| solve_exact(black_box(&inst), budget))
        });
    }
    g.finish();
}

criterion_group!(benches, synthesis, median, mckp);
criterion_main!(benches);
