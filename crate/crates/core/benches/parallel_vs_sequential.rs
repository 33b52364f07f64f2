use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use pipette_core::bench::{run_benchmark_with, BenchConfig};
use pipette_core::par::{map_with, Execution};
use pipette_core::{job_distance_matrix_for, jobs_of, solve, PlateFormat, SolveBudget};

fn grid(c: &mut Criterion) {
    let p96 = PlateFormat::named(96).unwrap();
    let mut cfg = BenchConfig::new(p96, p96, 2);
    cfg.replicates = 2;
    cfg.budget = SolveBudget::Iterations(200_000);

    let mut group = c.benchmark_group("bench_grid");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| run_benchmark_with(&cfg, exec).unwrap())
        });
    }
    group.finish();
}

fn portfolio(c: &mut Criterion) {
    let p96 = PlateFormat::named(96).unwrap();
    let task = pipette_core::bench::random_task(p96, p96, 480, 1).unwrap();
    let jobs = jobs_of(&task);
    let d = job_distance_matrix_for(&jobs, &Default::default());
    let seeds: Vec<u64> = (0..4).collect();

    let mut group = c.benchmark_group("solver_seeds");
    group.sample_size(10);
    for exec in [Execution::Sequential, Execution::Parallel] {
        group.bench_with_input(BenchmarkId::from_parameter(format!("{exec:?}")), &exec, |b, &exec| {
            b.iter(|| {
                map_with(exec, seeds.clone(), |s| {
                    solve(&d, 8, SolveBudget::Iterations(500_000), s).unwrap().objective
                })
            })
        });
    }
    group.finish();
}

criterion_group!(benches, grid, portfolio);
criterion_main!(benches);
