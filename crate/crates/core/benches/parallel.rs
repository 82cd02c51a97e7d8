use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use privrank::harness::{run_experiment_with, ExperimentConfig, Model, ProfileSpec};
use privrank::oracle::opt_bruteforce_with;
use privrank::par::Execution;
use privrank::ranking::PairwiseWeights;

const MODES: [(&str, Execution); 2] = [("sequential", Execution::Sequential), ("parallel", Execution::Parallel)];

fn tied_weights(m: usize) -> PairwiseWeights {
    // every pair at 1/2 except a few, so the search visits many near-optimal branches
    PairwiseWeights::from_upper(m, |i, j| if (i + j) % 4 == 0 { 0.6 } else { 0.5 })
}

fn exact_search(c: &mut Criterion) {
    let mut group = c.benchmark_group("opt_bruteforce");
    group.sample_size(10);
    for m in [8usize, 9] {
        let w = tied_weights(m);
        for (name, exec) in MODES {
            group.bench_with_input(BenchmarkId::new(name, m), &w, |b, w| {
                b.iter(|| opt_bruteforce_with(black_box(w), exec).unwrap())
            });
        }
    }
    group.finish();
}

fn experiment_sweep(c: &mut Criterion) {
    let config = ExperimentConfig {
        m: 6,
        n_grid: vec![500, 2000],
        epsilon_grid: vec![1.0],
        delta: 0.0,
        model: Model::Local,
        algorithms: vec!["ldpkwiksort".parse().unwrap(), "localnoiseall".parse().unwrap()],
        mechanism: None,
        base: None,
        trials: 16,
        budget_constant: None,
        seed: 1,
        output: None,
        profile: ProfileSpec::Uniform,
        noiseless: false,
    };
    let mut group = c.benchmark_group("run_experiment");
    group.sample_size(10);
    for (name, exec) in MODES {
        group.bench_function(name, |b| b.iter(|| run_experiment_with(black_box(&config), exec).unwrap()));
    }
    group.finish();
}

criterion_group!(benches, exact_search, experiment_sweep);
criterion_main!(benches);
