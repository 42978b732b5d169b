use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use privhp::domain::HypercubeDomain;
use privhp::eval::{run_privhp, w1_to_tree, workload};
use privhp::noise::derive_seed;
use privhp::trials::run_trials_sequential;
use privhp::PrivHpConfig;

fn one_trial(config: &PrivHpConfig, points: &[Vec<f64>], domain: &HypercubeDomain, t: usize) -> f64 {
    let cfg = config.clone().with_seed(derive_seed(1, t as u64));
    let tree = run_privhp(&cfg, points).unwrap().tree;
    w1_to_tree(points, &tree, domain, cfg.depth).unwrap().0
}

fn trials(c: &mut Criterion) {
    let n = 20_000;
    let points = workload::zipf_points(n, 1.5, 12, 1, 3).unwrap();
    let domain = HypercubeDomain::new(1).unwrap();
    let config = PrivHpConfig::default_for(n as u64, 1.0, 8, 1).unwrap();

    let mut group = c.benchmark_group("trials");
    group.sample_size(10);
    for count in [8usize, 32] {
        group.bench_with_input(BenchmarkId::new("sequential", count), &count, |b, &count| {
            b.iter(|| run_trials_sequential(count, |t| one_trial(&config, &points, &domain, t)))
        });
        #[cfg(feature = "parallel")]
        group.bench_with_input(BenchmarkId::new("parallel", count), &count, |b, &count| {
            b.iter(|| privhp::trials::run_trials_parallel(count, |t| one_trial(&config, &points, &domain, t)))
        });
    }
    group.finish();
}

criterion_group!(benches, trials);
criterion_main!(benches);
