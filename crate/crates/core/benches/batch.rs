use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use caws::batch::{map_indexed, map_indexed_sequential, run_batch, run_batch_sequential, seed_sweep};
use caws::harness::{ClusterConfig, ScenarioConfig, TrafficItem};
use caws::rca::{rca_transform, BitVector};

fn involution_trial(i: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(i as u64);
    let key = BitVector::from_bits((0..64).map(|_| rng.gen::<bool>()));
    let payload = BitVector::from_bits((0..1024).map(|_| rng.gen::<bool>()));
    let once = rca_transform(&key, &payload).unwrap();
    rca_transform(&key, &once).unwrap() == payload
}

fn transform_trials(c: &mut Criterion) {
    let mut g = c.benchmark_group("transform_trials");
    for n in [1_000, 10_000] {
        g.bench_with_input(BenchmarkId::new("parallel", n), &n, |b, &n| {
            b.iter(|| map_indexed(n, involution_trial))
        });
        g.bench_with_input(BenchmarkId::new("sequential", n), &n, |b, &n| {
            b.iter(|| map_indexed_sequential(n, involution_trial))
        });
    }
    g.finish();
}

fn scenario_runs(c: &mut Criterion) {
    let mut base = ScenarioConfig::new(0, 300, vec![ClusterConfig::new(1, 8), ClusterConfig::new(2, 8)]);
    base.traffic = (0..50)
        .map(|i| TrafficItem { time: 10 + i * 5, src: 1000 + (i % 8) as u16, dst: 1008 + (i % 8) as u16, payload_len: Some(64), payload_hex: None })
        .collect();
    let configs = seed_sweep(&base, 0..64);
    let mut g = c.benchmark_group("scenario_runs");
    g.sample_size(10);
    g.bench_function("parallel", |b| b.iter(|| run_batch(&configs)));
    g.bench_function("sequential", |b| b.iter(|| run_batch_sequential(&configs)));
    g.finish();
}

criterion_group!(benches, transform_trials, scenario_runs);
criterion_main!(benches);
