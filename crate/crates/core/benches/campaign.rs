//! Sequential versus rayon-parallel execution of a BER campaign, plus the
//! per-iteration cost of the phase optimizer.
//!
//! Build with `--no-default-features` to confirm that the parallel entries
//! fall back to sequential execution.

use std::hint::black_box;
use std::time::Duration;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ris_atomic::ris_opt::{build_rank_one_cache, EvalCounter, PhaseObjective, RisPhases};
use ris_atomic::seed::rng_from_seed;
use ris_atomic::sim::{draw_realization, run_ber, SimConfig};
use ris_atomic::Execution;

fn campaign_config() -> SimConfig {
    let mut cfg = SimConfig::paper_default();
    cfg.campaign.eb_n0_db = vec![-29.0, -23.0];
    cfg.campaign.trials_per_point = 32;
    cfg.campaign.symbols_per_channel = 50;
    cfg.campaign.target_errors = 0;
    cfg
}

fn ber_execution(c: &mut Criterion) {
    let cfg = campaign_config();
    let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    let mut group = c.benchmark_group("run_ber");
    group.sample_size(10).measurement_time(Duration::from_secs(10));
    let modes = [
        ("sequential", Execution::Sequential),
        ("parallel", Execution::Parallel { threads }),
        ("auto", Execution::Auto),
    ];
    for (name, exec) in modes {
        group.bench_with_input(BenchmarkId::new(name, threads), &exec, |b, &exec| {
            b.iter(|| black_box(run_ber(&cfg, exec).unwrap()))
        });
    }
    group.finish();
}

fn gradient_cost(c: &mut Criterion) {
    let mut group = c.benchmark_group("objective_and_gradient");
    for n in [50, 100, 200, 400] {
        let mut cfg = SimConfig::new(36, n, 3, 4);
        cfg.campaign.seed = 3;
        let real = draw_realization(&cfg, 0).unwrap();
        let cache = build_rank_one_cache(&real.referenced).unwrap();
        let obj = PhaseObjective::new(&cache, &real.referenced.h_uv).unwrap();
        let theta = RisPhases::random(n, &mut rng_from_seed(1)).into_vec();
        let mut grad = vec![0.0; n];
        let mut counter = EvalCounter::default();
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| black_box(obj.value_and_gradient(&theta, &mut grad, &mut counter).unwrap()))
        });
    }
    group.finish();
}

criterion_group!(benches, ber_execution, gradient_cost);
criterion_main!(benches);
