use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use macrodiv::channel::{BlockageParams, ChannelConfig};
use macrodiv::ofdm::{async_phase_div_outage, OfdmConfig};
use macrodiv::par::{with_exec, Exec};
use macrodiv::schemes::{
    ergodic_estimate, rate_samples, rbar_mc, Sampling, SchemeKind, SchemeSpec,
};
use macrodiv::RngStream;
use std::time::Duration;

const EXECS: [(&str, Exec); 2] = [
    ("sequential", Exec::Sequential),
    ("parallel", Exec::Parallel),
];

fn bench_rbar(c: &mut Criterion) {
    let mut g = c.benchmark_group("rbar_mc");
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, "i=4,n=1e5"), |b| {
            b.iter(|| {
                with_exec(exec, || {
                    rbar_mc(4, 1.0, black_box(100_000), &RngStream::new(1, 0), true)
                })
            })
        });
    }
    g.finish();
}

fn bench_phase_diversity(c: &mut Criterion) {
    let cfg =
        ChannelConfig::new(4, 4.0, BlockageParams::from_blockage_prob(0.2).unwrap(), 64).unwrap();
    let spec = SchemeSpec::new(SchemeKind::PhaseDiversity { k: 64 }, cfg).unwrap();
    let mut g = c.benchmark_group("phase_div_samples");
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, "K=64,n=2e4"), |b| {
            b.iter(|| {
                with_exec(exec, || {
                    rate_samples(&spec, black_box(20_000), &RngStream::new(2, 0)).unwrap()
                })
            })
        });
    }
    g.finish();

    let ncjt = SchemeSpec::new(SchemeKind::Ncjt, cfg).unwrap();
    let mut g = c.benchmark_group("ncjt_ergodic_stratified");
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, "n=1e5"), |b| {
            b.iter(|| {
                with_exec(exec, || {
                    ergodic_estimate(
                        &ncjt,
                        black_box(100_000),
                        &RngStream::new(3, 0),
                        Sampling::StratifiedAlpha,
                    )
                    .unwrap()
                })
            })
        });
    }
    g.finish();
}

fn bench_async_outage(c: &mut Criterion) {
    let ofdm = OfdmConfig::with_prefix(64, 4).unwrap();
    let mut g = c.benchmark_group("async_phase_div_outage");
    for (name, exec) in EXECS {
        g.bench_function(BenchmarkId::new(name, "L=4,K=64,n=1e4"), |b| {
            b.iter(|| {
                with_exec(exec, || {
                    async_phase_div_outage(
                        4,
                        0.2,
                        4.0,
                        &ofdm,
                        black_box(10_000),
                        &RngStream::new(4, 0),
                        true,
                    )
                })
            })
        });
    }
    g.finish();
}

criterion_group!(
    name = estimators;
    config = Criterion::default().sample_size(10).measurement_time(Duration::from_secs(3));
    targets = bench_rbar, bench_phase_diversity, bench_async_outage
);
criterion_main!(estimators);
