use criterion::{criterion_group, criterion_main, Criterion, Throughput};
use varswap::numerics::bessel_ratio;
use varswap::{mc_discrete_strike, HullWhiteParams, McConfig, ModelParams, SwapSpec};
use varswap_perf::{heston_set2, models};

fn strikes(c: &mut Criterion) {
    let mut g = c.benchmark_group("mc_discrete");
    g.sample_size(10);
    let spec = SwapSpec::new(1.0, 12, 0.0319).unwrap();
    let cfg = McConfig::new(20_000, 8, 1);
    g.throughput(Throughput::Elements(cfg.paths * 12 * 8));
    let mut sets = models();
    sets.push(("heston_set2", heston_set2().into()));
    sets.push(("hull_white_flat", ModelParams::HullWhite(HullWhiteParams { mu: 0.0, sigma: 0.0, rho: 0.0, v0: 0.04 })));
    for (name, m) in sets {
        g.bench_function(name, |b| b.iter(|| mc_discrete_strike(&m, &spec, &cfg).unwrap()));
    }
    g.finish();
}

fn bessel(c: &mut Criterion) {
    let mut g = c.benchmark_group("bessel_ratio");
    for (label, z) in [("small", 3.0), ("medium", 25.0), ("large", 800.0)] {
        g.bench_function(label, |b| b.iter(|| bessel_ratio(criterion::black_box(1.45), criterion::black_box(z))));
    }
    g.finish();
}

criterion_group!(benches, strikes, bessel);
criterion_main!(benches);
