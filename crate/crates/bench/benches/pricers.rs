use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use varswap::{discrete_strike, expansion_report, quadrature_strike, SwapSpec};
use varswap_perf::{daily, models};

fn closed_form(c: &mut Criterion) {
    let mut g = c.benchmark_group("closed_form");
    for (name, m) in models() {
        for n in [12u32, 252] {
            let spec = SwapSpec::new(1.0, n, 0.0319).unwrap();
            g.bench_with_input(BenchmarkId::new(name, n), &spec, |b, s| {
                b.iter(|| discrete_strike(black_box(&m), s).unwrap())
            });
        }
    }
    g.finish();
}

fn quadrature(c: &mut Criterion) {
    let mut g = c.benchmark_group("quadrature");
    g.sample_size(10);
    let spec = SwapSpec::new(1.0, 12, 0.0319).unwrap();
    for (name, m) in models() {
        g.bench_function(name, |b| b.iter(|| quadrature_strike(black_box(&m), &spec, 1e-10).unwrap()));
    }
    g.finish();
}

fn expansions(c: &mut Criterion) {
    let spec = daily();
    for (name, m) in models() {
        c.bench_function(&format!("expansion_report/{name}"), |b| {
            b.iter(|| expansion_report(black_box(&m), &spec).unwrap())
        });
    }
}

criterion_group!(benches, closed_form, quadrature, expansions);
criterion_main!(benches);
