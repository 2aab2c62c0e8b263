use criterion::{criterion_group, criterion_main, Criterion};
use qkr_bench::synthetic_family;
use qkr_core::scaling::{collapse, fit_critical, CollapseOptions, CriticalFitOptions};

fn bench_collapse(c: &mut Criterion) {
    let (curves, regimes) = synthetic_family(8);
    c.bench_function("collapse_16_curves", |b| {
        b.iter(|| collapse(&curves, &regimes, 4.0, &CollapseOptions::default()).unwrap())
    });
}

fn bench_critical(c: &mut Criterion) {
    let pts: Vec<(f64, f64)> = (0..16)
        .map(|i| {
            let k = 4.0 + i as f64 / 3.0;
            (k, 1.0 / ((k - 6.6f64).abs().powf(1.6) + 0.1))
        })
        .collect();
    c.bench_function("fit_critical_16", |b| {
        b.iter(|| fit_critical(&pts, &CriticalFitOptions::default()).unwrap())
    });
}

criterion_group!(benches, bench_collapse, bench_critical);
criterion_main!(benches);
