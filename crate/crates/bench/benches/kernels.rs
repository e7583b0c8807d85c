use criterion::{black_box, criterion_group, criterion_main, BenchmarkId, Criterion};
use strongweights_bench::sawtooth;
use strongweights_core::constants::{ap_star_constant, SearchOptions};
use strongweights_core::maximal::{strong_maximal, FieldMode, MaximalFamily};
use strongweights_core::rising_sun::{rising_sun_1d, rising_sun_nd};
use strongweights_core::theorems::{run_campaign, CampaignConfig};

fn ap_constant(c: &mut Criterion) {
    let mut g = c.benchmark_group("ap_star_constant");
    for (dim, cells) in [(1, 16), (1, 64), (2, 4)] {
        let (mu, w) = sawtooth(dim, cells);
        g.bench_with_input(BenchmarkId::new(format!("{dim}d"), cells), &(mu, w), |b, (mu, w)| {
            b.iter(|| ap_star_constant(w, mu, black_box(2.0), &SearchOptions::with_tol(1e-6)).unwrap())
        });
    }
    g.finish();
}

fn maximal_field(c: &mut Criterion) {
    let (mu, w) = sawtooth(1, 8);
    c.bench_function("strong_maximal/1d/depth6", |b| {
        b.iter(|| {
            strong_maximal(w.values(), &mu, 6, FieldMode::Lower, MaximalFamily::Strong, &SearchOptions::default())
                .unwrap()
        })
    });
}

fn rising_sun(c: &mut Criterion) {
    let (mu, w) = sawtooth(1, 256);
    let root = mu.grid().domain();
    c.bench_function("rising_sun_1d/256", |b| b.iter(|| rising_sun_1d(w.values(), &mu, &root, black_box(3.5)).unwrap()));
    let (mu2, w2) = sawtooth(2, 8);
    let root2 = mu2.grid().domain();
    c.bench_function("rising_sun_nd/8x8", |b| b.iter(|| rising_sun_nd(w2.values(), &mu2, &root2, black_box(3.5)).unwrap()));
}

fn campaign(c: &mut Criterion) {
    let config = CampaignConfig { count: 4, dims: vec![1], deterministic: true, ..CampaignConfig::default() };
    let mut g = c.benchmark_group("campaign");
    g.sample_size(10);
    g.bench_function("4x1d", |b| b.iter(|| run_campaign(&config, black_box(1)).unwrap()));
    g.finish();
}

criterion_group!(benches, ap_constant, maximal_field, rising_sun, campaign);
criterion_main!(benches);
