use std::hint::black_box;

use criterion::{criterion_group, criterion_main, Criterion};
use cphase_core::harness::{run_campaign_with, CampaignConfig, Execution};

fn campaign(c: &mut Criterion) {
    let config = CampaignConfig { n_drops: 32, ues_per_drop: 100, ..Default::default() };
    let mut group = c.benchmark_group("campaign_32x100");
    group.sample_size(20);
    group.bench_function("sequential", |b| {
        b.iter(|| run_campaign_with(black_box(&config), Execution::Sequential).unwrap())
    });
    group.bench_function("parallel", |b| {
        b.iter(|| run_campaign_with(black_box(&config), Execution::Parallel).unwrap())
    });
    group.finish();
}

criterion_group!(benches, campaign);
criterion_main!(benches);
