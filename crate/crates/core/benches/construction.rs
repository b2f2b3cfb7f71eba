//! Compare the data-parallel and sequential builds:
//!
//!     cargo bench -p polarpo --no-default-features -- --save-baseline seq
//!     cargo bench -p polarpo -- --baseline seq

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use polarpo::construction::{gamma_sweep_rate, ConstructOptions};
use polarpo::dimension_reduction::{dr_update, DrConfig};
use polarpo::order::{counting_channels, po_relation_matrix, transitive_closure};
use polarpo::par::is_parallel;
use polarpo::reliability::{bec_bhattacharyya, ga_awgn_means, rank_channels, ChannelModel};
use polarpo::construct;

fn mode() -> &'static str {
    if is_parallel() {
        "par"
    } else {
        "seq"
    }
}

fn relation_matrix(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("po_relation_matrix/{}", mode()));
    group.sample_size(10);
    for n in [8u32, 10, 11] {
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, &n| {
            b.iter(|| po_relation_matrix(black_box(n)).unwrap())
        });
    }
    group.finish();
}

fn counting(c: &mut Criterion) {
    let m = po_relation_matrix(10).unwrap();
    c.bench_function(&format!("counting_channels/{}/10", mode()), |b| {
        b.iter(|| counting_channels(black_box(&m)))
    });
}

fn reliability(c: &mut Criterion) {
    let mut group = c.benchmark_group(format!("reliability/{}", mode()));
    group.bench_function("bec_n12", |b| b.iter(|| bec_bhattacharyya(12, black_box(0.5))));
    group.bench_function("ga_n10", |b| b.iter(|| ga_awgn_means(10, black_box(1.0))));
    group.finish();
}

fn dimension_reduction(c: &mut Criterion) {
    let po = po_relation_matrix(10).unwrap();
    let ranking = rank_channels(ChannelModel::awgn(1.0).unwrap(), 7).unwrap();
    let cfg = DrConfig::new(10, ranking).unwrap();
    let mut group = c.benchmark_group(format!("dr_update/{}", mode()));
    group.sample_size(10);
    group.bench_function("n10_nu7", |b| {
        b.iter(|| {
            let mut m = po.clone();
            dr_update(&mut m, &cfg).unwrap();
            m
        })
    });
    let mut with_dr = po.clone();
    dr_update(&mut with_dr, &cfg).unwrap();
    group.bench_function("closure_n10", |b| {
        b.iter(|| transitive_closure(black_box(&with_dr)).unwrap())
    });
    group.finish();
}

fn pipeline(c: &mut Criterion) {
    let model = ChannelModel::awgn(1.0).unwrap();
    let rates: Vec<f64> = (1..20).map(|k| k as f64 / 20.0).collect();
    let mut group = c.benchmark_group(format!("pipeline/{}", mode()));
    group.sample_size(10);
    group.bench_function("construct_n10_dr", |b| {
        let opts = ConstructOptions {
            use_dr: true,
            ..Default::default()
        };
        b.iter(|| construct(10, 0.5, Some(model), &opts).unwrap())
    });
    group.bench_function("rate_sweep_n9_dr", |b| {
        b.iter(|| gamma_sweep_rate(9, Some(model), true, &rates).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    relation_matrix,
    counting,
    reliability,
    dimension_reduction,
    pipeline
);
criterion_main!(benches);
