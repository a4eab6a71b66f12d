// SPDX-License-Identifier: MIT OR Apache-2.0

use std::collections::BTreeMap;
use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;

use chronosteer::numerics::{isomap, pca_fit, procrustes};
use chronosteer::steer::apply_intervention;
use chronosteer::{
    EraLabel, HookSpec, InterventionConfig, Language, Method, SteerVector, ToyModel, ToyModelConfig,
};

fn gaussian(rng: &mut Xoshiro256PlusPlus, n: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, d, |_, _| rng.sample(StandardNormal))
}

fn bench_pca(c: &mut Criterion) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(1);
    let mut g = c.benchmark_group("pca_fit");
    for (n, d) in [(4, 256), (64, 256), (256, 1024)] {
        let rows = gaussian(&mut rng, n, d);
        g.bench_with_input(
            BenchmarkId::from_parameter(format!("{n}x{d}")),
            &rows,
            |b, rows| b.iter(|| pca_fit(black_box(rows), 3).unwrap()),
        );
    }
    g.finish();
}

fn bench_procrustes(c: &mut Criterion) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(2);
    let mut g = c.benchmark_group("procrustes");
    for d in [32, 256] {
        let x = gaussian(&mut rng, 4, d);
        let y = gaussian(&mut rng, 4, d);
        g.bench_function(BenchmarkId::from_parameter(d), |b| {
            b.iter(|| procrustes(black_box(&x), black_box(&y)).unwrap())
        });
    }
    g.finish();
}

fn bench_isomap(c: &mut Criterion) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(3);
    let mut g = c.benchmark_group("isomap");
    for n in [64, 256] {
        let rows = gaussian(&mut rng, n, 32);
        g.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| isomap(black_box(&rows), 8, 2).unwrap())
        });
    }
    g.finish();
}

fn bench_intervention(c: &mut Criterion) {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(4);
    let d = 4096;
    let h = DVector::from_fn(d, |_, _| rng.sample(StandardNormal));
    let v = SteerVector::new(
        0,
        EraLabel::Old,
        Language::En,
        Method::Caa,
        DVector::from_fn(d, |_, _| rng.sample(StandardNormal)),
    );
    c.bench_function("apply_intervention/4096", |b| {
        b.iter(|| apply_intervention(black_box(&h), black_box(&v), 0.1).unwrap())
    });
}

fn bench_forward(c: &mut Criterion) {
    let cfg = ToyModelConfig::default();
    let model = ToyModel::new(cfg).unwrap();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(5);
    let tokens: Vec<u8> = (0..64).map(|_| rng.random_range(b'a'..=b'z')).collect();
    let vectors: BTreeMap<usize, SteerVector> = (0..cfg.layers)
        .map(|l| {
            let v = DVector::from_fn(cfg.dim, |_, _| rng.sample(StandardNormal));
            (
                l,
                SteerVector::new(l, EraLabel::Old, Language::En, Method::Caa, v),
            )
        })
        .collect();
    let config = InterventionConfig::new(0.1, (0..cfg.layers).collect()).unwrap();
    let hook = HookSpec::vectors(&config, vectors);
    let mut g = c.benchmark_group("toy_forward/64");
    g.bench_function("plain", |b| {
        b.iter(|| model.forward(black_box(&tokens), None).unwrap())
    });
    g.bench_function("steered", |b| {
        b.iter(|| model.forward(black_box(&tokens), Some(&hook)).unwrap())
    });
    g.finish();
}

criterion_group!(
    benches,
    bench_pca,
    bench_procrustes,
    bench_isomap,
    bench_intervention,
    bench_forward
);
criterion_main!(benches);
