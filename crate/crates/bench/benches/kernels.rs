use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use spfq_bench::{neuron_instance, weights};
use spfq_core::linalg::{projection_product_norm, ProjectionProduct};
use spfq_core::{
    quantize_layer, quantize_neuron_fused, solve_min_inf, Alphabet, QuantConfig, RandomStream,
};

fn fused_neuron(c: &mut Criterion) {
    let mut group = c.benchmark_group("fused_neuron");
    let a = Alphabet::finite(0.1, 8).unwrap();
    for n in [256, 1024] {
        let (x, xt, w) = neuron_instance(16, n, 0.1, 1);
        group.bench_with_input(BenchmarkId::from_parameter(n), &n, |b, _| {
            b.iter(|| quantize_neuron_fused(&x, &xt, &w, &a, &mut RandomStream::new(0, 0)).unwrap())
        });
    }
    group.finish();
}

fn layer(c: &mut Criterion) {
    let (x, xt, _) = neuron_instance(32, 256, 0.1, 2);
    let w = weights(256, 64, 2);
    let cfg = QuantConfig::default();
    c.bench_function("layer_fused_256x64", |b| {
        b.iter(|| quantize_layer(black_box(&x), &xt, &w, &cfg, 0).unwrap())
    });
}

fn min_inf(c: &mut Criterion) {
    let (x, _, w) = neuron_instance(16, 256, 0.0, 3);
    let rhs = x.matvec(&w).unwrap();
    c.bench_function("min_inf_16x256", |b| {
        b.iter(|| solve_min_inf(&x, black_box(&rhs), None).unwrap())
    });
}

fn projection_norm(c: &mut Criterion) {
    let (x, _, _) = neuron_instance(8, 512, 0.0, 4);
    let pp = ProjectionProduct::from_matrix_columns(&x).unwrap();
    c.bench_function("projection_norm_8x512", |b| {
        b.iter(|| projection_product_norm(black_box(&pp), 1000, 1e-12))
    });
}

criterion_group!(benches, fused_neuron, layer, min_inf, projection_norm);
criterion_main!(benches);
