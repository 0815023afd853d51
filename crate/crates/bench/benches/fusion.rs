use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use mvfuse_core::datagen::generate_blobs;
use mvfuse_core::fusion::{assemble_a_qp, assemble_alpha_qp, learn_consistent_graph, update_s};
use mvfuse_core::graphs::{build_mvdr, build_shared_knn, gaussian_kernel, normalize_knn_distances, row_normalize, Bandwidth};
use mvfuse_core::pipeline::{run, FusionMode, PipelineConfig};
use mvfuse_core::qpsolvers::{afw_solve, dca_solve};
use mvfuse_core::spectral::{spectral_cluster, KMeansConfig};
use mvfuse_core::{FusionParams, Metric, MultiViewDenseGraph, ViewInput};
use ndarray::Array1;

fn views(n: usize, v: usize) -> Vec<ViewInput> {
    (0..v)
        .map(|i| ViewInput::Features(generate_blobs(n, 5, 8, 6.0, i as u64).unwrap().0))
        .collect()
}

fn similarity_mvdr(n: usize, v: usize) -> MultiViewDenseGraph {
    let graphs: Vec<_> = build_shared_knn(&views(n, v), 6, Metric::Euclidean)
        .unwrap()
        .iter()
        .map(|g| gaussian_kernel(&normalize_knn_distances(g).unwrap(), Bandwidth::Mean).unwrap())
        .collect();
    build_mvdr(&graphs).unwrap()
}

fn knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("shared_knn");
    for n in [500, 1000, 2000] {
        let input = views(n, 3);
        group.bench_with_input(BenchmarkId::from_parameter(n), &input, |b, input| {
            b.iter(|| build_shared_knn(black_box(input), 6, Metric::Euclidean).unwrap())
        });
    }
    group.finish();
}

fn consistent_graph(c: &mut Criterion) {
    let mut group = c.benchmark_group("learn_consistent_graph");
    group.sample_size(20);
    let params = FusionParams {
        rel_tol: 0.0,
        max_outer: 10,
        ..FusionParams::default()
    };
    for (n, v) in [(1000, 4), (2000, 4), (2000, 8)] {
        let mv = similarity_mvdr(n, v);
        group.bench_with_input(BenchmarkId::new(format!("v{v}"), n), &mv, |b, mv| {
            b.iter(|| learn_consistent_graph(black_box(mv), &params).unwrap())
        });
    }
    group.finish();
}

fn subproblems(c: &mut Criterion) {
    let mv = similarity_mvdr(2000, 4);
    let w = row_normalize(&mv).unwrap().into_parts().1;
    let params = FusionParams::default();
    let alpha = Array1::from_elem(4, 0.25);
    let s = update_s(&w, alpha.view(), Array1::ones(4).view()).unwrap();

    let qp = assemble_alpha_qp(&w, &w, s.view(), &params).unwrap();
    c.bench_function("afw_solve/v4", |b| {
        b.iter(|| afw_solve(black_box(&qp), alpha.view(), 1e-8, 1000).unwrap())
    });
    let batch = assemble_a_qp(&w, alpha.view(), s.view(), &params).unwrap();
    c.bench_function("dca_solve/v4", |b| b.iter(|| dca_solve(black_box(&batch), &w, 3).unwrap()));
}

fn clustering(c: &mut Criterion) {
    let mut group = c.benchmark_group("pipeline");
    group.sample_size(10);
    let input = views(1000, 3);
    for mode in [FusionMode::Sgf, FusionMode::Dgf] {
        let cfg = PipelineConfig::new(mode, 5);
        group.bench_function(format!("{mode:?}/1000"), |b| b.iter(|| run(black_box(&input), &cfg).unwrap()));
    }
    let out = run(&input, &PipelineConfig::new(FusionMode::Sgf, 5)).unwrap();
    group.bench_function("spectral_cluster/1000", |b| {
        b.iter(|| spectral_cluster(black_box(&out.fused), 5, KMeansConfig::default(), 0).unwrap())
    });
    group.finish();
}

criterion_group!(benches, knn, consistent_graph, subproblems, clustering);
criterion_main!(benches);
