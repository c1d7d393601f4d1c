use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ndarray::Array2;
use rand::Rng as _;

use techscape::corpus::{neighborhoods, DirectionPolicy, DomainGraph};
use techscape::graphembed::{forward, SageConfig, SageModel, SamplingMode};
use techscape::landscape::{fit_surface, SurfaceConfig};
use techscape::project::{joint_probabilities, kl_gradient};
use techscape::textembed::SemanticFeatures;
use techscape::{seeded_rng, synth};

fn pools() -> [(&'static str, rayon::ThreadPool); 2] {
    let threads = std::thread::available_parallelism().map_or(1, usize::from);
    [
        (
            "sequential",
            rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap(),
        ),
        (
            "parallel",
            rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap(),
        ),
    ]
}

fn tsne_gradient(c: &mut Criterion) {
    let (points, _) = synth::gaussian_clusters(4, 150, 32, 8.0, 1);
    let p = joint_probabilities(&points, 30.0);
    let mut rng = seeded_rng(2);
    let y: Vec<[f64; 2]> = (0..points.len())
        .map(|_| [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
        .collect();
    let mut group = c.benchmark_group("kl_gradient_600");
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| black_box(kl_gradient(&p, &y))))
        });
    }
    group.finish();
}

fn surface(c: &mut Criterion) {
    let mut rng = seeded_rng(3);
    let pts: Vec<[f64; 2]> = (0..1000)
        .map(|_| [rng.random_range(-30.0..30.0), rng.random_range(-30.0..30.0)])
        .collect();
    let rates: Vec<f64> = pts.iter().map(|p| 40.0 - (p[0] * p[0] + p[1] * p[1]).sqrt()).collect();
    let cfg = SurfaceConfig::default();
    let mut group = c.benchmark_group("fit_surface_1000");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| b.iter(|| black_box(fit_surface(&pts, &rates, &cfg).unwrap())))
        });
    }
    group.finish();
}

fn sage_forward(c: &mut Criterion) {
    let (edges, _) = synth::two_block_graph(1000, 0.02, 0.002, 4);
    let graph = DomainGraph::from_edges(1000, &edges);
    let nb = neighborhoods(&graph, DirectionPolicy::Undirected);
    let mut rng = seeded_rng(5);
    let features = SemanticFeatures {
        codes: graph.nodes.clone(),
        vectors: Array2::from_shape_fn((1000, 64), |_| rng.random_range(-1.0..1.0)),
    };
    let cfg = SageConfig::default();
    let model = SageModel::init(64, &cfg, &mut rng);
    let mut group = c.benchmark_group("sage_forward_1000");
    group.sample_size(20);
    for (name, pool) in pools() {
        group.bench_function(BenchmarkId::from_parameter(name), |b| {
            pool.install(|| {
                b.iter(|| black_box(forward(&nb, &features, &model, &cfg, SamplingMode::Frozen, 0).unwrap()))
            })
        });
    }
    group.finish();
}

criterion_group!(benches, tsne_gradient, surface, sage_forward);
criterion_main!(benches);
