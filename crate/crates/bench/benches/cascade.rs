use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use ctl_bench::clustered;
use ctl_core::budget::uniform_default;
use ctl_core::distances::{compute_distance_matrix, DistanceParams};
use ctl_core::graph::{medoid, mst, root_tree};
use ctl_core::{run_cascade, Metric, Refiner};

fn refine(c: &mut Criterion) {
    let tasks = clustered(1, 20, 0);
    let t = &tasks.tasks()[0];
    let refiner = Refiner::with_default_step(&t.x_train, &t.y_train).unwrap();
    let start = nalgebra::DVector::zeros(20);
    c.bench_function("refine/d20_b100", |b| b.iter(|| refiner.refine(black_box(&start), 100).unwrap()));
}

fn distances(c: &mut Criterion) {
    let tasks = clustered(50, 20, 1);
    let mut group = c.benchmark_group("distance_matrix_t50");
    for name in ["gradient", "model", "mmd", "wasserstein", "cka"] {
        let metric: Metric = name.parse().unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(name), &metric, |b, &m| {
            b.iter(|| compute_distance_matrix(&tasks, m, &DistanceParams::default()).unwrap())
        });
    }
    group.finish();
}

fn spanning_tree(c: &mut Criterion) {
    let mut group = c.benchmark_group("mst");
    for t in [50, 200] {
        let tasks = clustered(t, 10, 2);
        let dist = compute_distance_matrix(&tasks, "gradient".parse().unwrap(), &DistanceParams::default()).unwrap();
        group.bench_with_input(BenchmarkId::from_parameter(t), &dist, |b, d| b.iter(|| mst(black_box(d)).unwrap()));
    }
    group.finish();
}

fn cascade(c: &mut Criterion) {
    let tasks = clustered(50, 20, 3);
    let dist = compute_distance_matrix(&tasks, "gradient".parse().unwrap(), &DistanceParams::default()).unwrap();
    let tree = root_tree(&mst(&dist).unwrap(), medoid(&dist), &dist).unwrap();
    let budgets = uniform_default(&tree, 500).unwrap();
    c.bench_function("cascade/t50_b500", |b| b.iter(|| run_cascade(&tasks, &tree, &budgets).unwrap()));
}

criterion_group!(benches, refine, distances, spanning_tree, cascade);
criterion_main!(benches);
