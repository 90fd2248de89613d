use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};

use scimap_bench::{random_graph, random_points};
use scimap_core::atlas::KdTree2;
use scimap_core::citegeom::{rog, FarthestPointIndex};
use scimap_core::clusterer::{build_hierarchy, condense};
use scimap_core::conceptnet::core_numbers;

fn bench_knn(c: &mut Criterion) {
    let mut group = c.benchmark_group("knn");
    for n in [1_000usize, 10_000] {
        let points = random_points(1, n);
        let tree = KdTree2::build(&points);
        group.bench_with_input(BenchmarkId::new("kdtree_query_k20", n), &n, |b, _| {
            let mut i = 0usize;
            b.iter(|| {
                i = (i + 7) % points.len();
                black_box(tree.knn_sq(points[i], 20, Some(i)))
            })
        });
        group.bench_with_input(BenchmarkId::new("kdtree_build", n), &n, |b, _| {
            b.iter(|| black_box(KdTree2::build(&points)))
        });
    }
    group.finish();
}

fn bench_hierarchy(c: &mut Criterion) {
    let mut group = c.benchmark_group("hierarchy");
    group.sample_size(10);
    for n in [500usize, 2_000] {
        let points = random_points(2, n);
        group.bench_with_input(BenchmarkId::new("build_min_samples_10", n), &n, |b, _| {
            b.iter(|| black_box(build_hierarchy(&points, 10).unwrap()))
        });
    }
    let points = random_points(3, 2_000);
    let hierarchy = build_hierarchy(&points, 10).unwrap();
    group.bench_function("condense_2000", |b| {
        b.iter(|| black_box(condense(&hierarchy, 50).unwrap()))
    });
    group.finish();
}

fn bench_kcore(c: &mut Criterion) {
    let mut group = c.benchmark_group("kcore");
    for (n, degree) in [(1_000usize, 8usize), (20_000, 12)] {
        let adjacency = random_graph(4, n, degree);
        group.bench_with_input(
            BenchmarkId::new("core_numbers", format!("{n}x{degree}")),
            &n,
            |b, _| b.iter(|| black_box(core_numbers(&adjacency))),
        );
    }
    group.finish();
}

fn bench_rog(c: &mut Criterion) {
    let mut group = c.benchmark_group("rog");
    let points = random_points(5, 10_000);
    let farthest = FarthestPointIndex::build(&points);
    let citers: Vec<[f64; 2]> = points.iter().take(200).copied().collect();
    group.bench_function("rog_200_citers", |b| {
        b.iter(|| black_box(rog(points[0], &citers).unwrap()))
    });
    group.bench_function("max_distance_hull", |b| {
        let mut i = 0usize;
        b.iter(|| {
            i = (i + 11) % points.len();
            black_box(farthest.max_distance(points[i]))
        })
    });
    group.finish();
}

criterion_group!(benches, bench_knn, bench_hierarchy, bench_kcore, bench_rog);
criterion_main!(benches);
