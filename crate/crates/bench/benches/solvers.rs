use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use quorate::chain::{SensorModel, TransitionKernel};
use quorate::detect::{build_exact_tree, build_grid_chain, Horizon, DEFAULT_GRID_CAP};
use quorate::equilibrium::{certify_equilibrium, solve_finite, solve_infinite, DeviationSearch, InfiniteOptions};
use quorate::games::SimpleGame;

fn sensor(id: usize, q: f64, hit: f64) -> SensorModel {
    SensorModel::new(
        id,
        TransitionKernel::repeated_row(&[0.5, 0.5]).unwrap(),
        TransitionKernel::repeated_row(&[1.0 - hit, hit]).unwrap(),
        q,
        0,
    )
    .unwrap()
}

fn trio() -> Vec<SensorModel> {
    vec![sensor(1, 0.3, 0.9), sensor(2, 0.25, 0.8).with_window(1, 0), sensor(3, 0.35, 0.85).with_window(0, 1)]
}

fn tree_solve(c: &mut Criterion) {
    let models = trio();
    let game = SimpleGame::weighted(&[1, 1, 1], 2).unwrap();
    let mut group = c.benchmark_group("tree_majority3");
    for horizon in [2usize, 3, 4] {
        group.bench_with_input(BenchmarkId::new("build", horizon), &horizon, |b, &n| {
            b.iter(|| build_exact_tree(black_box(&models), n, 20.0).unwrap())
        });
        let tree = build_exact_tree(&models, horizon, 20.0).unwrap();
        group.bench_with_input(BenchmarkId::new("solve", horizon), &horizon, |b, _| {
            b.iter(|| solve_finite(black_box(tree.instance()), &game).unwrap())
        });
    }
    group.finish();
}

fn grid_solve(c: &mut Criterion) {
    let models = [sensor(1, 0.3, 0.9), sensor(2, 0.25, 0.8)];
    let game = SimpleGame::weighted(&[1, 1], 2).unwrap();
    let mut group = c.benchmark_group("grid_pair");
    group.sample_size(10);
    for bins in [6usize, 11, 16] {
        group.bench_with_input(BenchmarkId::new("build", bins), &bins, |b, &k| {
            b.iter(|| build_grid_chain(black_box(&models), k, Horizon::Infinite, DEFAULT_GRID_CAP).unwrap())
        });
        let grid = build_grid_chain(&models, bins, Horizon::Infinite, DEFAULT_GRID_CAP).unwrap();
        group.bench_with_input(BenchmarkId::new("solve_infinite", bins), &bins, |b, _| {
            b.iter(|| solve_infinite(black_box(grid.instance()), &game, InfiniteOptions::default()).unwrap())
        });
        let finite = build_grid_chain(&models, bins, Horizon::Finite(20), DEFAULT_GRID_CAP).unwrap();
        group.bench_with_input(BenchmarkId::new("solve_finite_20", bins), &bins, |b, _| {
            b.iter(|| solve_finite(black_box(finite.instance()), &game).unwrap())
        });
    }
    group.finish();
}

fn certify(c: &mut Criterion) {
    let models = [sensor(1, 0.3, 0.9), sensor(2, 0.4, 0.7)];
    let game = SimpleGame::weighted(&[1, 1], 1).unwrap();
    let tree = build_exact_tree(&models, 2, 20.0).unwrap();
    let sol = solve_finite(tree.instance(), &game).unwrap();
    c.bench_function("certify_exhaustive_pair_n2", |b| {
        b.iter(|| certify_equilibrium(tree.instance(), &game, &sol.profile, DeviationSearch::Exhaustive { cap_bits: 20 }).unwrap())
    });
}

criterion_group!(benches, tree_solve, grid_solve, certify);
criterion_main!(benches);
