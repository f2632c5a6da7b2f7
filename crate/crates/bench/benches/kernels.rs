use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

use subcorr::experiments::image_2d;
use subcorr::prox::chambolle_project;
use subcorr::solvers::{inner_subspace_min, SubspaceState};
use subcorr::{sequential_solve, ChambolleConfig, GridFunction, SolverConfig};
use subcorr_bench::{gaussian_200, inpainting_64};

fn chambolle_2d(c: &mut Criterion) {
    let im = image_2d(64, 64, 8, 0.05, 1).unwrap();
    let mut group = c.benchmark_group("chambolle_64x64");
    for tol in [1e-2, 1e-3] {
        let cfg = ChambolleConfig { tol, ..Default::default() };
        group.bench_with_input(BenchmarkId::from_parameter(tol), &cfg, |b, cfg| {
            b.iter(|| chambolle_project(black_box(&im.image), 1e-2, cfg, None).unwrap())
        });
    }
    group.finish();
}

fn stripe_inner_step(c: &mut Criterion) {
    let p = inpainting_64(2);
    let cfg = SolverConfig::tv();
    let u = GridFunction::zeros(p.domain());
    c.bench_function("stripe_inner_step_64x64", |b| {
        b.iter(|| {
            let mut st = SubspaceState::default();
            inner_subspace_min(&p, &cfg, black_box(&u), 0, 1, &mut st).unwrap()
        })
    });
}

fn l1_sweep(c: &mut Criterion) {
    let mut group = c.benchmark_group("l1_10_outer");
    group.sample_size(10);
    for (count, inner) in [(2, 2), (4, 4), (10, 40), (50, 80)] {
        let p = gaussian_200(count, 3);
        let mut cfg = SolverConfig::l1();
        cfg.inner_iters = vec![inner];
        cfg.max_outer = 10;
        group.bench_with_input(
            BenchmarkId::from_parameter(format!("{count}x{inner}")),
            &cfg,
            |b, cfg| b.iter(|| sequential_solve(&p, cfg).unwrap()),
        );
    }
    group.finish();
}

criterion_group!(benches, chambolle_2d, stripe_inner_step, l1_sweep);
criterion_main!(benches);
