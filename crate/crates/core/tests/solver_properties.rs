mod oracles;

use proptest::prelude::*;

use oracles::{sup_dist, taut_string};
use subcorr::decomp::{make_index_split, make_random_orthogonal, make_stripes, make_svd_q};
use subcorr::experiments::{gaussian_l1, step_1d};
use subcorr::solvers::{inner_subspace_min, surrogate_energy, SubspaceState};
use subcorr::{
    energy, iterative_threshold_solve, parallel_solve, sequential_solve, Dims, GridFunction, LinearMap, PsiKind,
    SolveProblem, SolverConfig, StripeSpec, Termination,
};

fn denoise(g: Vec<f64>, alpha: f64, count: usize) -> SolveProblem {
    let g = GridFunction::from_1d(g);
    let dims = g.dims();
    SolveProblem::new(LinearMap::Identity(dims), g, alpha, PsiKind::Tv1d)
        .unwrap()
        .with_decomposition(make_stripes(dims, count).unwrap())
        .unwrap()
}

fn l1(seed: u64, count: usize) -> SolveProblem {
    let inst = gaussian_l1(20, 60, 4, 0.01, seed).unwrap();
    SolveProblem::new(inst.operator, inst.data, 0.01, PsiKind::L1)
        .unwrap()
        .with_decomposition(make_index_split(60, count).unwrap())
        .unwrap()
}

#[test]
fn single_subspace_reproduces_baseline_exactly() {
    let p = denoise((0..40).map(|i| ((i * 37) % 11) as f64 / 5.0).collect(), 0.7, 1);
    let mut cfg = SolverConfig::tv();
    cfg.max_outer = 25;
    cfg.inner_iters = vec![1];
    let a = sequential_solve(&p, &cfg).unwrap();
    let b = iterative_threshold_solve(&p, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.u, b.u);

    let p = l1(3, 1);
    let mut cfg = SolverConfig::l1();
    cfg.max_outer = 25;
    cfg.inner_iters = vec![1];
    let a = sequential_solve(&p, &cfg).unwrap();
    let b = iterative_threshold_solve(&p, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
}

#[test]
fn two_stripes_keep_the_jump() {
    let n = 40;
    let s = step_1d(n).unwrap();
    let p = denoise(s.data.values().to_vec(), 1.0, 2).with_stripe(StripeSpec { half_width: 10 });
    let mut cfg = SolverConfig::tv();
    cfg.chambolle.tol = 1e-9;
    cfg.chambolle.max_iters = 200_000;
    cfg.eta.max_iters = 200;
    cfg.eta.rel_tol = 1e-12;
    cfg.max_outer = 5000;
    cfg.outer_tol = 1e-14;
    let r = sequential_solve(&p, &cfg).unwrap();
    let exact = taut_string(s.data.values(), 1.0);
    assert!(sup_dist(r.u.values(), &exact) < 1e-4, "{:?}", r.termination);
    let m = s.interface();
    assert!(r.u.values()[m] - r.u.values()[m - 1] > 0.89);
}

#[test]
fn inner_step_on_two_nodes_hits_closed_form() {
    // after rescaling by 0.9 the first node solves (a - 0.81)^2 + 2 (0.81 alpha) |a|,
    // which is zero for alpha = 2
    let p = SolveProblem::new(
        LinearMap::Identity(Dims::D1(2)),
        GridFunction::from_1d(vec![1.0, 0.0]),
        2.0,
        PsiKind::Tv1d,
    )
    .unwrap()
    .with_decomposition(make_stripes(Dims::D1(2), 2).unwrap())
    .unwrap();
    let mut cfg = SolverConfig::tv();
    cfg.chambolle.tol = 1e-12;
    cfg.chambolle.max_iters = 100_000;
    cfg.eta.max_iters = 500;
    cfg.eta.rel_tol = 1e-14;
    let u0 = GridFunction::zeros(Dims::D1(2));
    let mut st = SubspaceState::default();
    let r = inner_subspace_min(&p, &cfg, &u0, 0, 1, &mut st).unwrap();
    assert!(r.component.sup_norm() < 1e-9, "{:?}", r.component);
}

#[test]
fn l1_index_split_reaches_baseline_energy() {
    let mut cfg = SolverConfig::l1();
    cfg.max_outer = 50_000;
    cfg.outer_tol = 1e-14;
    let base = iterative_threshold_solve(&l1(5, 1), &cfg).unwrap();
    for parallel in [false, true] {
        let p = l1(5, 3);
        let r = if parallel {
            parallel_solve(&p, &cfg).unwrap()
        } else {
            sequential_solve(&p, &cfg).unwrap()
        };
        let (a, b) = (r.trace.final_energy(), base.trace.final_energy());
        assert!((a - b).abs() <= 1e-6 * b, "parallel {parallel}: {a} vs {b}");
    }
}

#[test]
fn orthogonal_splittings_descend() {
    let inst = gaussian_l1(20, 60, 4, 0.01, 9).unwrap();
    let base = SolveProblem::new(inst.operator.clone(), inst.data, 0.01, PsiKind::L1).unwrap();
    let mut cfg = SolverConfig::l1();
    cfg.max_outer = 20;
    for dec in [make_random_orthogonal(60, 4, 1).unwrap(), make_svd_q(&inst.operator, 4).unwrap()] {
        let p = base.clone().with_decomposition(dec).unwrap();
        let r = sequential_solve(&p, &cfg).unwrap();
        assert!(r.trace.max_relative_increase() <= 1e-12);
        assert!(r.trace.final_energy() < r.trace.energy_at(0));
        assert!(!r.warnings.is_empty());
    }
}

#[test]
fn parallel_runs_are_reproducible() {
    let p = denoise((0..64).map(|i| ((i * 13) % 7) as f64 / 3.0).collect(), 0.5, 4)
        .with_stripe(StripeSpec { half_width: 4 });
    let mut cfg = SolverConfig::tv();
    cfg.max_outer = 15;
    cfg.parallel = true;
    let a = parallel_solve(&p, &cfg).unwrap();
    let b = parallel_solve(&p, &cfg).unwrap();
    assert_eq!(a.trace, b.trace);
    assert_eq!(a.u, b.u);
    cfg.parallel = false;
    let c = parallel_solve(&p, &cfg).unwrap();
    assert_eq!(a.trace, c.trace);
}

#[test]
fn zero_data_is_fixed_immediately() {
    let p = denoise(vec![0.0; 12], 1.0, 2);
    let r = sequential_solve(&p, &SolverConfig::tv()).unwrap();
    assert_eq!(r.termination, Termination::Tolerance);
    assert_eq!(r.u.sup_norm(), 0.0);
    assert_eq!(r.trace.records.len(), 2);
}

#[test]
fn surrogate_bounds_energy_from_above() {
    let p = l1(2, 3);
    let u = GridFunction::from_1d((0..60).map(|k| ((k * 7) % 5) as f64 / 4.0 - 0.5).collect());
    let a = p.decomposition().project(1, &u.scaled(0.3)).unwrap();
    let s = surrogate_energy(&p, &u, &a, 1).unwrap();
    assert!(s >= energy(&p, &u).unwrap() - 1e-12);
    let own = p.decomposition().project(1, &u).unwrap();
    assert!((surrogate_energy(&p, &u, &own, 1).unwrap() - energy(&p, &u).unwrap()).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn energy_never_rises(g in prop::collection::vec(-2.0f64..2.0, 8..40), alpha in 0.05f64..1.5,
                          count in 1usize..4, parallel: bool, w in 0usize..6) {
        let count = count.min(g.len() / 2);
        let mut p = denoise(g, alpha, count);
        if w > 0 {
            p = p.with_stripe(StripeSpec { half_width: w });
        }
        let mut cfg = SolverConfig::tv();
        cfg.max_outer = 20;
        cfg.inner_iters = vec![2];
        let r = if parallel { parallel_solve(&p, &cfg) } else { sequential_solve(&p, &cfg) }.unwrap();
        prop_assert!(r.trace.max_relative_increase() <= 1e-12);
    }

    #[test]
    fn l1_energy_never_rises(seed in 0u64..1000, count in 1usize..6, parallel: bool) {
        let p = l1(seed, count);
        let mut cfg = SolverConfig::l1();
        cfg.max_outer = 10;
        let r = if parallel { parallel_solve(&p, &cfg) } else { sequential_solve(&p, &cfg) }.unwrap();
        prop_assert!(r.trace.max_relative_increase() <= 1e-12);
    }
}
