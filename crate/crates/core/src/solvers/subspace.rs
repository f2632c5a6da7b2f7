use rayon::prelude::*;

use super::{
    initial_iterate, splitting_warnings, Diagnostics, OuterLoop, Scaled, SolveProblem, SolveResult,
    SolverConfig, Termination,
};
use crate::decomp::SubspaceDecomposition;
use crate::error::{Error, Result};
use crate::grid::{DualField, GridFunction};
use crate::oblique::{
    eta_fixed_point, eta_fixed_point_stripes, oblique_threshold, oblique_threshold_stripes,
    restrict_to_stripe, BandState, EtaConfig, EtaState, StripeSpec,
};
use crate::prox::{chambolle_project, clamp_project, ChambolleConfig};

/// Warm-start data kept per subspace across inner and outer iterations.
#[derive(Clone, Debug, Default)]
pub struct SubspaceState {
    pub eta: Option<GridFunction>,
    bands: BandState,
    dual: Option<DualField>,
    stripe_dual: Option<DualField>,
}

struct Candidate {
    u: GridFunction,
    tu: GridFunction,
    surrogate: f64,
    eta_iters: usize,
    eta_residual: f64,
    v2_residual: f64,
}

#[derive(Clone, Copy)]
pub(crate) struct StepContext<'a> {
    pub s: Scaled<'a>,
    pub dec: &'a SubspaceDecomposition,
    pub stripe: Option<StripeSpec>,
}

/// `P_{alpha K}` on the full grid, warm-starting the dual field for total variation.
pub(crate) fn full_projector<'a>(
    s: Scaled<'a>,
    chambolle: ChambolleConfig,
    dual: &'a mut Option<DualField>,
) -> impl FnMut(&GridFunction) -> Result<GridFunction> + 'a {
    move |v: &GridFunction| {
        if s.psi.is_tv() {
            let p = chambolle_project(v, s.alpha, &chambolle, dual.as_ref())?;
            *dual = Some(p.dual);
            Ok(p.projection)
        } else {
            clamp_project(v, s.alpha, s.weights)
        }
    }
}

fn propose(
    ctx: StepContext<'_>,
    i: usize,
    u: &GridFunction,
    tu: &GridFunction,
    state: &mut SubspaceState,
    chambolle: ChambolleConfig,
    eta_cfg: &EtaConfig,
) -> Result<Candidate> {
    let StepContext { s, dec, stripe } = ctx;
    let a = dec.project_unchecked(i, u);
    let u2 = dec.complement_unchecked(i, u);
    let r = s.g.sub(tu);
    let z = a.add(&dec.project_unchecked(i, &s.t.adjoint_unchecked(&r)));
    let (u1, eta_iters, eta_residual, v2_residual) = if s.alpha == 0.0 {
        (z, 0, 0.0, 0.0)
    } else {
        let stripe = stripe.filter(|_| s.psi.is_tv() && dec.is_stripes() && dec.count() > 1);
        let (eta, out) = if let Some(spec) = stripe {
            let bands = restrict_to_stripe(dec, i, spec);
            let eta = eta_fixed_point_stripes(
                &z,
                &u2,
                s.alpha,
                &chambolle,
                dec,
                i,
                &bands,
                &mut state.bands,
                state.eta.as_ref(),
                eta_cfg,
            )?;
            let out = oblique_threshold_stripes(
                &z,
                &u2,
                &eta,
                s.alpha,
                &chambolle,
                dec,
                i,
                spec,
                &mut state.stripe_dual,
            )?;
            (eta, out)
        } else {
            let eta = if dec.count() == 1 {
                EtaState {
                    eta: GridFunction::zeros(u.dims()),
                    iters_used: 0,
                    diverged: false,
                    residual: 0.0,
                }
            } else {
                let mut proj = full_projector(s, chambolle, &mut state.dual);
                let comp = |v: &GridFunction| dec.complement_unchecked(i, v);
                eta_fixed_point(&z, &u2, &mut proj, &comp, state.eta.as_ref(), eta_cfg)?
            };
            let mut proj = full_projector(s, chambolle, &mut state.dual);
            let own = |v: &GridFunction| dec.project_unchecked(i, v);
            let out = oblique_threshold(&z, &u2, &eta, &mut proj, &own, i)?;
            (eta, out)
        };
        let stats = (eta.iters_used, eta.residual, out.v2_residual);
        state.eta = Some(eta.eta);
        (out.u1, stats.0, stats.1, stats.2)
    };
    let new_u = u2.add(&u1);
    let new_tu = s.t.apply_unchecked(&new_u);
    let d = u1.sub(&a);
    let td = new_tu.sub(tu);
    let surrogate = s.energy_with(&new_u, &new_tu) + d.norm_sq() - td.norm_sq();
    Ok(Candidate {
        u: new_u,
        tu: new_tu,
        surrogate,
        eta_iters,
        eta_residual,
        v2_residual,
    })
}

/// `steps` surrogate minimizations on subspace `i`. A step is kept only if it
/// does not raise the surrogate energy above `J(u)`; failing steps are redone
/// with tighter inner tolerances and dropped if they still fail.
#[allow(clippy::too_many_arguments)]
pub(crate) fn inner_steps(
    ctx: StepContext<'_>,
    cfg: &SolverConfig,
    i: usize,
    steps: usize,
    mut u: GridFunction,
    mut tu: GridFunction,
    state: &mut SubspaceState,
    diag: &mut Diagnostics,
) -> Result<(GridFunction, GridFunction)> {
    for _ in 0..steps {
        let j_old = ctx.s.energy_with(&u, &tu);
        let mut chambolle = cfg.chambolle;
        let mut eta_cfg = cfg.eta;
        let mut accepted = false;
        for attempt in 0..=cfg.retries {
            let c = propose(ctx, i, &u, &tu, state, chambolle, &eta_cfg)?;
            diag.eta_iterations += c.eta_iters;
            diag.max_eta_residual = diag.max_eta_residual.max(c.eta_residual);
            diag.max_v2_residual = diag.max_v2_residual.max(c.v2_residual);
            if c.surrogate <= j_old {
                u = c.u;
                tu = c.tu;
                accepted = true;
                if attempt > 0 {
                    diag.retried_steps += 1;
                }
                break;
            }
            chambolle.tol /= 10.0;
            eta_cfg.max_iters *= 2;
            eta_cfg.rel_tol /= 10.0;
        }
        if !accepted {
            diag.rejected_steps += 1;
        }
    }
    Ok((u, tu))
}

pub(crate) fn merge_diagnostics(into: &mut Diagnostics, d: &Diagnostics) {
    into.rejected_steps += d.rejected_steps;
    into.retried_steps += d.retried_steps;
    into.eta_iterations += d.eta_iterations;
    into.max_eta_residual = into.max_eta_residual.max(d.max_eta_residual);
    into.max_v2_residual = into.max_v2_residual.max(d.max_v2_residual);
}

#[derive(Clone, Debug)]
pub struct InnerResult {
    /// New component in `V_i`.
    pub component: GridFunction,
    /// `u` with its `V_i` component replaced.
    pub u: GridFunction,
    pub diagnostics: Diagnostics,
}

/// `steps` inner iterations on subspace `i` of the problem's decomposition,
/// holding the other components of `u` fixed.
pub fn inner_subspace_min(
    p: &SolveProblem,
    cfg: &SolverConfig,
    u: &GridFunction,
    i: usize,
    steps: usize,
    state: &mut SubspaceState,
) -> Result<InnerResult> {
    cfg.validate()?;
    let dec = p.decomposition();
    let s = p.scaled();
    let ctx = StepContext {
        s,
        dec,
        stripe: p.stripe(),
    };
    dec.check_index(i)?;
    let tu = s.t.apply(u)?;
    let mut diagnostics = Diagnostics::default();
    let (new_u, _) = inner_steps(ctx, cfg, i, steps, u.clone(), tu, state, &mut diagnostics)?;
    Ok(InnerResult {
        component: dec.project_unchecked(i, &new_u),
        u: new_u,
        diagnostics,
    })
}

fn eta_divergence(e: &Error) -> bool {
    matches!(e, Error::EtaDiverged { .. })
}

/// Gauss-Seidel sweep over the subspaces in index order, each against the
/// freshest values of the others.
pub fn sequential_solve(p: &SolveProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    run(p, cfg, false)
}

/// All subspaces solved from the same iterate, then averaged:
/// `u_{n+1} = u_n + (1/N) sum_i (u_hat_i - u_n)`.
pub fn parallel_solve(p: &SolveProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    run(p, cfg, true)
}

fn run(p: &SolveProblem, cfg: &SolverConfig, averaged: bool) -> Result<SolveResult> {
    cfg.validate()?;
    let s = p.scaled();
    let mut u = initial_iterate(p, cfg)?;
    let mut tu = s.t.apply_unchecked(&u);
    let mut outer = OuterLoop::new(cfg, p.scale(), s.energy_with(&u, &tu));
    let mut diagnostics = Diagnostics::default();
    let mut termination = Termination::MaxOuter;
    let mut error = None;
    let mut states: Vec<SubspaceState> = Vec::new();
    let mut phase = None;

    'outer: for n in 0..cfg.max_outer {
        let dec = p.decomposition_at(n);
        let early = p.schedule().is_some_and(|sch| n < sch.switch_after);
        if phase != Some(early) {
            // a new splitting invalidates the per-subspace warm starts
            states = vec![SubspaceState::default(); dec.count()];
            phase = Some(early);
        }
        let ctx = StepContext {
            s,
            dec,
            stripe: p.stripe(),
        };
        let prev = u.clone();
        if averaged {
            let work = |(i, st): (usize, &mut SubspaceState)| {
                let mut d = Diagnostics::default();
                let r = inner_steps(ctx, cfg, i, cfg.inner_for(i), u.clone(), tu.clone(), st, &mut d);
                r.map(|(v, _)| (v, d))
            };
            let results: Vec<Result<(GridFunction, Diagnostics)>> = if cfg.parallel {
                states.par_iter_mut().enumerate().map(work).collect()
            } else {
                states.iter_mut().enumerate().map(work).collect()
            };
            let mut sum = GridFunction::zeros(u.dims());
            for r in results {
                match r {
                    Ok((v, d)) => {
                        sum.axpy(1.0, &v.sub(&prev));
                        merge_diagnostics(&mut diagnostics, &d);
                    }
                    Err(e) if eta_divergence(&e) => {
                        termination = Termination::EtaDivergence;
                        error = Some(e.to_string());
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
            }
            u.axpy(1.0 / dec.count() as f64, &sum);
            tu = s.t.apply_unchecked(&u);
        } else {
            for (i, st) in states.iter_mut().enumerate() {
                match inner_steps(ctx, cfg, i, cfg.inner_for(i), u.clone(), tu.clone(), st, &mut diagnostics) {
                    Ok((v, tv)) => {
                        u = v;
                        tu = tv;
                    }
                    Err(e) if eta_divergence(&e) => {
                        termination = Termination::EtaDivergence;
                        error = Some(e.to_string());
                        break 'outer;
                    }
                    Err(e) => return Err(e),
                }
            }
        }
        let increment = u.distance(&prev);
        if outer.record(n + 1, s.energy_with(&u, &tu), increment, cfg.outer_tol) {
            termination = Termination::Tolerance;
            break;
        }
    }
    Ok(SolveResult {
        u,
        trace: outer.trace,
        termination,
        warnings: splitting_warnings(p),
        diagnostics,
        error,
    })
}
