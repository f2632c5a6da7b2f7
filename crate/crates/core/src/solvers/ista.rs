use super::{
    initial_iterate, Diagnostics, OuterLoop, SolveProblem, SolveResult, SolverConfig, Termination,
};
use crate::error::Result;
use crate::grid::{DualField, GridFunction};
use crate::prox::{chambolle_project, soft_threshold_vector};

/// Single-domain iterative thresholding `u <- S(u + T*(g - Tu))`, one
/// thresholding step per outer iteration. Steps that would raise the
/// surrogate energy are retried with a tighter projection, then dropped.
pub fn iterative_threshold_solve(p: &SolveProblem, cfg: &SolverConfig) -> Result<SolveResult> {
    cfg.validate()?;
    let s = p.scaled();
    let mut u = initial_iterate(p, cfg)?;
    let mut tu = s.t.apply_unchecked(&u);
    let mut outer = OuterLoop::new(cfg, p.scale(), s.energy_with(&u, &tu));
    let mut diagnostics = Diagnostics::default();
    let mut termination = Termination::MaxOuter;
    let mut dual: Option<DualField> = None;

    for n in 0..cfg.max_outer {
        let prev = u.clone();
        let j_old = s.energy_with(&u, &tu);
        let mut chambolle = cfg.chambolle;
        let mut accepted = false;
        for attempt in 0..=cfg.retries {
            let z = u.add(&s.t.adjoint_unchecked(&s.g.sub(&tu)));
            let next: GridFunction = if s.alpha == 0.0 {
                z
            } else if s.psi.is_tv() {
                let proj = chambolle_project(&z, s.alpha, &chambolle, dual.as_ref())?;
                dual = Some(proj.dual);
                z.sub(&proj.projection)
            } else {
                soft_threshold_vector(&z, s.alpha, s.weights)?
            };
            let t_next = s.t.apply_unchecked(&next);
            let d = next.sub(&u);
            let td = t_next.sub(&tu);
            let surrogate = s.energy_with(&next, &t_next) + d.norm_sq() - td.norm_sq();
            if surrogate <= j_old {
                u = next;
                tu = t_next;
                accepted = true;
                if attempt > 0 {
                    diagnostics.retried_steps += 1;
                }
                break;
            }
            chambolle.tol /= 10.0;
            chambolle.max_iters *= 4;
        }
        if !accepted {
            diagnostics.rejected_steps += 1;
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
        warnings: Vec::new(),
        diagnostics,
        error: None,
    })
}
