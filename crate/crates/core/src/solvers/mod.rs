//! Energy evaluation, the single-domain thresholding baseline, the sequential
//! and parallel subspace-correction solvers, and the naive 1D interface solver
//! kept for comparison.

mod ista;
mod naive;
mod subspace;

use std::time::Instant;

use serde::Serialize;

use crate::decomp::{DecompositionKind, SubspaceDecomposition, SwitchSchedule};
use crate::error::{check_dims, Error, Result};
use crate::grid::{discrete_tv, Dims, GridFunction};
use crate::oblique::{EtaConfig, StripeSpec};
use crate::operators::{rescale_problem, LinearMap};
use crate::prox::{ChambolleConfig, WeightVector};

pub use ista::iterative_threshold_solve;
pub use naive::{naive_tv1d_solve, NaiveConfig, ThetaRule};
pub use subspace::{inner_subspace_min, parallel_solve, sequential_solve, SubspaceState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum PsiKind {
    Tv1d,
    Tv2d,
    L1,
}

impl PsiKind {
    pub fn is_tv(self) -> bool {
        !matches!(self, PsiKind::L1)
    }
}

/// A minimization problem `||Tu - g||^2 + 2 alpha psi(u)` in user units,
/// together with its internally rescaled form `(T/c, g/c, alpha/c^2)` with
/// `||T/c|| < 1`.
#[derive(Clone, Debug)]
pub struct SolveProblem {
    operator: LinearMap,
    data: GridFunction,
    alpha: f64,
    psi: PsiKind,
    weights: Option<WeightVector>,
    decomposition: SubspaceDecomposition,
    schedule: Option<SwitchSchedule>,
    stripe: Option<StripeSpec>,
    scaled_operator: LinearMap,
    scaled_data: GridFunction,
    scale: f64,
}

impl SolveProblem {
    /// Validates shapes and coercivity and rescales to the default target 0.9.
    /// The decomposition defaults to a single subspace.
    pub fn new(operator: LinearMap, data: GridFunction, alpha: f64, psi: PsiKind) -> Result<Self> {
        Self::with_target(operator, data, alpha, psi, 0.9)
    }

    pub fn with_target(
        operator: LinearMap,
        data: GridFunction,
        alpha: f64,
        psi: PsiKind,
        target: f64,
    ) -> Result<Self> {
        if !(alpha >= 0.0) || !alpha.is_finite() {
            return Err(Error::InvalidArgument(format!("alpha {alpha} must be nonnegative")));
        }
        check_dims(operator.codomain(), data.dims())?;
        if !data.is_finite() {
            return Err(Error::NonFinite("data"));
        }
        let domain = operator.domain();
        let geometry_ok = match psi {
            PsiKind::Tv1d | PsiKind::L1 => matches!(domain, Dims::D1(_)),
            PsiKind::Tv2d => domain.is_2d(),
        };
        if !geometry_ok {
            return Err(Error::InvalidArgument(format!(
                "{psi:?} does not fit a domain of shape {domain:?}"
            )));
        }
        if psi.is_tv() {
            // TV does not see constants, so T must not annihilate them
            let ones = GridFunction::constant(domain, 1.0);
            if operator.apply(&ones)?.norm() == 0.0 {
                return Err(Error::NotCoercive(
                    "the operator annihilates constants (empty mask?)".into(),
                ));
            }
        }
        let (scaled_operator, scaled_data, scale) = rescale_problem(&operator, &data, target)?;
        Ok(SolveProblem {
            decomposition: SubspaceDecomposition::whole(domain),
            operator,
            data,
            alpha,
            psi,
            weights: None,
            schedule: None,
            stripe: None,
            scaled_operator,
            scaled_data,
            scale,
        })
    }

    pub fn with_decomposition(mut self, dec: SubspaceDecomposition) -> Result<Self> {
        check_dims(self.operator.domain(), dec.dims())?;
        self.decomposition = dec;
        Ok(self)
    }

    pub fn with_schedule(mut self, schedule: SwitchSchedule) -> Result<Self> {
        check_dims(self.operator.domain(), schedule.from.dims())?;
        check_dims(self.operator.domain(), schedule.to.dims())?;
        self.decomposition = schedule.to.clone();
        self.schedule = Some(schedule);
        Ok(self)
    }

    pub fn with_stripe(mut self, stripe: StripeSpec) -> Self {
        self.stripe = Some(stripe);
        self
    }

    pub fn with_weights(mut self, w: WeightVector) -> Result<Self> {
        if self.psi != PsiKind::L1 {
            return Err(Error::InvalidArgument("weights apply to l1 only".into()));
        }
        if w.len() != self.operator.domain().len() {
            return Err(Error::InvalidArgument("weight vector length differs from domain".into()));
        }
        self.weights = Some(w);
        Ok(self)
    }

    pub fn operator(&self) -> &LinearMap {
        &self.operator
    }

    pub fn data(&self) -> &GridFunction {
        &self.data
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn psi(&self) -> PsiKind {
        self.psi
    }

    pub fn weights(&self) -> Option<&WeightVector> {
        self.weights.as_ref()
    }

    pub fn decomposition(&self) -> &SubspaceDecomposition {
        &self.decomposition
    }

    pub fn schedule(&self) -> Option<&SwitchSchedule> {
        self.schedule.as_ref()
    }

    pub fn stripe(&self) -> Option<StripeSpec> {
        self.stripe
    }

    /// The factor `c` with `T/c` of norm about the rescale target.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn domain(&self) -> Dims {
        self.operator.domain()
    }

    pub(crate) fn decomposition_at(&self, outer: usize) -> &SubspaceDecomposition {
        match &self.schedule {
            Some(s) => s.decomposition_at(outer),
            None => &self.decomposition,
        }
    }

    pub(crate) fn scaled(&self) -> Scaled<'_> {
        Scaled {
            t: &self.scaled_operator,
            g: &self.scaled_data,
            alpha: self.alpha / (self.scale * self.scale),
            psi: self.psi,
            weights: self.weights.as_ref(),
        }
    }
}

pub(crate) fn penalty(psi: PsiKind, weights: Option<&WeightVector>, u: &GridFunction) -> f64 {
    match psi {
        PsiKind::Tv1d | PsiKind::Tv2d => discrete_tv(u),
        PsiKind::L1 => match weights {
            None => u.values().iter().map(|x| x.abs()).sum(),
            Some(w) => u.values().iter().zip(w.weights()).map(|(x, w)| w * x.abs()).sum(),
        },
    }
}

/// `J(u) = ||Tu - g||^2 + 2 alpha psi(u)` in user units.
pub fn energy(p: &SolveProblem, u: &GridFunction) -> Result<f64> {
    let tu = p.operator.apply(u)?;
    Ok(tu.sub(&p.data).norm_sq() + 2.0 * p.alpha * penalty(p.psi, p.weights(), u))
}

/// `J(u) + ||u_i - a||^2 - ||T(u_i - a)||^2` with `u_i` the component of `u`
/// in subspace `i`, evaluated on the rescaled problem and reported in user
/// units. Only meaningful when `a` lies in `V_i`.
pub fn surrogate_energy(p: &SolveProblem, u: &GridFunction, a: &GridFunction, i: usize) -> Result<f64> {
    let s = p.scaled();
    let ui = p.decomposition.project(i, u)?;
    check_dims(ui.dims(), a.dims())?;
    let d = ui.sub(a);
    let j = s.energy(u);
    let td = s.t.apply_unchecked(&d);
    let c2 = p.scale * p.scale;
    Ok(c2 * (j + d.norm_sq() - td.norm_sq()))
}

/// Borrowed view of the rescaled problem used by the iterations.
#[derive(Clone, Copy)]
pub(crate) struct Scaled<'a> {
    pub t: &'a LinearMap,
    pub g: &'a GridFunction,
    pub alpha: f64,
    pub psi: PsiKind,
    pub weights: Option<&'a WeightVector>,
}

impl Scaled<'_> {
    pub fn energy_with(&self, u: &GridFunction, tu: &GridFunction) -> f64 {
        tu.sub(self.g).norm_sq() + 2.0 * self.alpha * penalty(self.psi, self.weights, u)
    }

    pub fn energy(&self, u: &GridFunction) -> f64 {
        self.energy_with(u, &self.t.apply_unchecked(u))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverConfig {
    /// Inner iterations per subspace. One entry applies to every subspace;
    /// otherwise entry `i` belongs to subspace `i` and the last entry repeats.
    pub inner_iters: Vec<usize>,
    /// Stop when `|J(u_{n+1}) - J(u_n)|` drops below this (user units).
    pub outer_tol: f64,
    pub max_outer: usize,
    pub eta: EtaConfig,
    pub chambolle: ChambolleConfig,
    pub parallel: bool,
    /// Tighter projection attempts after an inner step fails to lower the
    /// surrogate energy.
    pub retries: usize,
    pub initial: Option<GridFunction>,
    /// Record wall-clock seconds in the trace; zero otherwise so that traces
    /// are reproducible byte for byte.
    pub timings: bool,
}

impl SolverConfig {
    pub fn tv() -> Self {
        SolverConfig {
            inner_iters: vec![5],
            outer_tol: 1e-10,
            max_outer: 1000,
            eta: EtaConfig::tv(),
            chambolle: ChambolleConfig::default(),
            parallel: false,
            retries: 1,
            initial: None,
            timings: false,
        }
    }

    pub fn l1() -> Self {
        SolverConfig {
            inner_iters: vec![30],
            eta: EtaConfig::l1(),
            ..Self::tv()
        }
    }

    pub fn inner_for(&self, i: usize) -> usize {
        match self.inner_iters.get(i) {
            Some(&l) => l,
            None => self.inner_iters.last().copied().unwrap_or(1),
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        self.chambolle.validate()?;
        if self.inner_iters.is_empty() || self.inner_iters.contains(&0) {
            return Err(Error::InvalidArgument("inner iteration counts must be positive".into()));
        }
        if !(self.outer_tol >= 0.0) || self.max_outer == 0 || self.eta.max_iters == 0 {
            return Err(Error::InvalidArgument("invalid outer tolerance or budgets".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TraceRecord {
    pub iter: usize,
    pub energy: f64,
    pub increment: f64,
    pub seconds: f64,
}

/// One record per outer iteration; record 0 is the starting point.
#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct EnergyTrace {
    pub records: Vec<TraceRecord>,
}

impl EnergyTrace {
    pub fn energies(&self) -> Vec<f64> {
        self.records.iter().map(|r| r.energy).collect()
    }

    pub fn last(&self) -> Option<&TraceRecord> {
        self.records.last()
    }

    pub fn final_energy(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.energy)
    }

    /// Energy after outer iteration `n`, or the last one if the run stopped earlier.
    pub fn energy_at(&self, n: usize) -> f64 {
        self.records
            .get(n)
            .or(self.records.last())
            .map_or(f64::NAN, |r| r.energy)
    }

    /// Largest relative energy increase between consecutive records.
    pub fn max_relative_increase(&self) -> f64 {
        self.records
            .windows(2)
            .map(|w| (w[1].energy - w[0].energy) / (1.0 + w[0].energy.abs()))
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Tolerance,
    MaxOuter,
    EtaDivergence,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Inner steps discarded because even the tightest retry raised the surrogate energy.
    pub rejected_steps: usize,
    /// Inner steps that needed a tighter projection to be accepted.
    pub retried_steps: usize,
    pub max_eta_residual: f64,
    pub max_v2_residual: f64,
    pub eta_iterations: usize,
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    pub u: GridFunction,
    pub trace: EnergyTrace,
    pub termination: Termination,
    pub warnings: Vec<String>,
    pub diagnostics: Diagnostics,
    /// Set when the run stopped on a diverging multiplier.
    pub error: Option<String>,
}

/// Shared outer-loop bookkeeping for the solvers.
pub(crate) struct OuterLoop {
    start: Instant,
    timings: bool,
    scale2: f64,
    pub trace: EnergyTrace,
}

impl OuterLoop {
    pub fn new(cfg: &SolverConfig, scale: f64, initial_energy: f64) -> Self {
        let mut trace = EnergyTrace::default();
        trace.records.push(TraceRecord {
            iter: 0,
            energy: initial_energy * scale * scale,
            increment: 0.0,
            seconds: 0.0,
        });
        OuterLoop {
            start: Instant::now(),
            timings: cfg.timings,
            scale2: scale * scale,
            trace,
        }
    }

    /// Records the new scaled energy and reports whether the energy change is below `tol`.
    pub fn record(&mut self, iter: usize, scaled_energy: f64, increment: f64, tol: f64) -> bool {
        let energy = scaled_energy * self.scale2;
        let prev = self.trace.final_energy();
        self.trace.records.push(TraceRecord {
            iter,
            energy,
            increment,
            seconds: if self.timings {
                self.start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
        (prev - energy).abs() < tol
    }
}

pub(crate) fn initial_iterate(p: &SolveProblem, cfg: &SolverConfig) -> Result<GridFunction> {
    match &cfg.initial {
        Some(u0) => {
            check_dims(p.domain(), u0.dims())?;
            if !u0.is_finite() {
                return Err(Error::NonFinite("initial iterate"));
            }
            Ok(u0.clone())
        }
        None => Ok(GridFunction::zeros(p.domain())),
    }
}

pub(crate) fn splitting_warnings(p: &SolveProblem) -> Vec<String> {
    let mut w = Vec::new();
    if p.decomposition.kind() == DecompositionKind::Orthogonal {
        w.push(
            "the final decomposition is not a coordinate split; the limit need not minimize J"
                .to_string(),
        );
    }
    if p.psi.is_tv() && p.decomposition.count() > 1 {
        w.push("minimality of the limit is not certified for total variation splittings".to_string());
    }
    w
}
