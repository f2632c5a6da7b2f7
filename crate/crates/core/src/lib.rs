//! Subspace-correction minimization of
//! `J(u) = ||Tu - g||^2 + 2 alpha psi(u)`
//! where `psi` is a discrete total variation (1D or 2D) or a weighted l1 norm.
//!
//! The solution space is split into orthogonal subspaces (spatial stripes for
//! total variation, coordinate blocks or orthogonal transforms for l1) and the
//! energy is minimized alternately or in parallel on each piece. The
//! subspace problems are solved by oblique thresholding.

pub mod decomp;
pub mod error;
pub mod experiments;
pub mod grid;
pub mod io;
pub mod oblique;
pub mod operators;
pub mod prox;
pub mod solvers;

pub use decomp::{DecompositionKind, SubspaceDecomposition, SwitchSchedule};
pub use error::{Error, Result};
pub use grid::{discrete_tv, divergence, gradient, Dims, DualField, GridFunction};
pub use oblique::{EtaState, StripeSpec};
pub use operators::{estimate_spectral_norm, rescale_problem, LinearMap, NormBound};
pub use prox::{generalized_threshold, soft_threshold, ChambolleConfig, WeightVector};
pub use solvers::{
    energy, iterative_threshold_solve, parallel_solve, sequential_solve, EnergyTrace, PsiKind,
    SolveProblem, SolveResult, SolverConfig, Termination,
};
