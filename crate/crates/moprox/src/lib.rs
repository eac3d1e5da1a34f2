//! Proximal-gradient methods for multiobjective composite optimization on
//! embedded Riemannian manifolds.
//!
//! The library minimizes vector objectives `F = (f_i + g_i)_{i=1..m}` with
//! smooth `f_i` and convex nonsmooth `g_i` over the unit sphere or Euclidean
//! space, using proximal-gradient outer loops driven by a tangent-space
//! minimax subproblem solver. Three variants are provided: the exact method,
//! an inexact method with a relative residual acceptance test, and a
//! trust-region method with an adaptive penalty parameter. A subgradient
//! steepest-descent baseline and a reproducible bi-objective sparse-recovery
//! benchmark round out the crate.
//!
//! Start with the runnable programs under `examples/`, or with the `moprox`
//! binary for the command-line benchmark harness.

pub mod algorithms;
pub mod bench;
pub mod cli;
pub mod diagnostics;
mod error;
pub mod manifold;
pub mod objectives;
pub mod subproblem;

pub use error::{Error, Result};
pub use manifold::{Manifold, Point, RetractionKind, Tangent};
pub use objectives::{make_l1, CompositeObjective, NonsmoothTerm, SmoothTerm};
pub use subproblem::{
    brute_force_oracle, kkt_residual_check, p_eval, psi, solve_proximal_mapping,
    solve_transferred, InnerSolverConfig, SimplexSolver, SubproblemSolution,
};
