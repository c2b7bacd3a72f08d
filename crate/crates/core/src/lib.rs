//! Generalized low-rank approximation by a symmetric positive semidefinite
//! matrix.
//!
//! Given pairs `(A_i, B_i)` with `A_i` square of side `m_i` and `B_i` of shape
//! `m_i x n`, find the PSD matrix `X` of rank at most `k` minimizing
//!
//! ```text
//! sum_i || A_i - B_i X B_i^T ||_F^2
//! ```
//!
//! `X` is parametrized as `Y Y^T` with `Y` of shape `n x k`, which turns the
//! constrained problem into an unconstrained quartic one in `Y`. That problem
//! is minimized by Fletcher-Reeves nonlinear conjugate gradient where every
//! step length is the exact minimizer of the quartic `f(Y + tD)`.
//!
//! Modules:
//!
//! * [`problem`]: instances, objective, gradient, residual, `X = Y Y^T`.
//! * [`linesearch`]: quartic coefficients along a direction, cubic roots,
//!   exact minimization over `t > 0`.
//! * [`solver`]: the conjugate gradient loop and its trace.
//! * [`oracle`]: independent checks (finite differences, interpolation,
//!   companion roots, eigen-truncation, multistart).
//! * [`io`]: text formats for problems, solutions, traces, and seeded
//!   instance generation.
//! * [`demo`]: image-restoration demo on grayscale PGM images.
//!
//! With the `parallel` feature (on by default) the per-pair sums and the
//! multistart runs are evaluated with rayon. Reductions always run in pair
//! order, so sequential and parallel execution give bit-identical results.

// `!(x < y)` is used on purpose: it is true for NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod demo;
pub mod error;
pub mod io;
pub mod linesearch;
pub mod oracle;
mod par;
pub mod problem;
pub mod solver;

pub use error::{Error, Result};
pub use par::Execution;
pub use problem::{FactorMatrix, GradientMatrix, Pair, ProblemInstance};
pub use solver::{solve, Restart, SolverConfig, SolverResult, Termination};

/// Dense real matrix used throughout the crate.
pub type Matrix = nalgebra::DMatrix<f64>;
