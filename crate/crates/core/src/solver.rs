//! Fletcher-Reeves nonlinear conjugate gradient with exact line search.
//!
//! ```text
//! D_0 = -g_0
//! while ||g_k||_F >= eps:
//!     t_k     = argmin_{t>0} f(Y_k + t D_k)     (quartic, solved exactly)
//!     Y_{k+1} = Y_k + t_k D_k
//!     beta    = ||g_{k+1}||^2 / ||g_k||^2
//!     D_{k+1} = -g_{k+1} + beta D_k
//! ```
//!
//! On top of the plain iteration the direction is reset to `-g` whenever it
//! fails to be a descent direction and, by default, every `n * k` steps.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linesearch::{minimize_quartic, quartic_coeffs};
use crate::problem::{assemble_x, FactorMatrix, GradientMatrix, ProblemInstance};
use crate::Matrix;

/// Periodic restart policy. Restarts on loss of descent happen regardless.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Restart {
    /// Every `n * k` iterations.
    DimensionBased,
    Every(usize),
    Never,
}

impl Restart {
    fn period(self, instance: &ProblemInstance) -> Option<usize> {
        match self {
            Restart::DimensionBased => Some(instance.n() * instance.k()),
            Restart::Every(p) => Some(p),
            Restart::Never => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    /// Stop once `||grad f||_F < epsilon`.
    pub epsilon: f64,
    pub max_iterations: usize,
    pub restart: Restart,
    /// Reset to steepest descent when `tr(g^T D) >= 0`.
    pub enforce_descent: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            epsilon: 1e-4,
            max_iterations: 10_000,
            restart: Restart::DimensionBased,
            enforce_descent: true,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "epsilon must be positive, got {}",
                self.epsilon
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidArgument(
                "max_iterations must be at least 1".into(),
            ));
        }
        if self.restart == Restart::Every(0) {
            return Err(Error::InvalidArgument(
                "restart period must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// One row of the convergence trace. Index 0 is the starting point, with
/// `step` and `beta` zero.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub index: usize,
    pub f_value: f64,
    pub grad_norm: f64,
    /// Relative residual; NaN when every `A_i` is zero.
    pub residual: f64,
    /// Step `t` that produced this iterate.
    pub step: f64,
    /// Mixing coefficient used for the outgoing direction; 0 on restarts.
    pub beta: f64,
    /// `tr(g^T D)` for the outgoing direction.
    pub slope: f64,
    /// `tr(g^T D_prev)`: zero for an exact line search.
    pub grad_dot_prev_direction: f64,
    /// Norm of the previous direction, for scaling `grad_dot_prev_direction`.
    pub prev_direction_norm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    GradientTolerance,
    MaxIterations,
    DegenerateDirection,
    /// The exact step no longer lowers the evaluated objective: the iterate
    /// sits at the rounding floor of `f`.
    Stagnation,
}

impl fmt::Display for Termination {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Termination::GradientTolerance => "gradient-tolerance",
            Termination::MaxIterations => "max-iterations",
            Termination::DegenerateDirection => "degenerate-direction",
            Termination::Stagnation => "stagnation",
        })
    }
}

impl FromStr for Termination {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient-tolerance" => Ok(Termination::GradientTolerance),
            "max-iterations" => Ok(Termination::MaxIterations),
            "degenerate-direction" => Ok(Termination::DegenerateDirection),
            "stagnation" => Ok(Termination::Stagnation),
            other => Err(Error::InvalidArgument(format!(
                "unknown termination reason {other:?}"
            ))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolverResult {
    pub y: FactorMatrix,
    /// `Y Y^T`, symmetric PSD with rank at most `k`.
    pub x: Matrix,
    pub iterations: usize,
    pub converged: bool,
    pub trace: Vec<IterationRecord>,
    pub termination: Termination,
}

impl SolverResult {
    pub fn last(&self) -> &IterationRecord {
        self.trace
            .last()
            .expect("trace always holds the starting point")
    }

    pub fn final_objective(&self) -> f64 {
        self.last().f_value
    }

    pub fn final_grad_norm(&self) -> f64 {
        self.last().grad_norm
    }

    pub fn final_residual(&self) -> f64 {
        self.last().residual
    }
}

/// Iterate, gradient and outgoing direction.
#[derive(Debug, Clone)]
pub struct CgState {
    pub y: FactorMatrix,
    pub f_value: f64,
    pub grad: GradientMatrix,
    pub direction: Matrix,
}

impl CgState {
    /// State at `y` with the steepest-descent direction.
    pub fn start(
        instance: &ProblemInstance,
        y: FactorMatrix,
    ) -> Result<(CgState, IterationRecord)> {
        let norms = instance.residual_norms_sq(&y)?;
        let f_value = sum(&norms);
        let grad = instance.gradient(&y)?;
        if !f_value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { iteration: 0 });
        }
        let direction = -grad.as_matrix();
        let grad_norm = grad.norm();
        let record = IterationRecord {
            index: 0,
            f_value,
            grad_norm,
            residual: instance.residual_error_from(&norms).unwrap_or(f64::NAN),
            step: 0.0,
            beta: 0.0,
            slope: -grad_norm * grad_norm,
            grad_dot_prev_direction: 0.0,
            prev_direction_norm: 0.0,
        };
        Ok((
            CgState {
                y,
                f_value,
                grad,
                direction,
            },
            record,
        ))
    }

    fn restart(&mut self, record: &mut IterationRecord) {
        self.direction = -self.grad.as_matrix();
        record.beta = 0.0;
        record.slope = -record.grad_norm * record.grad_norm;
    }
}

fn sum(values: &[f64]) -> f64 {
    values.iter().fold(0.0, |acc, v| acc + v)
}

fn frobenius_dot(a: &Matrix, b: &Matrix) -> f64 {
    a.dot(b)
}

/// Fletcher-Reeves coefficient `||g_next||_F^2 / ||g_prev||_F^2`.
pub fn fr_beta(grad_next: &GradientMatrix, grad_prev: &GradientMatrix) -> Result<f64> {
    let denom = grad_prev.norm_squared();
    if denom == 0.0 {
        return Err(Error::ZeroPreviousGradient);
    }
    Ok(grad_next.norm_squared() / denom)
}

/// One conjugate gradient iteration from `state`, producing iterate
/// `index`.
///
/// The outgoing direction of `state` must be a descent direction.
pub fn step(
    instance: &ProblemInstance,
    state: &CgState,
    config: &SolverConfig,
    index: usize,
) -> Result<(CgState, IterationRecord)> {
    // search along the unit direction so the degeneracy test on a4 does not
    // depend on the length of D
    let scale = state.direction.norm();
    if !(scale > 0.0) {
        return Err(Error::DegenerateDirection {
            a4: 0.0,
            threshold: 0.0,
        });
    }
    let unit = &state.direction / scale;
    let poly = quartic_coeffs(instance, &state.y, &unit)?;
    let line = minimize_quartic(&poly)?;
    let t = line.t_star / scale;

    let y = FactorMatrix::from_raw(state.y.as_matrix() + &state.direction * t);
    let norms = instance.residual_norms_sq(&y)?;
    let f_value = sum(&norms);
    let grad = instance.gradient(&y)?;
    if !f_value.is_finite() || grad.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { iteration: index });
    }
    let grad_norm = grad.norm();
    let beta = fr_beta(&grad, &state.grad)?;
    let direction = &state.direction * beta - grad.as_matrix();

    let mut record = IterationRecord {
        index,
        f_value,
        grad_norm,
        residual: instance.residual_error_from(&norms).unwrap_or(f64::NAN),
        step: t,
        beta,
        slope: frobenius_dot(grad.as_matrix(), &direction),
        grad_dot_prev_direction: frobenius_dot(grad.as_matrix(), &state.direction),
        prev_direction_norm: state.direction.norm(),
    };
    let mut next = CgState {
        y,
        f_value,
        grad,
        direction,
    };
    if config.enforce_descent && !(record.slope < 0.0) {
        next.restart(&mut record);
    }
    Ok((next, record))
}

/// Runs the conjugate gradient iteration from `y0`.
pub fn solve(
    instance: &ProblemInstance,
    y0: &FactorMatrix,
    config: &SolverConfig,
) -> Result<SolverResult> {
    config.validate()?;
    instance.check_factor("Y0", y0)?;
    let period = config.restart.period(instance);

    let (mut state, first) = CgState::start(instance, y0.clone())?;
    let mut trace = vec![first];
    let mut iterations = 0;
    let termination = loop {
        if trace[iterations].grad_norm < config.epsilon {
            break Termination::GradientTolerance;
        }
        if iterations >= config.max_iterations {
            break Termination::MaxIterations;
        }
        let index = iterations + 1;
        let mut outcome = step(instance, &state, config, index);
        let rejected = match &outcome {
            Err(Error::NoPositiveCriticalPoint { .. }) => true,
            Ok((next, _)) => next.f_value > state.f_value,
            Err(_) => false,
        };
        if rejected && trace[iterations].beta != 0.0 {
            // rounding-level failure along a mixed direction: retry along -g
            let mut record = trace[iterations];
            state.restart(&mut record);
            trace[iterations] = record;
            outcome = step(instance, &state, config, index);
        }
        let (mut next, mut record) = match outcome {
            Ok(v) => v,
            Err(Error::DegenerateDirection { .. }) | Err(Error::NoPositiveCriticalPoint { .. }) => {
                break Termination::DegenerateDirection;
            }
            Err(e) => return Err(e),
        };
        if next.f_value > state.f_value {
            break Termination::Stagnation;
        }
        if period.is_some_and(|p| index % p == 0) {
            next.restart(&mut record);
        }
        state = next;
        trace.push(record);
        iterations = index;
    };

    let x = assemble_x(&state.y);
    Ok(SolverResult {
        y: state.y,
        x,
        iterations,
        converged: termination == Termination::GradientTolerance,
        trace,
        termination,
    })
}

/// [`solve`] from a uniform `[0, 1)` starting point drawn with `seed`.
pub fn solve_seeded(
    instance: &ProblemInstance,
    seed: u64,
    config: &SolverConfig,
) -> Result<SolverResult> {
    let y0 = FactorMatrix::random(instance.n(), instance.k(), seed);
    solve(instance, &y0, config)
}
