//! Independent numerical checks for the primary code paths.
//!
//! Nothing here calls [`ProblemInstance::objective`],
//! [`ProblemInstance::gradient`] or the line-search coefficients; the
//! objective is re-evaluated from scratch ([`reference_objective`]) and
//! every derived quantity is recovered from those evaluations.

use std::fmt;

use nalgebra::{DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::linesearch::QuarticPolynomial;
use crate::par;
use crate::problem::{FactorMatrix, GradientMatrix, ProblemInstance};
use crate::solver::{solve_seeded, SolverConfig, SolverResult};
use crate::Matrix;

/// Default finite-difference step, scaled per entry by `1 + |y_ij|`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

/// Interpolation nodes for recovering the quartic along a line.
pub const QUARTIC_NODES: [f64; 5] = [-2.0, -1.0, 0.0, 1.0, 2.0];

/// How discrepancies are normalized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    /// `|p_i - o_i| / max(|o_i|, 1)` per entry.
    Entrywise,
    /// `|p_i - o_i| / max(max_j |o_j|, 1)`.
    Normwise,
}

/// Side-by-side comparison of a primary quantity against its oracle.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleReport {
    pub quantity: String,
    pub primary: Vec<f64>,
    pub oracle: Vec<f64>,
    pub max_abs: f64,
    pub max_rel: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl OracleReport {
    pub fn compare(
        quantity: impl Into<String>,
        primary: Vec<f64>,
        oracle: Vec<f64>,
        scale: Scale,
        tolerance: f64,
    ) -> Self {
        assert_eq!(
            primary.len(),
            oracle.len(),
            "compared vectors differ in length"
        );
        let norm = oracle.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let mut max_abs = 0.0_f64;
        let mut max_rel = 0.0_f64;
        for (p, o) in primary.iter().zip(&oracle) {
            let abs = (p - o).abs();
            let denom = match scale {
                Scale::Entrywise => o.abs().max(1.0),
                Scale::Normwise => norm,
            };
            let rel = abs / denom;
            if abs.is_nan() || abs > max_abs {
                max_abs = abs;
            }
            if rel.is_nan() || rel > max_rel {
                max_rel = rel;
            }
        }
        // NaN never passes
        let passed = max_rel <= tolerance;
        OracleReport {
            quantity: quantity.into(),
            primary,
            oracle,
            max_abs,
            max_rel,
            tolerance,
            passed,
        }
    }
}

impl fmt::Display for OracleReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {}: max abs {:.3e}, max rel {:.3e} (tolerance {:.1e}, {} values)",
            if self.passed { "PASS" } else { "FAIL" },
            self.quantity,
            self.max_abs,
            self.max_rel,
            self.tolerance,
            self.primary.len()
        )
    }
}

/// Straight-line evaluation of `sum_i ||A_i - B_i (Y Y^T) B_i^T||_F^2`,
/// forming `X` explicitly and summing squared entries one by one.
pub fn reference_objective(instance: &ProblemInstance, y: &Matrix) -> f64 {
    reference_residual_norms(instance, y)
        .iter()
        .map(|r| r * r)
        .sum()
}

/// `||A_i - B_i X B_i^T||_F` per pair, from an explicit `X = Y Y^T`.
pub fn reference_residual_norms(instance: &ProblemInstance, y: &Matrix) -> Vec<f64> {
    let x = y * y.transpose();
    instance
        .pairs()
        .iter()
        .map(|p| {
            let w = &p.b * &x * p.b.transpose();
            let mut s = 0.0;
            for i in 0..w.nrows() {
                for j in 0..w.ncols() {
                    let d = p.a[(i, j)] - w[(i, j)];
                    s += d * d;
                }
            }
            s.sqrt()
        })
        .collect()
}

/// Relative residual from [`reference_residual_norms`].
pub fn reference_residual_error(instance: &ProblemInstance, y: &Matrix) -> f64 {
    let num: f64 = reference_residual_norms(instance, y).iter().sum();
    let den: f64 = instance
        .pairs()
        .iter()
        .map(|p| p.a.iter().map(|v| v * v).sum::<f64>().sqrt())
        .sum();
    num / den
}

/// Central differences of [`reference_objective`] with per-entry step
/// `h (1 + |y_ij|)`.
pub fn fd_gradient(instance: &ProblemInstance, y: &FactorMatrix, h: f64) -> GradientMatrix {
    let base = y.as_matrix();
    let mut g = Matrix::zeros(base.nrows(), base.ncols());
    for i in 0..base.nrows() {
        for j in 0..base.ncols() {
            let hij = h * (1.0 + base[(i, j)].abs());
            let mut plus = base.clone();
            plus[(i, j)] += hij;
            let mut minus = base.clone();
            minus[(i, j)] -= hij;
            // use the step actually represented in floating point
            let span = plus[(i, j)] - minus[(i, j)];
            g[(i, j)] = (reference_objective(instance, &plus)
                - reference_objective(instance, &minus))
                / span;
        }
    }
    g.into()
}

/// Analytic gradient against central differences at the default step.
pub fn gradient_check(
    instance: &ProblemInstance,
    y: &FactorMatrix,
    tolerance: f64,
) -> Result<OracleReport> {
    let analytic = instance.gradient(y)?;
    let fd = fd_gradient(instance, y, DEFAULT_FD_STEP);
    Ok(OracleReport::compare(
        "gradient vs central differences",
        analytic.iter().copied().collect(),
        fd.iter().copied().collect(),
        Scale::Entrywise,
        tolerance,
    ))
}

/// Recovers `phi(t) = f(Y + tD)` from its values at [`QUARTIC_NODES`].
pub fn interpolate_quartic(
    instance: &ProblemInstance,
    y: &FactorMatrix,
    d: &Matrix,
) -> QuarticPolynomial {
    let vander = Matrix::from_fn(5, 5, |r, c| QUARTIC_NODES[r].powi(c as i32));
    let values = DVector::from_iterator(
        5,
        QUARTIC_NODES
            .iter()
            .map(|&t| reference_objective(instance, &(y.as_matrix() + d * t))),
    );
    let coeffs = vander
        .lu()
        .solve(&values)
        .expect("Vandermonde matrix on distinct nodes is nonsingular");
    QuarticPolynomial::new(coeffs[0], coeffs[1], coeffs[2], coeffs[3], coeffs[4])
}

/// Grid minimum of `phi` over `points` equally spaced `t` in `(0, t_max]`.
pub fn grid_minimum(p: &QuarticPolynomial, t_max: f64, points: usize) -> (f64, f64) {
    (1..=points)
        .map(|i| {
            let t = t_max * i as f64 / points as f64;
            (t, p.eval(t))
        })
        .fold((f64::NAN, f64::INFINITY), |best, cur| {
            if cur.1 < best.1 {
                cur
            } else {
                best
            }
        })
}

/// Real eigenvalues of the companion matrix of
/// `x^3 + c2 x^2 + c1 x + c0` (after dividing by `c3`), ascending.
pub fn companion_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let companion = Matrix::from_row_slice(
        3,
        3,
        &[0.0, 0.0, -c0 / c3, 1.0, 0.0, -c1 / c3, 0.0, 1.0, -c2 / c3],
    );
    let mut roots: Vec<f64> = companion
        .complex_eigenvalues()
        .iter()
        .filter(|z| z.im.abs() <= 1e-7 * (1.0 + z.re.abs()))
        .map(|z| z.re)
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    roots
}

/// Nearest PSD matrix of rank at most `k` to `a` in Frobenius norm: keep the
/// `k` largest eigenvalues of the symmetric part, clamped at zero.
pub fn psd_truncation(a: &Matrix, k: usize) -> Result<Matrix> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::shape("A", (n, n), a.shape()));
    }
    if k == 0 || k > n {
        return Err(Error::InvalidArgument(format!(
            "rank bound k = {k} outside 1..={n}"
        )));
    }
    let sym = (a + a.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let mut x = Matrix::zeros(n, n);
    for &i in order.iter().take(k) {
        let lambda = eig.eigenvalues[i];
        if lambda > 0.0 {
            let v = eig.eigenvectors.column(i);
            x += v * v.transpose() * lambda;
        }
    }
    Ok((&x + x.transpose()) * 0.5)
}

/// `sum_i ||A_i - B_i X B_i^T||_F^2` for an explicit `X`.
pub fn objective_at_x(instance: &ProblemInstance, x: &Matrix) -> f64 {
    instance
        .pairs()
        .iter()
        .map(|p| (&p.a - &p.b * x * p.b.transpose()).norm_squared())
        .sum()
}

#[derive(Debug, Clone)]
pub struct MultistartReport {
    /// Lowest final objective; ties go to the lowest start index.
    pub best: SolverResult,
    pub best_start: usize,
    /// Final objective per start, `None` where the start failed.
    pub final_objectives: Vec<Option<f64>>,
    /// `(start index, message)` for failed starts.
    pub failures: Vec<(usize, String)>,
}

impl MultistartReport {
    /// `(min, max)` over successful starts.
    pub fn spread(&self) -> (f64, f64) {
        self.final_objectives
            .iter()
            .flatten()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }
}

/// Solves from `num_starts` random starting points seeded `seed`,
/// `seed + 1`, ... and keeps the best.
pub fn multistart_solve(
    instance: &ProblemInstance,
    config: &SolverConfig,
    num_starts: usize,
    seed: u64,
) -> Result<MultistartReport> {
    if num_starts == 0 {
        return Err(Error::InvalidArgument(
            "num_starts must be at least 1".into(),
        ));
    }
    let runs = par::map_range(instance.execution(), num_starts, |i| {
        solve_seeded(instance, seed.wrapping_add(i as u64), config)
    });

    let mut best: Option<(usize, SolverResult)> = None;
    let mut final_objectives = Vec::with_capacity(num_starts);
    let mut failures = Vec::new();
    let mut first_error = None;
    for (i, run) in runs.into_iter().enumerate() {
        match run {
            Ok(r) => {
                let f = r.final_objective();
                final_objectives.push(Some(f));
                if best.as_ref().is_none_or(|(_, b)| f < b.final_objective()) {
                    best = Some((i, r));
                }
            }
            Err(e) => {
                final_objectives.push(None);
                failures.push((i, e.to_string()));
                first_error.get_or_insert(e);
            }
        }
    }
    match best {
        Some((best_start, best)) => Ok(MultistartReport {
            best,
            best_start,
            final_objectives,
            failures,
        }),
        None => Err(first_error.expect("at least one start ran")),
    }
}
