//! Exact line search along a direction `D`.
//!
//! Along `Y + tD` every residual is `M_i - t P_i - t^2 Q_i` with
//!
//! ```text
//! M_i = A_i - B_i Y Y^T B_i^T
//! P_i = B_i (Y D^T + D Y^T) B_i^T
//! Q_i = B_i D D^T B_i^T
//! ```
//!
//! so `phi(t) = f(Y + tD)` is a quartic whose coefficients are Frobenius
//! inner products of those three matrices. The minimizing step is a root of
//! the cubic `phi'(t)`.

mod cubic;

pub use cubic::{cubic_real_roots, eval_cubic, root_tolerance};

use crate::error::{Error, Result};
use crate::problem::{FactorMatrix, ProblemInstance};
use crate::Matrix;

/// `phi(t) = a4 t^4 + a3 t^3 + a2 t^2 + a1 t + a0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticPolynomial {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl QuarticPolynomial {
    pub fn new(a0: f64, a1: f64, a2: f64, a3: f64, a4: f64) -> Self {
        QuarticPolynomial { a0, a1, a2, a3, a4 }
    }

    /// Coefficients in ascending order `[a0, a1, a2, a3, a4]`.
    pub fn to_array(&self) -> [f64; 5] {
        [self.a0, self.a1, self.a2, self.a3, self.a4]
    }

    pub fn from_array(a: [f64; 5]) -> Self {
        QuarticPolynomial::new(a[0], a[1], a[2], a[3], a[4])
    }

    pub fn eval(&self, t: f64) -> f64 {
        (((self.a4 * t + self.a3) * t + self.a2) * t + self.a1) * t + self.a0
    }

    /// `phi'(t)` as cubic coefficients, highest degree first.
    pub fn derivative(&self) -> [f64; 4] {
        [4.0 * self.a4, 3.0 * self.a3, 2.0 * self.a2, self.a1]
    }

    pub fn eval_derivative(&self, t: f64) -> f64 {
        eval_cubic(&self.derivative(), t)
    }

    /// Below this `a4` the direction is treated as lying in the common null
    /// space of the `B_i`.
    pub fn degeneracy_threshold(&self) -> f64 {
        1e-14 * (1.0 + self.a0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    /// Minimizing step, strictly positive.
    pub t_star: f64,
    pub phi_at_t: f64,
    /// Real roots of `phi'`, ascending.
    pub critical_points: Vec<f64>,
}

/// Coefficients of `phi(t) = f(Y + tD)`.
pub fn quartic_coeffs(
    instance: &ProblemInstance,
    y: &FactorMatrix,
    d: &Matrix,
) -> Result<QuarticPolynomial> {
    instance.check_factor("Y", y)?;
    instance.check_factor("direction", d)?;
    let terms = instance.map_pairs(|p| {
        let c = &p.b * y.as_matrix();
        let e = &p.b * d;
        let m = &p.a - &c * c.transpose();
        let ce = &c * e.transpose();
        let pm = &ce + ce.transpose();
        let q = &e * e.transpose();
        [
            m.norm_squared(),
            -2.0 * m.dot(&pm),
            pm.norm_squared() - 2.0 * m.dot(&q),
            2.0 * pm.dot(&q),
            q.norm_squared(),
        ]
    });
    let mut acc = [0.0; 5];
    for t in terms {
        for (a, v) in acc.iter_mut().zip(t) {
            *a += v;
        }
    }
    Ok(QuarticPolynomial::from_array(acc))
}

/// Minimizes `phi` over `t > 0`.
///
/// Among the positive roots of `phi'` the one with smallest `phi` wins; ties
/// go to the smaller `t`. Fails with [`Error::DegenerateDirection`] when `a4`
/// is below [`QuarticPolynomial::degeneracy_threshold`], and with
/// [`Error::NoPositiveCriticalPoint`] when no positive critical point is at
/// least as good as `t = 0`.
pub fn minimize_quartic(p: &QuarticPolynomial) -> Result<StepResult> {
    let threshold = p.degeneracy_threshold();
    if !(p.a4 > threshold) {
        return Err(Error::DegenerateDirection {
            a4: p.a4,
            threshold,
        });
    }
    let [d3, d2, d1, d0] = p.derivative();
    let critical_points = cubic_real_roots(d3, d2, d1, d0)?;
    // values closer than a few ulps of a0 count as ties
    let tie = 8.0 * f64::EPSILON * p.a0.abs();
    let mut best: Option<(f64, f64)> = None;
    for &t in critical_points.iter().filter(|&&t| t > 0.0) {
        let v = p.eval(t);
        if best.is_none_or(|(_, bv)| v < bv - tie) {
            best = Some((t, v));
        }
    }
    match best {
        Some((t_star, phi_at_t)) if phi_at_t <= p.a0 => Ok(StepResult {
            t_star,
            phi_at_t,
            critical_points,
        }),
        _ => Err(Error::NoPositiveCriticalPoint { a1: p.a1 }),
    }
}
