//! Real roots of polynomials of degree at most three.

use std::f64::consts::PI;

use crate::error::{Error, Result};

const POLISH_STEPS: usize = 8;

/// All real roots of `c3 x^3 + c2 x^2 + c1 x + c0`, ascending.
///
/// Leading zero coefficients drop the degree (quadratic, linear). A nonzero
/// constant has no roots; the zero polynomial is an error. Roots are found in
/// closed form (Cardano, or the trigonometric form when all three are real)
/// and then polished by Newton steps on the original coefficients.
pub fn cubic_real_roots(c3: f64, c2: f64, c1: f64, c0: f64) -> Result<Vec<f64>> {
    if ![c3, c2, c1, c0].iter().all(|c| c.is_finite()) {
        return Err(Error::InvalidArgument(
            "cubic coefficients must be finite".into(),
        ));
    }
    let coeffs = [c3, c2, c1, c0];
    let candidates = if c3 != 0.0 {
        cubic_candidates(c2 / c3, c1 / c3, c0 / c3)
    } else if c2 != 0.0 {
        quadratic_roots(c2, c1, c0)
    } else if c1 != 0.0 {
        vec![-c0 / c1]
    } else if c0 != 0.0 {
        Vec::new()
    } else {
        return Err(Error::ZeroPolynomial);
    };

    let mut roots: Vec<f64> = candidates
        .into_iter()
        .filter(|x| x.is_finite())
        .map(|x| polish(&coeffs, x))
        .filter(|&x| within_tolerance(&coeffs, x))
        .collect();
    roots.sort_by(|a, b| a.total_cmp(b));
    // a double root is only resolved to about sqrt(eps)
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-7 * (1.0 + b.abs()));
    Ok(roots)
}

/// `c3 x^3 + c2 x^2 + c1 x + c0` by Horner's rule.
pub fn eval_cubic(coeffs: &[f64; 4], x: f64) -> f64 {
    ((coeffs[0] * x + coeffs[1]) * x + coeffs[2]) * x + coeffs[3]
}

/// Residual bound a returned root must meet.
pub fn root_tolerance(coeffs: &[f64; 4], x: f64) -> f64 {
    let scale = coeffs.iter().fold(1.0_f64, |m, c| m.max(c.abs()));
    1e-12 * scale * (1.0 + x.abs()).powi(3)
}

fn within_tolerance(coeffs: &[f64; 4], x: f64) -> bool {
    eval_cubic(coeffs, x).abs() <= root_tolerance(coeffs, x)
}

fn polish(coeffs: &[f64; 4], mut x: f64) -> f64 {
    let d = [0.0, 3.0 * coeffs[0], 2.0 * coeffs[1], coeffs[2]];
    let mut px = eval_cubic(coeffs, x).abs();
    for _ in 0..POLISH_STEPS {
        if px == 0.0 {
            break;
        }
        let dx = eval_cubic(&d, x);
        if dx == 0.0 {
            break;
        }
        let next = x - eval_cubic(coeffs, x) / dx;
        let pn = eval_cubic(coeffs, next).abs();
        if !(pn < px) {
            break;
        }
        x = next;
        px = pn;
    }
    x
}

/// Candidates for the monic cubic `x^3 + a x^2 + b x + c`.
fn cubic_candidates(a: f64, b: f64, c: f64) -> Vec<f64> {
    let shift = a / 3.0;
    // depressed: t^3 + p t + q with x = t - a/3
    let p = b - a * a / 3.0;
    let q = 2.0 * a * a * a / 27.0 - a * b / 3.0 + c;
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;

    let ts: Vec<f64> = if p == 0.0 && q == 0.0 {
        vec![0.0]
    } else if disc > 0.0 {
        let s = disc.sqrt();
        let w = if half_q >= 0.0 {
            -half_q - s
        } else {
            -half_q + s
        };
        let u = w.cbrt();
        let v = if u != 0.0 { -third_p / u } else { 0.0 };
        let t = u + v;
        // -t/2 is the real part of the complex pair; it is a genuine double
        // root when disc is zero up to rounding, and is kept only if it passes
        // the residual test.
        vec![t, -t / 2.0]
    } else {
        let m = 2.0 * (-third_p).sqrt();
        let arg = (3.0 * q / (2.0 * p) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
        let theta = arg.acos() / 3.0;
        (0..3)
            .map(|j| m * (theta - 2.0 * PI * j as f64 / 3.0).cos())
            .collect()
    };
    ts.into_iter().map(|t| t - shift).collect()
}

fn quadratic_roots(c2: f64, c1: f64, c0: f64) -> Vec<f64> {
    let mut disc = c1 * c1 - 4.0 * c2 * c0;
    if disc < 0.0 {
        if disc >= -4.0 * f64::EPSILON * (c1 * c1 + (4.0 * c2 * c0).abs()) {
            disc = 0.0;
        } else {
            return Vec::new();
        }
    }
    let s = disc.sqrt();
    let q = -0.5 * (c1 + if c1 >= 0.0 { s } else { -s });
    if q == 0.0 {
        return vec![0.0];
    }
    vec![q / c2, c0 / q]
}
