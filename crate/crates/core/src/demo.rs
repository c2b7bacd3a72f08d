//! Image-restoration demo.
//!
//! A grayscale image `G` (rows scaled to `[0, 1]`) defines the ground truth
//! `X_true = G G^T / ||G G^T||_F`. Each observation is
//! `A_i = B_i X_true B_i^T` where `B_i` keeps a random three quarters of the
//! rows of `I + sigma E_i` (`E_i` uniform on `[-1, 1)`). The solver then
//! restores a rank-`k` PSD `X` from the observations alone.
//!
//! The transforms are illustrative choices, not a reproduction of any
//! published data set.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use image::{GrayImage, Luma};
use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::io::{format_matrix, format_trace};
use crate::problem::{FactorMatrix, Pair, ProblemInstance};
use crate::solver::{solve, SolverConfig, Termination};
use crate::Matrix;

/// Largest accepted image height; `X` is dense `n x n`.
pub const MAX_SIDE: usize = 512;

/// Perturbation scale of the transforms.
pub const PERTURBATION: f64 = 0.1;

#[derive(Debug, Clone)]
pub struct DemoOptions {
    /// Number of observations.
    pub m: usize,
    /// Rank bound of the restored `X`.
    pub k: usize,
    pub seed: u64,
    pub config: SolverConfig,
}

#[derive(Debug, Clone)]
pub struct DemoReport {
    pub n: usize,
    pub k: usize,
    pub m: usize,
    /// `||X - X_true||_F / ||X_true||_F`.
    pub relative_error: f64,
    /// `||A_i - B_i X B_i^T||_F / ||A_i||_F` per observation.
    pub observation_residuals: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
}

impl DemoReport {
    pub fn to_text(&self) -> String {
        let mut out = String::from("# psd-lowrank image demo (illustrative transforms)\n");
        let _ = writeln!(out, "n {}", self.n);
        let _ = writeln!(out, "k {}", self.k);
        let _ = writeln!(out, "m {}", self.m);
        let _ = writeln!(out, "termination {}", self.termination);
        let _ = writeln!(out, "iterations {}", self.iterations);
        let _ = writeln!(out, "converged {}", self.converged);
        let _ = writeln!(out, "objective {:.15e}", self.objective);
        let _ = writeln!(out, "relative_error {:.15e}", self.relative_error);
        for (i, r) in self.observation_residuals.iter().enumerate() {
            let _ = writeln!(out, "observation {} residual {:.15e}", i + 1, r);
        }
        out
    }
}

/// Image rows scaled to `[0, 1]`.
pub fn load_grayscale(path: impl AsRef<Path>) -> Result<Matrix> {
    let img = image::ImageReader::open(path)?
        .with_guessed_format()?
        .decode()?
        .to_luma8();
    let (w, h) = img.dimensions();
    Ok(Matrix::from_fn(h as usize, w as usize, |r, c| {
        img.get_pixel(c as u32, r as u32)[0] as f64 / 255.0
    }))
}

/// `G G^T / ||G G^T||_F`.
pub fn ground_truth(g: &Matrix) -> Result<Matrix> {
    let x = g * g.transpose();
    let norm = x.norm();
    if norm == 0.0 {
        return Err(Error::InvalidArgument("image is entirely black".into()));
    }
    Ok((&x + x.transpose()) * (0.5 / norm))
}

/// `m` seeded transforms: three quarters of the rows of `I + sigma E`.
pub fn transforms(n: usize, m: usize, seed: u64) -> Vec<Matrix> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let keep = (3 * n).div_ceil(4).max(1);
    let noise = Uniform::new(-1.0, 1.0);
    (0..m)
        .map(|_| {
            let mut rows = rand::seq::index::sample(&mut rng, n, keep).into_vec();
            rows.sort_unstable();
            let mut b = Matrix::zeros(keep, n);
            for (r, &src) in rows.iter().enumerate() {
                for c in 0..n {
                    let base = if c == src { 1.0 } else { 0.0 };
                    b[(r, c)] = base + PERTURBATION * noise.sample(&mut rng);
                }
            }
            b
        })
        .collect()
}

/// Builds the observation instance for a ground truth.
pub fn observations(x_true: &Matrix, m: usize, k: usize, seed: u64) -> Result<ProblemInstance> {
    let n = x_true.nrows();
    let pairs = transforms(n, m, seed)
        .into_iter()
        .map(|b| {
            let a = &b * x_true * b.transpose();
            Pair::new((&a + a.transpose()) * 0.5, b)
        })
        .collect();
    ProblemInstance::new(pairs, n, k)
}

fn to_image(x: &Matrix) -> GrayImage {
    let (lo, hi) = x
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
            (l.min(v), h.max(v))
        });
    let span = if hi > lo { hi - lo } else { 1.0 };
    GrayImage::from_fn(x.ncols() as u32, x.nrows() as u32, |c, r| {
        let v = (x[(r as usize, c as usize)] - lo) / span;
        Luma([(v * 255.0).round().clamp(0.0, 255.0) as u8])
    })
}

/// Restores `X_true` from `options.m` observations of the image at `input`
/// and writes `report.txt`, `x_restored.txt`, `restored.pgm`, `truth.pgm`
/// and `trace.csv` into `output_dir`.
pub fn image_demo(
    input: impl AsRef<Path>,
    options: &DemoOptions,
    output_dir: impl AsRef<Path>,
) -> Result<DemoReport> {
    let g = load_grayscale(input)?;
    let n = g.nrows();
    if n > MAX_SIDE {
        return Err(Error::InvalidArgument(format!(
            "image has {n} rows; at most {MAX_SIDE} are supported (X is dense n x n)"
        )));
    }
    if options.m == 0 {
        return Err(Error::InvalidArgument(
            "need at least one observation".into(),
        ));
    }
    let x_true = ground_truth(&g)?;
    let instance = observations(&x_true, options.m, options.k, options.seed)?;
    let y0 = FactorMatrix::random(n, options.k, options.seed);
    let result = solve(&instance, &y0, &options.config)?;

    let norms = instance.residual_norms_sq(&result.y)?;
    let observation_residuals = norms
        .iter()
        .zip(instance.pairs())
        .map(|(r, p)| r.sqrt() / p.a.norm())
        .collect();
    let report = DemoReport {
        n,
        k: options.k,
        m: options.m,
        relative_error: (&result.x - &x_true).norm() / x_true.norm(),
        observation_residuals,
        objective: result.final_objective(),
        iterations: result.iterations,
        converged: result.converged,
        termination: result.termination,
    };

    let dir = output_dir.as_ref();
    fs::create_dir_all(dir)?;
    fs::write(dir.join("report.txt"), report.to_text())?;
    fs::write(dir.join("x_restored.txt"), format_matrix(&result.x))?;
    fs::write(dir.join("trace.csv"), format_trace(&result.trace))?;
    to_image(&result.x).save(dir.join("restored.pgm"))?;
    to_image(&x_true).save(dir.join("truth.pgm"))?;
    Ok(report)
}
