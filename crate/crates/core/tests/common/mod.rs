#![allow(dead_code)]

use psd_lowrank::io::{generate_instance, GenerateMode, GenerateSpec};
use psd_lowrank::{FactorMatrix, Matrix, Pair, ProblemInstance};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const A1: [f64; 16] = [
    0.6938, 0.1093, 0.0503, 0.8637, //
    0.9452, 0.3899, 0.2287, 0.0781, //
    0.7842, 0.5909, 0.8342, 0.6690, //
    0.7056, 0.4594, 0.0156, 0.5002,
];
pub const A2: [f64; 16] = [
    0.2180, 0.5996, 0.0196, 0.5201, //
    0.5716, 0.0560, 0.4352, 0.8639, //
    0.1222, 0.0563, 0.8322, 0.0977, //
    0.6712, 0.1523, 0.6174, 0.9081,
];
pub const B1: [f64; 16] = [
    0.1080, 0.0046, 0.9870, 0.5078, //
    0.5170, 0.7667, 0.5051, 0.5856, //
    0.1432, 0.8487, 0.2714, 0.7629, //
    0.5594, 0.9168, 0.1008, 0.0830,
];
pub const B2: [f64; 16] = [
    0.6616, 0.5905, 0.4519, 0.6801, //
    0.5170, 0.4406, 0.8397, 0.3672, //
    0.1710, 0.9419, 0.5326, 0.2393, //
    0.9386, 0.6559, 0.5539, 0.5789,
];
pub const Y0_CASE1: [f64; 8] = [
    0.8669, 0.3002, //
    0.4068, 0.4014, //
    0.1126, 0.8334, //
    0.4438, 0.4036,
];
pub const Y0_CASE2: [f64; 12] = [
    0.5211, 0.6791, 0.0377, //
    0.2316, 0.3955, 0.8852, //
    0.4889, 0.3674, 0.9133, //
    0.6241, 0.9880, 0.7962,
];
/// Reference factor of case I, as published to four decimals.
pub const Y_HAT_CASE1: [f64; 8] = [
    0.7015, -1.0397, //
    -0.7793, 0.3971, //
    -0.5158, -0.2175, //
    -0.1875, -0.0296,
];
/// Reference solution of case I. The published (0,3) entry reads +0.1008
/// while (3,0) reads -0.1008; the reference factor gives -0.1008, used here.
pub const X_HAT: [f64; 16] = [
    1.5731, -0.9596, -0.1357, -0.1008, //
    -0.9596, 0.7651, 0.3156, 0.1344, //
    -0.1357, 0.3156, 0.3133, 0.1032, //
    -0.1008, 0.1344, 0.1032, 0.0360,
];
/// Case II prints 0.7650 at (1,1), otherwise identical.
pub const X_HAT_CASE2: [f64; 16] = [
    1.5731, -0.9596, -0.1357, -0.1008, //
    -0.9596, 0.7650, 0.3156, 0.1344, //
    -0.1357, 0.3156, 0.3133, 0.1032, //
    -0.1008, 0.1344, 0.1032, 0.0360,
];

pub fn rows(r: usize, c: usize, v: &[f64]) -> Matrix {
    Matrix::from_row_slice(r, c, v)
}

pub fn worked_example(k: usize) -> ProblemInstance {
    ProblemInstance::new(
        vec![
            Pair::new(rows(4, 4, &A1), rows(4, 4, &B1)),
            Pair::new(rows(4, 4, &A2), rows(4, 4, &B2)),
        ],
        4,
        k,
    )
    .unwrap()
}

pub fn y0_case1() -> FactorMatrix {
    FactorMatrix::new(rows(4, 2, &Y0_CASE1)).unwrap()
}

pub fn y0_case2() -> FactorMatrix {
    FactorMatrix::new(rows(4, 3, &Y0_CASE2)).unwrap()
}

/// Random instance with `n <= max_n`, `k <= min(max_k, n)`, `m <= max_m`
/// pairs of side `<= max_side`, every entry uniform on `[0, 1)`.
pub fn random_instance(
    seed: u64,
    max_n: usize,
    max_k: usize,
    max_m: usize,
    max_side: usize,
) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
    let n = rng.gen_range(1..=max_n);
    let k = rng.gen_range(1..=max_k.min(n));
    let m = rng.gen_range(1..=max_m);
    let sizes = (0..m).map(|_| rng.gen_range(1..=max_side)).collect();
    generate_instance(&GenerateSpec {
        n,
        k,
        sizes,
        seed,
        mode: GenerateMode::Random,
    })
    .unwrap()
}

/// Consistent (planted) instance with the same size ranges.
pub fn planted_instance(
    seed: u64,
    max_n: usize,
    max_k: usize,
    max_m: usize,
    max_side: usize,
) -> ProblemInstance {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x91a7);
    let n = rng.gen_range(2..=max_n);
    let k = rng.gen_range(1..=max_k.min(n));
    let m = rng.gen_range(1..=max_m);
    let sizes = (0..m).map(|_| rng.gen_range(1..=max_side)).collect();
    generate_instance(&GenerateSpec {
        n,
        k,
        sizes,
        seed,
        mode: GenerateMode::Consistent,
    })
    .unwrap()
}

/// Standard normal-ish direction: uniform on `[-1, 1)`.
pub fn random_direction(n: usize, k: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xd1ec);
    Matrix::from_fn(n, k, |_, _| rng.gen_range(-1.0..1.0))
}

/// `min eigenvalue` and `(k+1)`-th singular value of `x`.
pub fn psd_margins(x: &Matrix, k: usize) -> (f64, f64) {
    let eig = nalgebra::SymmetricEigen::new(x.clone());
    let min_eig = eig
        .eigenvalues
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let mut sv: Vec<f64> = x
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let next = sv.get(k).copied().unwrap_or(0.0);
    (min_eig, next)
}
