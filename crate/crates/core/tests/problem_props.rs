mod common;

use common::*;
use proptest::prelude::*;
use psd_lowrank::oracle::{fd_gradient, gradient_check, reference_objective, DEFAULT_FD_STEP};
use psd_lowrank::problem::assemble_x;
use psd_lowrank::{FactorMatrix, Matrix, Pair, ProblemInstance};

/// The gradient exactly as the closed form reads, term by term.
fn verbatim_gradient(inst: &ProblemInstance, y: &Matrix) -> Matrix {
    let mut g = Matrix::zeros(y.nrows(), y.ncols());
    for p in inst.pairs() {
        let (a, b) = (&p.a, &p.b);
        let btb = b.transpose() * b;
        g += &btb * y * y.transpose() * &btb * y * 4.0;
        g -= b.transpose() * a * b * y * 2.0;
        g -= b.transpose() * a.transpose() * b * y * 2.0;
    }
    g
}

fn orthogonal(k: usize, seed: u64) -> Matrix {
    random_direction(k, k, seed).qr().q()
}

#[test]
fn gradient_matches_finite_differences() {
    for seed in 0..30 {
        let inst = random_instance(seed, 6, 3, 3, 6);
        let y = FactorMatrix::random(inst.n(), inst.k(), seed + 1000);
        let report = gradient_check(&inst, &y, 1e-6).unwrap();
        assert!(report.passed, "seed {seed}: {report}");
    }
}

#[test]
fn factored_gradient_matches_verbatim_form() {
    for seed in 0..30 {
        let inst = random_instance(seed, 8, 3, 3, 8);
        let y = FactorMatrix::random(inst.n(), inst.k(), seed);
        let g = inst.gradient(&y).unwrap();
        let v = verbatim_gradient(&inst, y.as_matrix());
        let rel = (g.as_matrix() - &v).norm() / v.norm().max(f64::MIN_POSITIVE);
        assert!(rel < 1e-12, "seed {seed}: {rel}");
    }
}

#[test]
fn central_differences_are_second_order() {
    // f is a quartic in each entry, so the central-difference error is exactly
    // h^2 f'''/6 and halving h divides it by four
    let inst = random_instance(3, 5, 2, 2, 5);
    let y = FactorMatrix::random(inst.n(), inst.k(), 9);
    let g = inst.gradient(&y).unwrap();
    let e1 = (fd_gradient(&inst, &y, 1e-2).as_matrix() - g.as_matrix()).norm();
    let e2 = (fd_gradient(&inst, &y, 5e-3).as_matrix() - g.as_matrix()).norm();
    let ratio = e1 / e2;
    assert!((3.8..4.2).contains(&ratio), "error ratio {ratio}");
}

#[test]
fn fd_default_step_on_example() {
    let inst = worked_example(2);
    let y = y0_case1();
    let fd = fd_gradient(&inst, &y, DEFAULT_FD_STEP);
    let g = inst.gradient(&y).unwrap();
    assert!((fd.as_matrix() - g.as_matrix()).abs().max() < 1e-6 * g.abs().max());
}

#[test]
fn m1_residual_squared_is_objective() {
    for seed in 0..10 {
        let inst = random_instance(seed, 6, 3, 1, 6);
        let y = FactorMatrix::random(inst.n(), inst.k(), seed);
        let eps = inst.residual_error(&y).unwrap();
        let a_norm = inst.pairs()[0].a.norm();
        let f = inst.objective(&y).unwrap();
        assert!((eps * eps * a_norm * a_norm - f).abs() <= 1e-12 * f.max(1.0));
    }
}

#[test]
fn objective_zero_only_at_exact_fit() {
    let z = FactorMatrix::random(3, 2, 4);
    let b = random_direction(2, 3, 5);
    let inst = ProblemInstance::new(
        vec![Pair::new(&b * assemble_x(&z) * b.transpose(), b)],
        3,
        2,
    )
    .unwrap();
    assert!(inst.objective(&z).unwrap() < 1e-28);
    let off = FactorMatrix::new(z.as_matrix() * 1.01).unwrap();
    assert!(inst.objective(&off).unwrap() > 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig { failure_persistence: None, ..ProptestConfig::with_cases(48) })]

    #[test]
    fn objective_is_nonnegative_and_matches_reference(seed in any::<u64>(), yseed in any::<u64>()) {
        let inst = random_instance(seed, 6, 3, 3, 6);
        let y = FactorMatrix::random(inst.n(), inst.k(), yseed);
        let f = inst.objective(&y).unwrap();
        prop_assert!(f >= 0.0);
        let f_ref = reference_objective(&inst, y.as_matrix());
        prop_assert!((f - f_ref).abs() <= 1e-12 * f_ref.max(1.0));
    }

    #[test]
    fn right_orthogonal_invariance(seed in any::<u64>(), qseed in any::<u64>()) {
        let inst = random_instance(seed, 6, 3, 3, 6);
        let y = FactorMatrix::random(inst.n(), inst.k(), seed.wrapping_add(1));
        let q = orthogonal(inst.k(), qseed);
        let yq = FactorMatrix::new(y.as_matrix() * &q).unwrap();
        let f = inst.objective(&y).unwrap();
        let fq = inst.objective(&yq).unwrap();
        prop_assert!((f - fq).abs() <= 1e-10 * f.max(1.0));
        let g = inst.gradient(&y).unwrap();
        let gq = inst.gradient(&yq).unwrap();
        let expected = g.as_matrix() * &q;
        prop_assert!((gq.as_matrix() - &expected).norm() <= 1e-10 * expected.norm().max(1.0));
    }

    #[test]
    fn assembled_x_is_psd_with_bounded_rank(n in 1usize..8, kk in 1usize..4, seed in any::<u64>()) {
        let k = kk.min(n);
        let y = FactorMatrix::new(random_direction(n, k, seed) * 3.0).unwrap();
        let x = assemble_x(&y);
        prop_assert_eq!(&x, &x.transpose());
        let scale = 1.0 + x.norm();
        let (min_eig, next_sv) = psd_margins(&x, k);
        prop_assert!(min_eig >= -1e-10 * scale);
        prop_assert!(next_sv <= 1e-10 * scale);
    }
}
