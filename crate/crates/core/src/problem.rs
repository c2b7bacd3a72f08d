//! Problem instances, the objective `f(Y)`, its gradient, the relative
//! residual, and the PSD assembly `X = Y Y^T`.

use std::fmt;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::par::{self, Execution};
use crate::Matrix;

/// One observation: `A` is `m_i x m_i`, `B` is `m_i x n`.
///
/// `A` need not be symmetric.
#[derive(Debug, Clone, PartialEq)]
pub struct Pair {
    pub a: Matrix,
    pub b: Matrix,
}

impl Pair {
    pub fn new(a: Matrix, b: Matrix) -> Self {
        Pair { a, b }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    EmptyInstance,
    RankOutOfRange {
        k: usize,
        n: usize,
    },
    /// `pair` is a zero-based index; messages number pairs from 1.
    DimensionMismatch {
        pair: usize,
        what: &'static str,
        expected: usize,
        actual: usize,
    },
    NonFinite {
        pair: usize,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyInstance => write!(f, "instance has no pairs"),
            Violation::RankOutOfRange { k, n } => {
                write!(f, "rank bound k = {k} outside 1..={n}")
            }
            Violation::DimensionMismatch {
                pair,
                what,
                expected,
                actual,
            } => write!(
                f,
                "pair {}: {what} expected {expected}, got {actual}",
                pair + 1
            ),
            Violation::NonFinite { pair } => write!(f, "pair {}: non-finite entry", pair + 1),
        }
    }
}

/// Outcome of [`validate`]; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return write!(f, "valid");
        }
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks every structural invariant of an instance and reports all
/// violations rather than stopping at the first.
pub fn validate(pairs: &[Pair], n: usize, k: usize) -> ValidationReport {
    let mut violations = Vec::new();
    if pairs.is_empty() {
        violations.push(Violation::EmptyInstance);
    }
    if k == 0 || k > n {
        violations.push(Violation::RankOutOfRange { k, n });
    }
    for (i, p) in pairs.iter().enumerate() {
        if p.a.nrows() != p.a.ncols() {
            violations.push(Violation::DimensionMismatch {
                pair: i,
                what: "A column count (A must be square)",
                expected: p.a.nrows(),
                actual: p.a.ncols(),
            });
        }
        if p.b.nrows() != p.a.nrows() {
            violations.push(Violation::DimensionMismatch {
                pair: i,
                what: "B row count (must equal side of A)",
                expected: p.a.nrows(),
                actual: p.b.nrows(),
            });
        }
        if p.b.ncols() != n {
            violations.push(Violation::DimensionMismatch {
                pair: i,
                what: "B column count",
                expected: n,
                actual: p.b.ncols(),
            });
        }
        if p.a.iter().chain(p.b.iter()).any(|v| !v.is_finite()) {
            violations.push(Violation::NonFinite { pair: i });
        }
    }
    ValidationReport { violations }
}

/// A validated instance: pairs `(A_i, B_i)`, column dimension `n` and rank
/// bound `k`.
#[derive(Debug, Clone)]
pub struct ProblemInstance {
    pairs: Vec<Pair>,
    n: usize,
    k: usize,
    a_norm_sum: f64,
    execution: Execution,
}

impl PartialEq for ProblemInstance {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.k == other.k && self.pairs == other.pairs
    }
}

impl ProblemInstance {
    pub fn new(pairs: Vec<Pair>, n: usize, k: usize) -> Result<Self> {
        let report = validate(&pairs, n, k);
        if !report.is_valid() {
            return Err(Error::Invalid(report));
        }
        let a_norm_sum = pairs.iter().fold(0.0, |acc, p| acc + p.a.norm());
        Ok(ProblemInstance {
            pairs,
            n,
            k,
            a_norm_sum,
            execution: Execution::default(),
        })
    }

    /// Same data with a different rank bound.
    pub fn with_rank(&self, k: usize) -> Result<Self> {
        let mut out = ProblemInstance::new(self.pairs.clone(), self.n, k)?;
        out.execution = self.execution;
        Ok(out)
    }

    pub fn with_execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn execution(&self) -> Execution {
        self.execution
    }

    pub fn pairs(&self) -> &[Pair] {
        &self.pairs
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of pairs.
    pub fn m(&self) -> usize {
        self.pairs.len()
    }

    /// `sum_i ||A_i||_F`, the denominator of the relative residual.
    pub fn a_norm_sum(&self) -> f64 {
        self.a_norm_sum
    }

    pub(crate) fn check_factor(&self, what: &'static str, y: &Matrix) -> Result<()> {
        if y.shape() != (self.n, self.k) {
            return Err(Error::shape(what, (self.n, self.k), y.shape()));
        }
        Ok(())
    }

    /// Maps `f` over the pairs, honouring the instance's execution mode.
    pub(crate) fn map_pairs<R, F>(&self, f: F) -> Vec<R>
    where
        R: Send,
        F: Fn(&Pair) -> R + Sync + Send,
    {
        par::map(self.execution, &self.pairs, |_, p| f(p))
    }

    /// `||A_i - B_i Y Y^T B_i^T||_F^2` for every pair, in pair order.
    pub fn residual_norms_sq(&self, y: &FactorMatrix) -> Result<Vec<f64>> {
        self.check_factor("Y", y)?;
        Ok(self.map_pairs(|p| residual(p, y).norm_squared()))
    }

    /// `f(Y) = sum_i ||A_i - B_i Y Y^T B_i^T||_F^2`.
    pub fn objective(&self, y: &FactorMatrix) -> Result<f64> {
        Ok(self
            .residual_norms_sq(y)?
            .into_iter()
            .fold(0.0, |acc, v| acc + v))
    }

    /// Analytic gradient
    /// `sum_i 4 B^T B Y Y^T B^T B Y - 2 B^T A B Y - 2 B^T A^T B Y`,
    /// evaluated in the factored form `2 B^T (2 C C^T - A - A^T) C` with
    /// `C = B Y`.
    pub fn gradient(&self, y: &FactorMatrix) -> Result<GradientMatrix> {
        self.check_factor("Y", y)?;
        let terms = self.map_pairs(|p| {
            let c = &p.b * y.as_matrix();
            let mut s = &c * c.transpose() * 2.0;
            s -= &p.a;
            s -= p.a.transpose();
            p.b.tr_mul(&(s * c)) * 2.0
        });
        let mut g = Matrix::zeros(self.n, self.k);
        for t in terms {
            g += t;
        }
        Ok(GradientMatrix(g))
    }

    /// Relative residual `sum_i ||A_i - B_i Y Y^T B_i^T||_F / sum_i ||A_i||_F`.
    pub fn residual_error(&self, y: &FactorMatrix) -> Result<f64> {
        let norms = self.residual_norms_sq(y)?;
        self.residual_error_from(&norms)
    }

    /// Relative residual from precomputed squared residual norms.
    pub fn residual_error_from(&self, norms_sq: &[f64]) -> Result<f64> {
        if self.a_norm_sum == 0.0 {
            return Err(Error::DegenerateInstance);
        }
        let num = norms_sq.iter().fold(0.0, |acc, v| acc + v.sqrt());
        Ok(num / self.a_norm_sum)
    }
}

fn residual(p: &Pair, y: &FactorMatrix) -> Matrix {
    let c = &p.b * y.as_matrix();
    &p.a - &c * c.transpose()
}

/// `X = Y Y^T`, symmetrized exactly.
pub fn assemble_x(y: &FactorMatrix) -> Matrix {
    let x = y.as_matrix() * y.as_matrix().transpose();
    (&x + x.transpose()) * 0.5
}

/// The `n x k` factor `Y` with `X = Y Y^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorMatrix(Matrix);

impl FactorMatrix {
    /// Wraps `y`, rejecting non-finite entries.
    pub fn new(y: Matrix) -> Result<Self> {
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "factor matrix has non-finite entries".into(),
            ));
        }
        Ok(FactorMatrix(y))
    }

    pub fn zeros(n: usize, k: usize) -> Self {
        FactorMatrix(Matrix::zeros(n, k))
    }

    /// Entries uniform on `[0, 1)` from a ChaCha8 stream seeded with `seed`.
    pub fn random(n: usize, k: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        FactorMatrix::random_with(n, k, &mut rng)
    }

    /// Entries uniform on `[0, 1)`, filled row-major.
    pub fn random_with<R: Rng>(n: usize, k: usize, rng: &mut R) -> Self {
        FactorMatrix(uniform_matrix(n, k, rng))
    }

    pub(crate) fn from_raw(y: Matrix) -> Self {
        FactorMatrix(y)
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

impl Deref for FactorMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Gradient of `f` at some `Y`, same shape as `Y`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientMatrix(Matrix);

impl GradientMatrix {
    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_inner(self) -> Matrix {
        self.0
    }
}

impl From<Matrix> for GradientMatrix {
    fn from(g: Matrix) -> Self {
        GradientMatrix(g)
    }
}

impl Deref for GradientMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

/// Row-major fill with uniform `[0, 1)` entries.
pub(crate) fn uniform_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Matrix {
    let data: Vec<f64> = (0..rows * cols).map(|_| rng.gen::<f64>()).collect();
    Matrix::from_row_slice(rows, cols, &data)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye_instance() -> ProblemInstance {
        ProblemInstance::new(
            vec![Pair::new(Matrix::identity(2, 2), Matrix::identity(2, 2))],
            2,
            1,
        )
        .unwrap()
    }

    #[test]
    fn validate_accepts_consistent_shapes() {
        let p = Pair::new(Matrix::zeros(4, 4), Matrix::zeros(4, 4));
        assert!(validate(&[p], 4, 2).is_valid());
    }

    #[test]
    fn validate_flags_non_square_a() {
        let p = Pair::new(Matrix::zeros(3, 4), Matrix::zeros(3, 4));
        let r = validate(&[p], 4, 2);
        assert!(matches!(
            r.violations[..],
            [Violation::DimensionMismatch {
                pair: 0,
                expected: 3,
                actual: 4,
                ..
            }]
        ));
    }

    #[test]
    fn validate_flags_rank_out_of_range() {
        let p = Pair::new(Matrix::zeros(4, 4), Matrix::zeros(4, 4));
        let r = validate(&[p], 4, 5);
        assert_eq!(r.violations, vec![Violation::RankOutOfRange { k: 5, n: 4 }]);
        assert!(!validate(&[], 4, 0).is_valid());
    }

    #[test]
    fn validate_flags_empty_and_b_mismatch() {
        assert_eq!(
            validate(&[], 3, 1).violations,
            vec![Violation::EmptyInstance]
        );
        let bad = Pair::new(Matrix::zeros(2, 2), Matrix::zeros(3, 5));
        let r = validate(
            &[Pair::new(Matrix::zeros(1, 1), Matrix::zeros(1, 4)), bad],
            4,
            1,
        );
        assert_eq!(r.violations.len(), 2);
        assert!(r
            .violations
            .iter()
            .all(|v| matches!(v, Violation::DimensionMismatch { pair: 1, .. })));
    }

    #[test]
    fn new_rejects_invalid() {
        let err = ProblemInstance::new(vec![], 2, 1).unwrap_err();
        assert!(matches!(err, Error::Invalid(_)));
    }

    #[test]
    fn objective_hand_computed() {
        let inst = eye_instance();
        let y = FactorMatrix::new(Matrix::from_column_slice(2, 1, &[1.0, 0.0])).unwrap();
        assert_eq!(inst.objective(&y).unwrap(), 1.0);
        let g = inst.gradient(&y).unwrap();
        assert_eq!(g.norm(), 0.0);
    }

    #[test]
    fn zero_factor() {
        let a = Matrix::from_row_slice(2, 2, &[1.0, 2.0, -3.0, 0.5]);
        let b = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 2.0, 0.0, 1.0, 1.0]);
        let inst = ProblemInstance::new(vec![Pair::new(a.clone(), b)], 3, 2).unwrap();
        let y = FactorMatrix::zeros(3, 2);
        assert_eq!(inst.objective(&y).unwrap(), a.norm_squared());
        assert_eq!(inst.gradient(&y).unwrap().norm(), 0.0);
        assert_eq!(inst.residual_error(&y).unwrap(), 1.0);
    }

    #[test]
    fn shape_mismatch_is_reported() {
        let inst = eye_instance();
        let y = FactorMatrix::zeros(2, 2);
        assert!(matches!(inst.objective(&y), Err(Error::Shape { .. })));
        assert!(matches!(inst.gradient(&y), Err(Error::Shape { .. })));
    }

    #[test]
    fn residual_zero_at_exact_fit() {
        let y = FactorMatrix::new(Matrix::from_row_slice(3, 1, &[1.0, 2.0, 0.5])).unwrap();
        let b = Matrix::from_row_slice(2, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0]);
        let a = &b * assemble_x(&y) * b.transpose();
        let inst = ProblemInstance::new(vec![Pair::new(a, b)], 3, 1).unwrap();
        assert!(inst.residual_error(&y).unwrap() < 1e-15);
    }

    #[test]
    fn residual_of_all_zero_instance_is_degenerate() {
        let inst = ProblemInstance::new(
            vec![Pair::new(Matrix::zeros(2, 2), Matrix::identity(2, 2))],
            2,
            1,
        )
        .unwrap();
        let y = FactorMatrix::zeros(2, 1);
        assert!(matches!(
            inst.residual_error(&y),
            Err(Error::DegenerateInstance)
        ));
    }

    #[test]
    fn assemble_x_examples() {
        assert_eq!(assemble_x(&FactorMatrix::zeros(3, 2)), Matrix::zeros(3, 3));
        let y = FactorMatrix::new(Matrix::from_row_slice(
            3,
            2,
            &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
        ))
        .unwrap();
        assert_eq!(
            assemble_x(&y),
            Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![1.0, 1.0, 0.0]))
        );
    }

    #[test]
    fn factor_rejects_nan() {
        assert!(FactorMatrix::new(Matrix::from_element(1, 1, f64::NAN)).is_err());
    }

    #[test]
    fn scalar_pair_allowed() {
        let inst = ProblemInstance::new(
            vec![Pair::new(
                Matrix::from_element(1, 1, 4.0),
                Matrix::from_element(1, 1, 1.0),
            )],
            1,
            1,
        )
        .unwrap();
        let y = FactorMatrix::new(Matrix::from_element(1, 1, 2.0)).unwrap();
        assert_eq!(inst.objective(&y).unwrap(), 0.0);
    }
}
