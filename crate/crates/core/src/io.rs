//! Plain-text formats and seeded instance generation.
//!
//! Problem file (`#` starts a comment line, blank lines are ignored):
//!
//! ```text
//! # psd-lowrank problem
//! m 2
//! n 4
//! k 2
//! pair 1 4
//! A
//! <4 rows of 4 numbers>
//! B
//! <4 rows of 4 numbers>
//! pair 2 4
//! ...
//! ```
//!
//! Problem files are written with the shortest decimal that reads back to the
//! same `f64`, so write, read, write is byte-stable. Matrix files (used for
//! starting points) are a `rows cols` line followed by the rows. The trace is
//! CSV with header `iteration,f,grad_norm,residual,step,beta`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::problem::{uniform_matrix, Pair, ProblemInstance};
use crate::solver::{IterationRecord, SolverResult, Termination};
use crate::Matrix;

pub const TRACE_HEADER: &str = "iteration,f,grad_norm,residual,step,beta";

fn exact(v: f64) -> String {
    format!("{v:e}")
}

/// 16 significant digits.
fn sig16(v: f64) -> String {
    format!("{v:.15e}")
}

fn write_rows(out: &mut String, m: &Matrix, fmt: fn(f64) -> String) {
    for r in 0..m.nrows() {
        let row: Vec<String> = m.row(r).iter().map(|&v| fmt(v)).collect();
        out.push_str(&row.join(" "));
        out.push('\n');
    }
}

/// Canonical text of a problem file.
pub fn format_problem(instance: &ProblemInstance) -> String {
    let mut out = String::from("# psd-lowrank problem\n");
    let _ = writeln!(out, "m {}", instance.m());
    let _ = writeln!(out, "n {}", instance.n());
    let _ = writeln!(out, "k {}", instance.k());
    for (i, p) in instance.pairs().iter().enumerate() {
        let _ = writeln!(out, "pair {} {}", i + 1, p.a.nrows());
        out.push_str("A\n");
        write_rows(&mut out, &p.a, exact);
        out.push_str("B\n");
        write_rows(&mut out, &p.b, exact);
    }
    out
}

pub fn write_problem(path: impl AsRef<Path>, instance: &ProblemInstance) -> Result<()> {
    fs::write(path, format_problem(instance))?;
    Ok(())
}

pub fn read_problem(path: impl AsRef<Path>) -> Result<ProblemInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    parse_problem(&text).map_err(|e| with_path(e, path))
}

fn with_path(e: Error, path: &Path) -> Error {
    match e {
        Error::Parse {
            line,
            column,
            message,
            ..
        } => Error::Parse {
            path: Some(path.to_path_buf()),
            line,
            column,
            message,
        },
        other => other,
    }
}

/// Non-comment lines split into `(column, token)` pairs.
struct Lines<'a> {
    lines: Vec<(usize, Vec<(usize, &'a str)>)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let mut lines = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let trimmed = raw.trim_start();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let mut tokens = Vec::new();
            let mut start = None;
            for (c, ch) in raw.char_indices() {
                if ch.is_whitespace() {
                    if let Some(s) = start.take() {
                        tokens.push((s + 1, &raw[s..c]));
                    }
                } else if start.is_none() {
                    start = Some(c);
                }
            }
            if let Some(s) = start {
                tokens.push((s + 1, &raw[s..]));
            }
            lines.push((i + 1, tokens));
        }
        let last_line = text.lines().count().max(1);
        Lines {
            lines,
            pos: 0,
            last_line,
        }
    }

    fn next(&mut self, expecting: &str) -> Result<(usize, Vec<(usize, &'a str)>)> {
        match self.lines.get(self.pos) {
            Some(l) => {
                self.pos += 1;
                Ok(l.clone())
            }
            None => Err(parse_error(
                self.last_line,
                1,
                format!("unexpected end of input, expected {expecting}"),
            )),
        }
    }

    fn done(&self) -> Option<(usize, usize)> {
        self.lines.get(self.pos).map(|(l, t)| (*l, t[0].0))
    }

    fn keyword(&mut self, word: &str, args: usize) -> Result<(usize, Vec<(usize, &'a str)>)> {
        let (line, tokens) = self.next(&format!("`{word}`"))?;
        if tokens[0].1 != word {
            return Err(parse_error(
                line,
                tokens[0].0,
                format!("expected `{word}`, found `{}`", tokens[0].1),
            ));
        }
        if tokens.len() != args + 1 {
            return Err(parse_error(
                line,
                tokens[0].0,
                format!("`{word}` takes {args} value(s), found {}", tokens.len() - 1),
            ));
        }
        Ok((line, tokens[1..].to_vec()))
    }

    fn keyword_usize(&mut self, word: &str) -> Result<usize> {
        let (line, args) = self.keyword(word, 1)?;
        parse_token(line, args[0])
    }

    fn matrix_rows(&mut self, rows: usize, cols: usize, what: &str) -> Result<Matrix> {
        let mut data = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            let (line, tokens) = self.next(&format!("row {} of {what}", r + 1))?;
            if tokens.len() != cols {
                return Err(parse_error(
                    line,
                    tokens.get(cols).map_or(tokens[0].0, |t| t.0),
                    format!(
                        "row {} of {what} has {} entries, expected {cols}",
                        r + 1,
                        tokens.len()
                    ),
                ));
            }
            for tok in tokens {
                data.push(parse_token::<f64>(line, tok)?);
            }
        }
        Ok(Matrix::from_row_slice(rows, cols, &data))
    }
}

fn parse_error(line: usize, column: usize, message: String) -> Error {
    Error::Parse {
        path: None,
        line,
        column,
        message,
    }
}

fn parse_token<T: FromStr>(line: usize, (column, tok): (usize, &str)) -> Result<T> {
    tok.parse().map_err(|_| {
        parse_error(
            line,
            column,
            format!("cannot parse `{tok}` as {}", std::any::type_name::<T>()),
        )
    })
}

pub fn parse_problem(text: &str) -> Result<ProblemInstance> {
    let mut lines = Lines::new(text);
    let m = lines.keyword_usize("m")?;
    let n = lines.keyword_usize("n")?;
    let k = lines.keyword_usize("k")?;
    let mut pairs = Vec::with_capacity(m);
    for i in 0..m {
        let (line, args) = lines.keyword("pair", 2)?;
        let index: usize = parse_token(line, args[0])?;
        if index != i + 1 {
            return Err(parse_error(
                line,
                args[0].0,
                format!("expected pair {}, found {index}", i + 1),
            ));
        }
        let mi: usize = parse_token(line, args[1])?;
        lines.keyword("A", 0)?;
        let a = lines.matrix_rows(mi, mi, &format!("A_{}", i + 1))?;
        lines.keyword("B", 0)?;
        let b = lines.matrix_rows(mi, n, &format!("B_{}", i + 1))?;
        pairs.push(Pair::new(a, b));
    }
    if let Some((line, column)) = lines.done() {
        return Err(parse_error(
            line,
            column,
            "trailing content after last pair".into(),
        ));
    }
    ProblemInstance::new(pairs, n, k)
}

/// `rows cols` header followed by rows, shortest round-trip decimals.
pub fn format_matrix(m: &Matrix) -> String {
    let mut out = format!("{} {}\n", m.nrows(), m.ncols());
    write_rows(&mut out, m, exact);
    out
}

pub fn parse_matrix(text: &str) -> Result<Matrix> {
    let mut lines = Lines::new(text);
    let (line, tokens) = lines.next("`rows cols` header")?;
    if tokens.len() != 2 {
        return Err(parse_error(
            line,
            tokens[0].0,
            "expected `rows cols`".into(),
        ));
    }
    let rows: usize = parse_token(line, tokens[0])?;
    let cols: usize = parse_token(line, tokens[1])?;
    let m = lines.matrix_rows(rows, cols, "matrix")?;
    if let Some((line, column)) = lines.done() {
        return Err(parse_error(
            line,
            column,
            "trailing content after matrix".into(),
        ));
    }
    Ok(m)
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    parse_matrix(&fs::read_to_string(path)?).map_err(|e| with_path(e, path))
}

pub fn write_matrix(path: impl AsRef<Path>, m: &Matrix) -> Result<()> {
    fs::write(path, format_matrix(m))?;
    Ok(())
}

/// Contents of a solution file.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub termination: Termination,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub x: Matrix,
    pub y: Matrix,
}

impl From<&SolverResult> for Solution {
    fn from(r: &SolverResult) -> Self {
        Solution {
            termination: r.termination,
            iterations: r.iterations,
            converged: r.converged,
            objective: r.final_objective(),
            grad_norm: r.final_grad_norm(),
            residual: r.final_residual(),
            x: r.x.clone(),
            y: r.y.as_matrix().clone(),
        }
    }
}

pub fn format_solution(s: &Solution) -> String {
    let mut out = String::from("# psd-lowrank solution\n");
    let _ = writeln!(out, "termination {}", s.termination);
    let _ = writeln!(out, "iterations {}", s.iterations);
    let _ = writeln!(out, "converged {}", s.converged);
    let _ = writeln!(out, "f {}", sig16(s.objective));
    let _ = writeln!(out, "grad_norm {}", sig16(s.grad_norm));
    let _ = writeln!(out, "residual {}", sig16(s.residual));
    let _ = writeln!(out, "X {} {}", s.x.nrows(), s.x.ncols());
    write_rows(&mut out, &s.x, sig16);
    let _ = writeln!(out, "Y {} {}", s.y.nrows(), s.y.ncols());
    write_rows(&mut out, &s.y, exact);
    out
}

/// Writes the final `X` (16 significant digits), termination reason,
/// iteration count, final objective, gradient norm and relative residual,
/// plus the factor `Y`.
pub fn write_solution(path: impl AsRef<Path>, result: &SolverResult) -> Result<()> {
    fs::write(path, format_solution(&Solution::from(result)))?;
    Ok(())
}

pub fn parse_solution(text: &str) -> Result<Solution> {
    let mut lines = Lines::new(text);
    let (line, args) = lines.keyword("termination", 1)?;
    let termination = Termination::from_str(args[0].1)
        .map_err(|e| parse_error(line, args[0].0, e.to_string()))?;
    let iterations = lines.keyword_usize("iterations")?;
    let (line, args) = lines.keyword("converged", 1)?;
    let converged: bool = parse_token(line, args[0])?;
    let mut scalar = |word: &str| -> Result<f64> {
        let (line, args) = lines.keyword(word, 1)?;
        parse_token(line, args[0])
    };
    let objective = scalar("f")?;
    let grad_norm = scalar("grad_norm")?;
    let residual = scalar("residual")?;
    let mut block = |word: &str| -> Result<Matrix> {
        let (line, args) = lines.keyword(word, 2)?;
        let rows: usize = parse_token(line, args[0])?;
        let cols: usize = parse_token(line, args[1])?;
        lines.matrix_rows(rows, cols, word)
    };
    let x = block("X")?;
    let y = block("Y")?;
    Ok(Solution {
        termination,
        iterations,
        converged,
        objective,
        grad_norm,
        residual,
        x,
        y,
    })
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<Solution> {
    let path = path.as_ref();
    parse_solution(&fs::read_to_string(path)?).map_err(|e| with_path(e, path))
}

pub fn format_trace(trace: &[IterationRecord]) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in trace {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            r.index,
            exact(r.f_value),
            exact(r.grad_norm),
            exact(r.residual),
            exact(r.step),
            exact(r.beta)
        );
    }
    out
}

pub fn write_trace(path: impl AsRef<Path>, trace: &[IterationRecord]) -> Result<()> {
    fs::write(path, format_trace(trace))?;
    Ok(())
}

/// One parsed trace row: iteration, f, grad_norm, residual, step, beta.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceRow {
    pub iteration: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub step: f64,
    pub beta: f64,
}

pub fn parse_trace(text: &str) -> Result<Vec<TraceRow>> {
    let mut rows = Vec::new();
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == TRACE_HEADER => {}
        _ => {
            return Err(parse_error(
                1,
                1,
                format!("expected header `{TRACE_HEADER}`"),
            ))
        }
    }
    for (i, raw) in lines {
        if raw.trim().is_empty() {
            continue;
        }
        let mut fields = Vec::with_capacity(6);
        let mut col = 1;
        for f in raw.split(',') {
            fields.push((col, f.trim()));
            col += f.len() + 1;
        }
        if fields.len() != 6 {
            return Err(parse_error(
                i + 1,
                1,
                format!("expected 6 columns, found {}", fields.len()),
            ));
        }
        let num = |j: usize| parse_token::<f64>(i + 1, fields[j]);
        let row = TraceRow {
            iteration: parse_token(i + 1, fields[0])?,
            f: num(1)?,
            grad_norm: num(2)?,
            residual: num(3)?,
            step: num(4)?,
            beta: num(5)?,
        };
        if rows
            .last()
            .is_some_and(|prev: &TraceRow| prev.iteration >= row.iteration)
        {
            return Err(parse_error(i + 1, 1, "iterations out of order".into()));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_trace(path: impl AsRef<Path>) -> Result<Vec<TraceRow>> {
    let path = path.as_ref();
    parse_trace(&fs::read_to_string(path)?).map_err(|e| with_path(e, path))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GenerateMode {
    /// Every entry uniform on `[0, 1)`.
    Random,
    /// `A_i = B_i Z Z^T B_i^T` for a hidden `n x k` factor `Z`, so the optimum
    /// objective is zero.
    Consistent,
}

impl FromStr for GenerateMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(GenerateMode::Random),
            "consistent" => Ok(GenerateMode::Consistent),
            other => Err(Error::InvalidArgument(format!(
                "unknown mode {other:?} (random|consistent)"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerateSpec {
    pub n: usize,
    pub k: usize,
    /// Side `m_i` of each `A_i`; its length is the number of pairs.
    pub sizes: Vec<usize>,
    pub seed: u64,
    pub mode: GenerateMode,
}

/// Seeded instance; identical specs give identical instances.
pub fn generate_instance(spec: &GenerateSpec) -> Result<ProblemInstance> {
    if spec.n == 0 || spec.k == 0 || spec.sizes.is_empty() || spec.sizes.contains(&0) {
        return Err(Error::InvalidArgument(format!(
            "dimensions must be positive (n = {}, k = {}, sizes = {:?})",
            spec.n, spec.k, spec.sizes
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let pairs = match spec.mode {
        GenerateMode::Random => spec
            .sizes
            .iter()
            .map(|&mi| {
                let a = uniform_matrix(mi, mi, &mut rng);
                let b = uniform_matrix(mi, spec.n, &mut rng);
                Pair::new(a, b)
            })
            .collect(),
        GenerateMode::Consistent => {
            let z = uniform_matrix(spec.n, spec.k, &mut rng);
            let x = &z * z.transpose();
            spec.sizes
                .iter()
                .map(|&mi| {
                    let b = uniform_matrix(mi, spec.n, &mut rng);
                    let a = &b * &x * b.transpose();
                    Pair::new((&a + a.transpose()) * 0.5, b)
                })
                .collect()
        }
    };
    ProblemInstance::new(pairs, spec.n, spec.k)
}
