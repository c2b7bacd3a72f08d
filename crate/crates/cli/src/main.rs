use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use psd_lowrank::demo::{image_demo, DemoOptions};
use psd_lowrank::io::{
    generate_instance, read_matrix, read_problem, write_problem, write_solution, write_trace,
    GenerateMode, GenerateSpec,
};
use psd_lowrank::linesearch::quartic_coeffs;
use psd_lowrank::oracle::{gradient_check, interpolate_quartic, OracleReport, Scale};
use psd_lowrank::{solve, Error, FactorMatrix, ProblemInstance, Restart, SolverConfig};

/// Rank-constrained PSD least squares: fit X = Y Y^T to sum ||A_i - B_i X B_i^T||_F^2.
#[derive(Parser)]
#[command(name = "psdlra", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file.
    Solve(SolveArgs),
    /// Compare the analytic gradient with central differences.
    Gradcheck(CheckArgs),
    /// Compare line-search coefficients with interpolation.
    Linecheck(CheckArgs),
    /// Write a seeded random problem file.
    Gen(GenArgs),
    /// Restore a PSD matrix from transformed observations of a PGM image.
    DemoImage(DemoArgs),
}

#[derive(Args)]
struct SolverFlags {
    /// Stopping tolerance on the gradient norm.
    #[arg(long, default_value_t = 1e-4)]
    tol: f64,
    /// Iteration limit.
    #[arg(long = "max-iter", default_value_t = 10_000)]
    max_iter: usize,
    /// Periodic restart: `dimension` (every n*k), `never`, or a period.
    #[arg(long, default_value = "dimension", value_parser = parse_restart)]
    restart: Restart,
}

impl SolverFlags {
    fn config(&self) -> SolverConfig {
        SolverConfig {
            epsilon: self.tol,
            max_iterations: self.max_iter,
            restart: self.restart,
            ..SolverConfig::default()
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    problem: PathBuf,
    /// Rank bound; overrides the file's k.
    #[arg(long)]
    rank: Option<usize>,
    #[command(flatten)]
    solver: SolverFlags,
    /// Seed of the uniform [0, 1) starting point.
    #[arg(long, default_value_t = 0, conflicts_with = "init")]
    seed: u64,
    /// Starting factor Y0 as a matrix file.
    #[arg(long)]
    init: Option<PathBuf>,
    /// Write the convergence trace as CSV.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write the solution file.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    problem: PathBuf,
    /// Seed of the evaluation point (and direction).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Pass threshold; defaults to 1e-6 for gradients and 1e-8 for coefficients.
    #[arg(long)]
    tol: Option<f64>,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    k: usize,
    /// Sizes m_i, comma separated; one entry per pair.
    #[arg(long, value_delimiter = ',', required_unless_present = "m")]
    sizes: Vec<usize>,
    /// Number of pairs, each of side `--side` (or n).
    #[arg(long, conflicts_with = "sizes")]
    m: Option<usize>,
    #[arg(long, requires = "m")]
    side: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// `random` or `consistent` (A_i = B_i Z Z^T B_i^T).
    #[arg(long, default_value = "random")]
    mode: GenerateMode,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct DemoArgs {
    image: PathBuf,
    /// Number of observations.
    #[arg(long, default_value_t = 3)]
    m: usize,
    #[arg(long, default_value_t = 16)]
    rank: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    solver: SolverFlags,
    #[arg(long = "out-dir")]
    out_dir: PathBuf,
}

fn parse_restart(s: &str) -> Result<Restart, String> {
    match s {
        "dimension" => Ok(Restart::DimensionBased),
        "never" => Ok(Restart::Never),
        _ => match s.parse::<usize>() {
            Ok(p) if p > 0 => Ok(Restart::Every(p)),
            _ => Err(format!(
                "expected `dimension`, `never` or a positive period, got {s:?}"
            )),
        },
    }
}

enum Failure {
    /// A check ran and did not pass.
    Check,
    /// Bad input, unreadable file, or a solver error.
    Usage(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Usage(e.to_string())
    }
}

fn in_file(path: &Path) -> impl Fn(Error) -> Failure + '_ {
    move |e| Failure::Usage(format!("{}: {e}", path.display()))
}

fn load(path: &Path, rank: Option<usize>) -> Result<ProblemInstance, Failure> {
    let inst = read_problem(path).map_err(in_file(path))?;
    match rank {
        Some(k) => Ok(inst.with_rank(k)?),
        None => Ok(inst),
    }
}

fn run_solve(args: SolveArgs) -> Result<(), Failure> {
    let inst = load(&args.problem, args.rank)?;
    let y0 = match &args.init {
        Some(path) => FactorMatrix::new(read_matrix(path).map_err(in_file(path))?)?,
        None => FactorMatrix::random(inst.n(), inst.k(), args.seed),
    };
    let r = solve(&inst, &y0, &args.solver.config())?;
    if let Some(path) = &args.trace {
        write_trace(path, &r.trace)?;
    }
    if let Some(path) = &args.out {
        write_solution(path, &r)?;
    }
    println!("termination {}", r.termination);
    println!("iterations {}", r.iterations);
    println!("objective {:e}", r.final_objective());
    println!("grad_norm {:e}", r.final_grad_norm());
    println!("residual {:e}", r.final_residual());
    Ok(())
}

fn report(r: &OracleReport) -> Result<(), Failure> {
    println!("{r}");
    if r.passed {
        Ok(())
    } else {
        Err(Failure::Check)
    }
}

fn run_gradcheck(args: CheckArgs) -> Result<(), Failure> {
    let inst = load(&args.problem, None)?;
    let y = FactorMatrix::random(inst.n(), inst.k(), args.seed);
    report(&gradient_check(&inst, &y, args.tol.unwrap_or(1e-6))?)
}

fn run_linecheck(args: CheckArgs) -> Result<(), Failure> {
    let inst = load(&args.problem, None)?;
    let y = FactorMatrix::random(inst.n(), inst.k(), args.seed);
    let d = FactorMatrix::random(inst.n(), inst.k(), args.seed.wrapping_add(1))
        .into_inner()
        .map(|v| 2.0 * v - 1.0);
    let coeffs = quartic_coeffs(&inst, &y, &d)?;
    let interp = interpolate_quartic(&inst, &y, &d);
    let tol = args.tol.unwrap_or(1e-8);
    let coeff_report = OracleReport::compare(
        "quartic coefficients",
        coeffs.to_array().to_vec(),
        interp.to_array().to_vec(),
        Scale::Normwise,
        tol,
    );
    let slope = inst.gradient(&y)?.dot(&d);
    let slope_report = OracleReport::compare(
        "a1 vs tr(g^T D)",
        vec![coeffs.a1],
        vec![slope],
        Scale::Entrywise,
        1e-10,
    );
    let first = report(&coeff_report);
    let second = report(&slope_report);
    first.and(second)
}

fn run_gen(args: GenArgs) -> Result<(), Failure> {
    let sizes = match args.m {
        Some(m) => vec![args.side.unwrap_or(args.n); m],
        None => args.sizes,
    };
    let inst = generate_instance(&GenerateSpec {
        n: args.n,
        k: args.k,
        sizes,
        seed: args.seed,
        mode: args.mode,
    })?;
    write_problem(&args.out, &inst)?;
    println!("wrote {} pairs to {}", inst.m(), args.out.display());
    Ok(())
}

fn run_demo(args: DemoArgs) -> Result<(), Failure> {
    let options = DemoOptions {
        m: args.m,
        k: args.rank,
        seed: args.seed,
        config: args.solver.config(),
    };
    let r = image_demo(&args.image, &options, &args.out_dir).map_err(in_file(&args.image))?;
    print!("{}", r.to_text());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Gradcheck(a) => run_gradcheck(a),
        Command::Linecheck(a) => run_linecheck(a),
        Command::Gen(a) => run_gen(a),
        Command::DemoImage(a) => run_demo(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Check) => ExitCode::from(1),
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            eprintln!(
                "\n{}\n\nFor more information, try '--help'.",
                Cli::command().render_usage()
            );
            ExitCode::from(2)
        }
    }
}
