use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::builder::{PossibleValuesParser, TypedValueParser};
use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use flowroot::analysis::{order_study_config, verify_quadratic_convergence};
use flowroot::harness::{
    basin_summary_csv, fmt_6dp, fmt_real, map_basin, render_table1, reproduce_table1, rows_to_csv,
    sweep_h, sweep_mu, table1_config, table1_verdicts_match, BasinGrid, BenchmarkRow,
    DEFAULT_BASIN_POINTS,
};
use flowroot::problems::{secant_dyn_reference_mu, BUILTIN_NAMES};
use flowroot::solvers::{DEFAULT_EPSILON, DEFAULT_MAX_ITERS};
use flowroot::{find_problem, run, Bootstrap, ProblemSpec, Scheme, SolverConfig, StopRule};

const SCHEME_NAMES: [&str; 6] = ["newton", "euler", "wu", "zheng", "secant", "secant-dyn"];
const BOOTSTRAP_NAMES: [&str; 2] = ["zheng-first-step", "offset-x0"];
const STOP_RULE_NAMES: [&str; 3] = ["step", "residual", "either"];

const EXIT_DIVERGED: u8 = 1;
const EXIT_USAGE: u8 = 2;

#[derive(Parser)]
#[command(
    name = "flowroot",
    version,
    about = "Scalar root finding with Newton-like flow schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configuration and print its trace and verdict.
    Solve(SolveArgs),
    /// Run the benchmark table; exits 0 iff every verdict matches the published one.
    Bench(OutputArgs),
    /// Estimate the convergence order and error constant of secant-dyn.
    Order(OrderArgs),
    /// Run one scheme over a list of mu values.
    SweepMu(SweepMuArgs),
    /// Run the Euler flow scheme over a list of step lengths.
    SweepH(SweepHArgs),
    /// Map converging starting points over a (mu, x0) grid.
    Basin(BasinArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

#[derive(Args)]
struct SolverArgs {
    /// Stopping tolerance [default: 1e-5, 1e-14 for order].
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, default_value_t = DEFAULT_MAX_ITERS)]
    max_iters: usize,
    /// How two-point schemes obtain x_1.
    #[arg(long, default_value = "zheng-first-step",
          value_parser = PossibleValuesParser::new(BOOTSTRAP_NAMES).map(|s| s.parse::<Bootstrap>().unwrap()))]
    bootstrap: Bootstrap,
    #[arg(long, default_value = "step",
          value_parser = PossibleValuesParser::new(STOP_RULE_NAMES).map(|s| s.parse::<StopRule>().unwrap()))]
    stop_rule: StopRule,
}

#[derive(Args)]
struct ProblemArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(BUILTIN_NAMES))]
    problem: String,
    /// Starting point [default: the problem's own].
    #[arg(long, allow_hyphen_values = true)]
    x0: Option<f64>,
}

fn scheme_parser() -> impl TypedValueParser<Value = Scheme> {
    PossibleValuesParser::new(SCHEME_NAMES).map(|s| s.parse::<Scheme>().unwrap())
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "secant-dyn", value_parser = scheme_parser())]
    scheme: Scheme,
    /// Flow parameter [default: the benchmark value for the problem, else 0].
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    /// Euler step length.
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Exit with status 1 unless the run converges.
    #[arg(long)]
    expect_converge: bool,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct OrderArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Flow parameter [default: the benchmark value for the problem].
    #[arg(long, allow_hyphen_values = true)]
    mu: Option<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Output file; standard output when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct SweepMuArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value = "secant-dyn", value_parser = scheme_parser())]
    scheme: Scheme,
    /// Comma-separated mu values.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    mu_values: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct SweepHArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    mu: f64,
    /// Comma-separated step lengths.
    #[arg(long, required = true, value_delimiter = ',')]
    h_values: Vec<f64>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct BasinArgs {
    #[arg(long, value_parser = PossibleValuesParser::new(BUILTIN_NAMES))]
    problem: String,
    /// May be repeated.
    #[arg(long, default_value = "secant-dyn", value_parser = scheme_parser())]
    scheme: Vec<Scheme>,
    /// Comma-separated mu values.
    #[arg(
        long,
        required = true,
        value_delimiter = ',',
        allow_hyphen_values = true
    )]
    mu_values: Vec<f64>,
    /// Number of equally spaced starting points across the domain.
    #[arg(long, default_value_t = DEFAULT_BASIN_POINTS)]
    points: usize,
    #[arg(long, default_value_t = 1.0)]
    h: f64,
    /// Also write the dense C/D matrix to this file.
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Also write converged fractions per mu to this file.
    #[arg(long)]
    summary: Option<PathBuf>,
    #[command(flatten)]
    solver: SolverArgs,
    #[command(flatten)]
    out: OutputArgs,
}

/// A failure that should exit with the usage status.
struct Usage(String);

enum Failure {
    Usage(Usage),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(err: anyhow::Error) -> Self {
        Failure::Other(err)
    }
}

impl From<Usage> for Failure {
    fn from(err: Usage) -> Self {
        Failure::Usage(err)
    }
}

fn schemes_help() -> String {
    let mut out = String::from("Schemes:\n");
    for scheme in Scheme::ALL {
        out.push_str(&format!("  {:<11} {}\n", scheme.name(), scheme.formula()));
    }
    out
}

fn problem(name: &str) -> ProblemSpec {
    find_problem(name).expect("names are checked by the parser")
}

fn config(scheme: Scheme, mu: f64, h: f64, solver: &SolverArgs, default_eps: f64) -> SolverConfig {
    SolverConfig {
        scheme,
        mu,
        h,
        epsilon: solver.epsilon.unwrap_or(default_eps),
        max_iters: solver.max_iters,
        bootstrap: solver.bootstrap,
        stop_rule: solver.stop_rule,
        ..SolverConfig::default()
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn rows_table(rows: &[BenchmarkRow]) -> String {
    let mut out = format!(
        "{:<8} {:<11} {:>24} {:>24} {:<11} {:<24} {:>6} {:>10}\n",
        "problem", "scheme", "mu", "h", "verdict", "reason", "iters", "final_x"
    );
    for r in rows {
        out.push_str(&format!(
            "{:<8} {:<11} {:>24} {:>24} {:<11} {:<24} {:>6} {:>10}\n",
            r.problem,
            r.scheme,
            fmt_real(r.mu),
            fmt_real(r.h),
            r.verdict.name(),
            r.reason.name(),
            r.iterations,
            fmt_6dp(r.final_x),
        ));
    }
    out
}

fn solve(args: &SolveArgs) -> Result<ExitCode, Failure> {
    let p = problem(&args.problem.problem);
    let x0 = args.problem.x0.unwrap_or(p.default_x0());
    let mu = args
        .mu
        .unwrap_or_else(|| table1_config(p.name(), args.scheme).mu);
    let cfg = config(args.scheme, mu, args.h, &args.solver, DEFAULT_EPSILON);
    let out = run(&p, &cfg, x0).map_err(|e| Usage(e.to_string()))?;
    let row = BenchmarkRow::from_outcome(p.name(), &cfg, x0, &out);

    let text = match args.out.format.unwrap_or(Format::Table) {
        Format::Csv => rows_to_csv(std::slice::from_ref(&row)),
        Format::Table => {
            let mut s = String::new();
            s.push_str(&format!("problem: {}\nscheme: {}\n", p.name(), cfg.scheme));
            s.push_str(&format!("mu: {}\nx0: {}\n", fmt_real(cfg.mu), fmt_real(x0)));
            s.push_str("n,x,f\n");
            for pt in &out.trace.points {
                s.push_str(&format!("{},{},{}\n", pt.n, fmt_real(pt.x), fmt_real(pt.f)));
            }
            s.push_str(&format!(
                "verdict: {} ({})\n",
                row.verdict.name(),
                out.reason.name()
            ));
            s.push_str(&format!("iterations: {}\n", out.iterations));
            s.push_str(&format!(
                "final_x: {} ({})\n",
                fmt_6dp(out.final_x),
                fmt_real(out.final_x)
            ));
            if let Some(x) = out.rejected_x {
                s.push_str(&format!("rejected_x: {}\n", fmt_real(x)));
            }
            s.push_str(&format!("residual: {}\n", fmt_real(out.residual())));
            s
        }
    };
    emit(args.out.output.as_deref(), &text)?;
    if args.expect_converge && !out.converged() {
        return Ok(ExitCode::from(EXIT_DIVERGED));
    }
    Ok(ExitCode::SUCCESS)
}

fn bench(args: &OutputArgs) -> Result<ExitCode, Failure> {
    let rows = reproduce_table1();
    let text = match args.format.unwrap_or(Format::Table) {
        Format::Table => render_table1(&rows),
        Format::Csv => rows_to_csv(&rows),
    };
    emit(args.output.as_deref(), &text)?;
    Ok(if table1_verdicts_match(&rows) {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_DIVERGED)
    })
}

fn order(args: &OrderArgs) -> Result<ExitCode, Failure> {
    let p = problem(&args.problem.problem);
    let x0 = args.problem.x0.unwrap_or(p.default_x0());
    let mu = args
        .mu
        .or_else(|| secant_dyn_reference_mu(p.name()))
        .unwrap_or(0.0);
    let base = order_study_config(mu);
    let cfg = config(Scheme::SecantDyn, mu, 1.0, &args.solver, base.epsilon);
    let report =
        verify_quadratic_convergence(&p, mu, x0, &cfg).map_err(|e| Usage(e.to_string()))?;
    emit(args.output.as_deref(), &report.render())?;
    Ok(ExitCode::SUCCESS)
}

fn emit_rows(out: &OutputArgs, rows: &[BenchmarkRow]) -> Result<()> {
    let text = match out.format.unwrap_or(Format::Csv) {
        Format::Csv => rows_to_csv(rows),
        Format::Table => rows_table(rows),
    };
    emit(out.output.as_deref(), &text)
}

fn sweep_mu_cmd(args: &SweepMuArgs) -> Result<ExitCode, Failure> {
    let p = problem(&args.problem.problem);
    let x0 = args.problem.x0.unwrap_or(p.default_x0());
    let cfg = config(args.scheme, 0.0, args.h, &args.solver, DEFAULT_EPSILON);
    let rows =
        sweep_mu(&p, args.scheme, &args.mu_values, x0, &cfg).map_err(|e| Usage(e.to_string()))?;
    emit_rows(&args.out, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn sweep_h_cmd(args: &SweepHArgs) -> Result<ExitCode, Failure> {
    let p = problem(&args.problem.problem);
    let x0 = args.problem.x0.unwrap_or(p.default_x0());
    let cfg = config(
        Scheme::EulerFlow,
        args.mu,
        1.0,
        &args.solver,
        DEFAULT_EPSILON,
    );
    let rows = sweep_h(&p, args.mu, &args.h_values, x0, &cfg).map_err(|e| Usage(e.to_string()))?;
    emit_rows(&args.out, &rows)?;
    Ok(ExitCode::SUCCESS)
}

fn basin(args: &BasinArgs) -> Result<ExitCode, Failure> {
    if args.points < 2 {
        return Err(Usage(String::from("--points must be at least 2")).into());
    }
    let p = problem(&args.problem);
    let x0_axis = p.domain().linspace(args.points);
    let grids = args
        .scheme
        .iter()
        .map(|&scheme| {
            let cfg = config(scheme, 0.0, args.h, &args.solver, DEFAULT_EPSILON);
            map_basin(&p, scheme, &args.mu_values, &x0_axis, &cfg)
        })
        .collect::<Result<Vec<BasinGrid>, _>>()
        .map_err(|e| Usage(e.to_string()))?;

    let matrices = || {
        let mut s = String::new();
        for grid in &grids {
            if grids.len() > 1 {
                s.push_str(&format!("scheme: {}\n", grid.scheme));
            }
            s.push_str(&grid.render_matrix());
        }
        s
    };
    let text = match args.out.format.unwrap_or(Format::Csv) {
        Format::Csv => {
            let rows: Vec<BenchmarkRow> = grids
                .iter()
                .flat_map(|g| g.cells.iter().flatten().cloned())
                .collect();
            rows_to_csv(&rows)
        }
        Format::Table => matrices(),
    };
    emit(args.out.output.as_deref(), &text)?;
    if let Some(path) = &args.grid {
        emit(Some(path), &matrices())?;
    }
    if let Some(path) = &args.summary {
        emit(Some(path), &basin_summary_csv(&grids))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let matches = Cli::command().after_help(schemes_help()).get_matches();
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(err) => err.exit(),
    };
    let result = match &cli.command {
        Command::Solve(args) => solve(args),
        Command::Bench(args) => bench(args),
        Command::Order(args) => order(args),
        Command::SweepMu(args) => sweep_mu_cmd(args),
        Command::SweepH(args) => sweep_h_cmd(args),
        Command::Basin(args) => basin(args),
    };
    match result {
        Ok(code) => code,
        Err(Failure::Usage(Usage(msg))) => {
            eprintln!("error: {}", msg);
            ExitCode::from(EXIT_USAGE)
        }
        Err(Failure::Other(err)) => {
            eprintln!("error: {:#}", err);
            ExitCode::from(EXIT_USAGE)
        }
    }
}
