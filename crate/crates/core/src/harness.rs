//! Benchmark table, μ/h sweeps and basin-of-convergence grids.
//!
//! CSV columns: `problem,scheme,mu,h,x0,verdict,reason,iterations,final_x,residual`.
//! Reals are written with 17 significant digits. Table rendering prints
//! `final_x` with 6 decimals and shows every non-converged run as
//! `divergence`.

use rayon::prelude::*;

use crate::problems::{builtin_problems, secant_dyn_reference_mu, zheng_reference_mu, ProblemSpec};
use crate::solvers::{run, ConfigError, Reason, RunOutcome, Scheme, SolverConfig, Verdict};

pub const CSV_HEADER: &str = "problem,scheme,mu,h,x0,verdict,reason,iterations,final_x,residual";

/// Number of x0 samples used for basin grids unless told otherwise.
pub const DEFAULT_BASIN_POINTS: usize = 201;

/// `x` with 17 significant digits.
pub fn fmt_real(x: f64) -> String {
    format!("{:.16e}", x)
}

/// `x` rounded to 6 decimals, ties to even.
pub fn fmt_6dp(x: f64) -> String {
    format!("{:.6}", x)
}

/// Table-level verdict: exhaustion and every failure mode collapse to
/// divergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RowVerdict {
    Converged,
    Divergence,
}

impl RowVerdict {
    pub fn name(self) -> &'static str {
        match self {
            RowVerdict::Converged => "converged",
            RowVerdict::Divergence => "divergence",
        }
    }
}

impl From<Verdict> for RowVerdict {
    fn from(v: Verdict) -> Self {
        match v {
            Verdict::Converged => RowVerdict::Converged,
            Verdict::Diverged | Verdict::Exhausted => RowVerdict::Divergence,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub problem: String,
    pub scheme: Scheme,
    pub mu: f64,
    pub h: f64,
    pub x0: f64,
    pub verdict: RowVerdict,
    pub reason: Reason,
    /// Iterations performed, whatever the verdict.
    pub iterations: usize,
    /// Last accepted iterate, whatever the verdict.
    pub final_x: f64,
    pub residual: f64,
}

impl BenchmarkRow {
    pub fn from_outcome(problem: &str, cfg: &SolverConfig, x0: f64, out: &RunOutcome) -> Self {
        Self {
            problem: problem.to_owned(),
            scheme: cfg.scheme,
            mu: cfg.mu,
            h: cfg.h,
            x0,
            verdict: out.verdict.into(),
            reason: out.reason,
            iterations: out.iterations,
            final_x: out.final_x,
            residual: out.residual(),
        }
    }

    pub fn converged(&self) -> bool {
        self.verdict == RowVerdict::Converged
    }

    /// Iteration count as shown in the table; absent for divergence.
    pub fn table_iterations(&self) -> Option<usize> {
        self.converged().then_some(self.iterations)
    }

    /// Root as shown in the table; absent for divergence.
    pub fn table_final_x(&self) -> Option<String> {
        self.converged().then(|| fmt_6dp(self.final_x))
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{},{},{}",
            self.problem,
            self.scheme,
            fmt_real(self.mu),
            fmt_real(self.h),
            fmt_real(self.x0),
            self.verdict.name(),
            self.reason.name(),
            self.iterations,
            fmt_real(self.final_x),
            fmt_real(self.residual),
        )
    }
}

pub fn rows_to_csv(rows: &[BenchmarkRow]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for row in rows {
        out.push_str(&row.csv_line());
        out.push('\n');
    }
    out
}

/// Expected table cell: `Some(n)` for convergence after `n` iterations,
/// `None` for divergence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedCell {
    pub problem: &'static str,
    pub scheme: Scheme,
    pub iterations: Option<usize>,
    pub root_6dp: Option<&'static str>,
}

/// The published benchmark table, in the order produced by
/// [`reproduce_table1`].
pub const TABLE1_EXPECTED: [ExpectedCell; 9] = [
    ExpectedCell {
        problem: "log",
        scheme: Scheme::Newton,
        iterations: None,
        root_6dp: None,
    },
    ExpectedCell {
        problem: "log",
        scheme: Scheme::Zheng,
        iterations: Some(8),
        root_6dp: None,
    },
    ExpectedCell {
        problem: "log",
        scheme: Scheme::SecantDyn,
        iterations: Some(6),
        root_6dp: Some("1.000000"),
    },
    ExpectedCell {
        problem: "exp",
        scheme: Scheme::Newton,
        iterations: None,
        root_6dp: None,
    },
    ExpectedCell {
        problem: "exp",
        scheme: Scheme::Zheng,
        iterations: None,
        root_6dp: None,
    },
    ExpectedCell {
        problem: "exp",
        scheme: Scheme::SecantDyn,
        iterations: Some(40),
        root_6dp: Some("1.000000"),
    },
    ExpectedCell {
        problem: "trig",
        scheme: Scheme::Newton,
        iterations: None,
        root_6dp: None,
    },
    ExpectedCell {
        problem: "trig",
        scheme: Scheme::Zheng,
        iterations: None,
        root_6dp: None,
    },
    ExpectedCell {
        problem: "trig",
        scheme: Scheme::SecantDyn,
        iterations: Some(6),
        root_6dp: Some("0.523599"),
    },
];

/// The benchmark configuration for one problem and method.
pub fn table1_config(problem: &str, scheme: Scheme) -> SolverConfig {
    let mu = match scheme {
        Scheme::Zheng => zheng_reference_mu(problem),
        Scheme::SecantDyn => secant_dyn_reference_mu(problem),
        _ => None,
    };
    SolverConfig::new(scheme, mu.unwrap_or(0.0))
}

/// Runs Newton, the Zheng scheme and the two-point dynamical scheme on each
/// builtin problem from its default x0, with ε = 1e-5 and 500 iterations.
pub fn reproduce_table1() -> Vec<BenchmarkRow> {
    let mut rows = Vec::with_capacity(9);
    for p in builtin_problems() {
        for scheme in [Scheme::Newton, Scheme::Zheng, Scheme::SecantDyn] {
            let cfg = table1_config(p.name(), scheme);
            let x0 = p.default_x0();
            let out = run(&p, &cfg, x0).expect("builtin setups are valid");
            rows.push(BenchmarkRow::from_outcome(p.name(), &cfg, x0, &out));
        }
    }
    rows
}

/// Whether every row has the published verdict.
pub fn table1_verdicts_match(rows: &[BenchmarkRow]) -> bool {
    rows.len() == TABLE1_EXPECTED.len()
        && rows.iter().zip(TABLE1_EXPECTED.iter()).all(|(row, exp)| {
            row.problem == exp.problem
                && row.scheme == exp.scheme
                && row.converged() == exp.iterations.is_some()
        })
}

fn table_cell(row: &BenchmarkRow) -> String {
    match row.table_iterations() {
        Some(n) => format!("n = {}", n),
        None => String::from("divergence"),
    }
}

/// Renders rows from [`reproduce_table1`] in the shape of the published
/// table, one line per problem, plus the verdict comparison.
pub fn render_table1(rows: &[BenchmarkRow]) -> String {
    let mut out = format!(
        "{:<8} {:<22} {:<22} {:<12} {:<12} {:<12} {:<10}\n",
        "example", "initial value", "exact solution", "newton", "zheng", "secant-dyn", "x_n"
    );
    for chunk in rows.chunks(3) {
        let first = &chunk[0];
        let root = builtin_problems()
            .into_iter()
            .find(|p| p.name() == first.problem)
            .and_then(|p| p.known_root())
            .map(fmt_6dp)
            .unwrap_or_default();
        let cells: Vec<String> = chunk.iter().map(table_cell).collect();
        let last = chunk.last().unwrap();
        out.push_str(&format!(
            "{:<8} {:<22} {:<22} {:<12} {:<12} {:<12} {:<10}\n",
            first.problem,
            fmt_6dp(first.x0),
            root,
            cells[0],
            cells.get(1).map(String::as_str).unwrap_or(""),
            cells.get(2).map(String::as_str).unwrap_or(""),
            last.table_final_x().unwrap_or_else(|| String::from("-")),
        ));
    }
    let status = if table1_verdicts_match(rows) {
        "match"
    } else {
        "MISMATCH"
    };
    out.push_str(&format!("verdicts vs published table: {}\n", status));
    out
}

/// One row per μ, in input order.
pub fn sweep_mu(
    p: &ProblemSpec,
    scheme: Scheme,
    mu_values: &[f64],
    x0: f64,
    cfg: &SolverConfig,
) -> Result<Vec<BenchmarkRow>, ConfigError> {
    mu_values
        .iter()
        .map(|&mu| {
            let cfg = SolverConfig { scheme, mu, ..*cfg };
            let out = run(p, &cfg, x0)?;
            Ok(BenchmarkRow::from_outcome(p.name(), &cfg, x0, &out))
        })
        .collect()
}

/// One Euler-flow row per step length, in input order.
pub fn sweep_h(
    p: &ProblemSpec,
    mu: f64,
    h_values: &[f64],
    x0: f64,
    cfg: &SolverConfig,
) -> Result<Vec<BenchmarkRow>, ConfigError> {
    h_values
        .iter()
        .map(|&h| {
            let cfg = SolverConfig {
                scheme: Scheme::EulerFlow,
                mu,
                h,
                ..*cfg
            };
            let out = run(p, &cfg, x0)?;
            Ok(BenchmarkRow::from_outcome(p.name(), &cfg, x0, &out))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct BasinGrid {
    pub problem: String,
    pub scheme: Scheme,
    pub mu_axis: Vec<f64>,
    pub x0_axis: Vec<f64>,
    /// Row-major, `cells[i][j]` for `mu_axis[i]` and `x0_axis[j]`.
    pub cells: Vec<Vec<BenchmarkRow>>,
}

impl BasinGrid {
    pub fn converged_count(&self, mu_index: usize) -> usize {
        self.cells[mu_index]
            .iter()
            .filter(|c| c.converged())
            .count()
    }

    pub fn converged_fraction(&self, mu_index: usize) -> f64 {
        self.converged_count(mu_index) as f64 / self.x0_axis.len() as f64
    }

    /// Dense matrix: header `x0:` followed by the axis, then one line per μ
    /// of the form `<mu>: C<iters> D ...`.
    pub fn render_matrix(&self) -> String {
        let mut out = String::from("x0:");
        for &x in &self.x0_axis {
            out.push(' ');
            out.push_str(&fmt_real(x));
        }
        out.push('\n');
        for (mu, row) in self.mu_axis.iter().zip(&self.cells) {
            out.push_str(&fmt_real(*mu));
            out.push(':');
            for cell in row {
                match cell.table_iterations() {
                    Some(n) => out.push_str(&format!(" C{}", n)),
                    None => out.push_str(" D"),
                }
            }
            out.push('\n');
        }
        out
    }

    /// Every cell as a CSV row, μ-major.
    pub fn to_csv(&self) -> String {
        let rows: Vec<BenchmarkRow> = self.cells.iter().flatten().cloned().collect();
        rows_to_csv(&rows)
    }
}

pub const BASIN_SUMMARY_HEADER: &str = "problem,scheme,mu,cells,converged,converged_fraction";

/// Converged fraction per (grid, μ), one CSV line each.
pub fn basin_summary_csv(grids: &[BasinGrid]) -> String {
    let mut out = String::from(BASIN_SUMMARY_HEADER);
    out.push('\n');
    for grid in grids {
        for (i, mu) in grid.mu_axis.iter().enumerate() {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                grid.problem,
                grid.scheme,
                fmt_real(*mu),
                grid.x0_axis.len(),
                grid.converged_count(i),
                fmt_real(grid.converged_fraction(i)),
            ));
        }
    }
    out
}

/// Runs `scheme` from every `(μ, x0)` pair. Cells are computed in parallel;
/// each is an independent run, so the result matches sequential evaluation.
pub fn map_basin(
    p: &ProblemSpec,
    scheme: Scheme,
    mu_axis: &[f64],
    x0_axis: &[f64],
    cfg: &SolverConfig,
) -> Result<BasinGrid, ConfigError> {
    let cells = mu_axis
        .iter()
        .map(|&mu| {
            let cfg = SolverConfig { scheme, mu, ..*cfg };
            x0_axis
                .par_iter()
                .map(|&x0| {
                    let out = run(p, &cfg, x0)?;
                    Ok(BenchmarkRow::from_outcome(p.name(), &cfg, x0, &out))
                })
                .collect::<Result<Vec<_>, ConfigError>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BasinGrid {
        problem: p.name().to_owned(),
        scheme,
        mu_axis: mu_axis.to_vec(),
        x0_axis: x0_axis.to_vec(),
        cells,
    })
}
