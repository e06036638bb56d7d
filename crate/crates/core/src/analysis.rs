//! Empirical convergence order and asymptotic error constant of a run.
//!
//! For errors `e_n = x_n - x*` the per-step order is
//! `ρ_n = ln|e_{n+1}/e_n| / ln|e_n/e_{n-1}|` and the quadratic error constant
//! is `c_n = e_{n+1}/e_n²`. Both are only meaningful while `|e_n|` stays well
//! above rounding noise, so the trace is cut at the first error below
//! [`saturation_floor`].

use thiserror::Error;

use crate::harness::fmt_real;
use crate::problems::{EvalError, ProblemSpec};
use crate::solvers::{run, ConfigError, IterationTrace, RunOutcome, Scheme, SolverConfig, Verdict};

/// Fewest usable points needed for an estimate.
pub const MIN_USABLE_POINTS: usize = 4;

/// Relative tolerance on the error constant when judging a run.
pub const CONSTANT_REL_TOL: f64 = 0.15;

/// Largest `|f'(x*)|` treated as zero.
pub const DERIVATIVE_ZERO_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("trace has no known root to measure errors against")]
    MissingRoot,
    #[error("only {usable} usable points, need at least {MIN_USABLE_POINTS}")]
    InsufficientData { usable: usize },
    #[error("error vanishes exactly at step {index}, leaving too few usable points")]
    ZeroError { index: usize },
    #[error("problem has no derivative evaluator")]
    MissingDerivative,
    #[error("f'(x*) = {0:e} is too close to zero")]
    DerivativeZero(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Config(#[from] ConfigError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderEstimate {
    /// `ρ_n` for `n = 1 .. usable_steps - 2`.
    pub orders: Vec<f64>,
    pub final_order: f64,
    /// `c_n` for `n = 0 .. usable_steps - 2`.
    pub constant_estimates: Vec<f64>,
    /// Last usable `c_n`.
    pub final_constant: f64,
    pub predicted_constant: Option<f64>,
    /// Number of leading trace points whose error clears the floor.
    pub usable_steps: usize,
}

/// Errors at or below `1e3 · machine epsilon · max(1, |x*|)` are noise.
pub fn saturation_floor(root: f64) -> f64 {
    1e3 * f64::EPSILON * root.abs().max(1.0)
}

pub fn estimate_order(trace: &IterationTrace) -> Result<OrderEstimate, AnalysisError> {
    let root = trace.known_root.ok_or(AnalysisError::MissingRoot)?;
    let errors = trace.errors().ok_or(AnalysisError::MissingRoot)?;
    estimate_from_errors(&errors, saturation_floor(root))
}

/// Order and constant estimates from a raw error sequence. Only the prefix
/// with `|e_n| > floor` is used.
pub fn estimate_from_errors(errors: &[f64], floor: f64) -> Result<OrderEstimate, AnalysisError> {
    let usable = errors.iter().take_while(|e| e.abs() > floor).count();
    if usable < MIN_USABLE_POINTS {
        return Err(match errors.get(usable) {
            Some(&0.0) => AnalysisError::ZeroError { index: usable },
            _ => AnalysisError::InsufficientData { usable },
        });
    }
    let e = &errors[..usable];

    let orders: Vec<f64> = e
        .windows(3)
        .map(|w| (w[2] / w[1]).abs().ln() / (w[1] / w[0]).abs().ln())
        .collect();
    let constant_estimates: Vec<f64> = e.windows(2).map(|w| w[1] / (w[0] * w[0])).collect();

    Ok(OrderEstimate {
        final_order: *orders.last().unwrap(),
        final_constant: *constant_estimates.last().unwrap(),
        orders,
        constant_estimates,
        predicted_constant: None,
        usable_steps: usable,
    })
}

/// `μ + f''(x*)/f'(x*)`, with `f''` from a central difference of `f'`.
pub fn predicted_constant(p: &ProblemSpec, mu: f64) -> Result<f64, AnalysisError> {
    if !p.has_derivative() {
        return Err(AnalysisError::MissingDerivative);
    }
    let root = p.known_root().ok_or(AnalysisError::MissingRoot)?;
    let d1 = p.eval_df(root)?;
    if d1.abs() < DERIVATIVE_ZERO_TOL {
        return Err(AnalysisError::DerivativeZero(d1));
    }
    let step = 1e-5 * root.abs().max(1.0);
    let d2 = (p.eval_df(root + step)? - p.eval_df(root - step)?) / (2.0 * step);
    Ok(mu + d2 / d1)
}

/// Result of checking a two-point dynamical run against the predicted
/// quadratic error constant.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticReport {
    pub problem: String,
    pub mu: f64,
    pub x0: f64,
    pub outcome: RunOutcome,
    pub predicted_constant: f64,
    /// `None` when the run diverged or left too few usable points.
    pub estimate: Option<OrderEstimate>,
    pub estimate_error: Option<AnalysisError>,
}

impl QuadraticReport {
    /// `|final_constant - predicted| / max(1, |predicted|)`.
    pub fn constant_rel_error(&self) -> Option<f64> {
        let est = self.estimate.as_ref()?;
        let pred = self.predicted_constant;
        Some((est.final_constant - pred).abs() / pred.abs().max(1.0))
    }

    /// `|final_order - 2|`.
    pub fn order_gap(&self) -> Option<f64> {
        Some((self.estimate.as_ref()?.final_order - 2.0).abs())
    }

    pub fn is_quadratic(&self, order_tol: f64) -> bool {
        self.outcome.verdict == Verdict::Converged
            && self.order_gap().is_some_and(|g| g <= order_tol)
            && self
                .constant_rel_error()
                .is_some_and(|r| r <= CONSTANT_REL_TOL)
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("problem: {}\n", self.problem));
        out.push_str(&format!("mu: {}\n", fmt_real(self.mu)));
        out.push_str(&format!("x0: {}\n", fmt_real(self.x0)));
        out.push_str(&format!(
            "verdict: {} ({})\n",
            self.outcome.verdict.name(),
            self.outcome.reason.name()
        ));
        out.push_str(&format!("iterations: {}\n", self.outcome.iterations));
        out.push_str(&format!(
            "predicted_constant: {}\n",
            fmt_real(self.predicted_constant)
        ));
        match (&self.estimate, &self.estimate_error) {
            (Some(est), _) => {
                out.push_str(&format!("usable_steps: {}\n", est.usable_steps));
                out.push_str("n,order,constant\n");
                for (i, c) in est.constant_estimates.iter().enumerate() {
                    let order = if i == 0 {
                        String::from("-")
                    } else {
                        fmt_real(est.orders[i - 1])
                    };
                    out.push_str(&format!("{},{},{}\n", i, order, fmt_real(*c)));
                }
                out.push_str(&format!("final_order: {}\n", fmt_real(est.final_order)));
                out.push_str(&format!(
                    "final_constant: {}\n",
                    fmt_real(est.final_constant)
                ));
                out.push_str(&format!(
                    "order_gap: {}\n",
                    fmt_real(self.order_gap().unwrap())
                ));
                out.push_str(&format!(
                    "constant_rel_error: {}\n",
                    fmt_real(self.constant_rel_error().unwrap())
                ));
            }
            (None, Some(err)) => out.push_str(&format!("estimate: unavailable ({})\n", err)),
            (None, None) => out.push_str("estimate: unavailable\n"),
        }
        out
    }
}

/// Runs the two-point dynamical scheme from `x0` with `cfg` (scheme and μ
/// overridden), estimates its order and compares the constant against
/// [`predicted_constant`].
pub fn verify_quadratic_convergence(
    p: &ProblemSpec,
    mu: f64,
    x0: f64,
    cfg: &SolverConfig,
) -> Result<QuadraticReport, AnalysisError> {
    let cfg = SolverConfig {
        scheme: Scheme::SecantDyn,
        mu,
        ..*cfg
    };
    let predicted = predicted_constant(p, mu)?;
    let outcome = run(p, &cfg, x0)?;
    let (estimate, estimate_error) = if outcome.converged() {
        match estimate_order(&outcome.trace) {
            Ok(mut est) => {
                est.predicted_constant = Some(predicted);
                (Some(est), None)
            }
            Err(err) => (None, Some(err)),
        }
    } else {
        (None, None)
    };
    Ok(QuadraticReport {
        problem: p.name().to_owned(),
        mu,
        x0,
        outcome,
        predicted_constant: predicted,
        estimate,
        estimate_error,
    })
}

/// Solver settings for order studies: the run continues until the step
/// drops to rounding level so the asymptotic tail is visible.
pub fn order_study_config(mu: f64) -> SolverConfig {
    SolverConfig {
        epsilon: 1e-14,
        ..SolverConfig::new(Scheme::SecantDyn, mu)
    }
}
