//! Step kernels for each iterative scheme and the driver that iterates them.
//!
//! Kernels:
//!
//! * [`newton_step`]: `x - f/f'`.
//! * [`euler_flow_step`]: explicit Euler on `dx/dt = -f/(μf + f')` with step `h`.
//! * [`wu_step`]: the Euler flow step with `h = 1`.
//! * [`zheng_step`]: derivative-free, difference quotient with step `f(x)`.
//! * [`secant_dyn_step`]: derivative-free, difference quotient with step
//!   `x_n - x_{n-1}`.
//! * [`secant_step`]: the classical secant method (`secant_dyn_step` with `μ = 0`).
//!
//! [`run`] never returns numerical failures as errors; they end up in the
//! [`RunOutcome`] verdict.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::problems::{EvalError, ProblemSpec};

/// Denominators (and derivatives) smaller than this in magnitude are
/// treated as degenerate.
pub const DENOMINATOR_FLOOR: f64 = 1e-300;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const DEFAULT_MAX_ITERS: usize = 500;
pub const DEFAULT_ESCAPE_BOUND: f64 = 1e12;

/// Failure of a single kernel application.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum StepError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("derivative {0:e} is too small")]
    DerivativeZero(f64),
    #[error("denominator {0:e} is too small")]
    DenominatorUnderflow(f64),
    #[error("previous and current iterates coincide")]
    StagnantPair,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    Newton,
    EulerFlow,
    Wu,
    Zheng,
    SecantDyn,
    Secant,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Newton,
        Scheme::EulerFlow,
        Scheme::Wu,
        Scheme::Zheng,
        Scheme::SecantDyn,
        Scheme::Secant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Newton => "newton",
            Scheme::EulerFlow => "euler",
            Scheme::Wu => "wu",
            Scheme::Zheng => "zheng",
            Scheme::SecantDyn => "secant-dyn",
            Scheme::Secant => "secant",
        }
    }

    /// One-line formula, used in CLI help.
    pub fn formula(self) -> &'static str {
        match self {
            Scheme::Newton => "x - f(x)/f'(x)",
            Scheme::EulerFlow => "x - h f(x)/(mu f(x) + f'(x))",
            Scheme::Wu => "x - f(x)/(mu f(x) + f'(x))",
            Scheme::Zheng => "x - f^2/(mu f^2 + f(x + f) - f)",
            Scheme::SecantDyn => {
                "x_n - f_n (x_n - x_{n-1})/(mu (x_n - x_{n-1}) f_n + f_n - f_{n-1})"
            }
            Scheme::Secant => "x_n - f_n (x_n - x_{n-1})/(f_n - f_{n-1})",
        }
    }

    pub fn uses_derivative(self) -> bool {
        matches!(self, Scheme::Newton | Scheme::EulerFlow | Scheme::Wu)
    }

    pub fn is_two_point(self) -> bool {
        matches!(self, Scheme::SecantDyn | Scheme::Secant)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("unknown name `{0}`")]
pub struct UnknownName(pub String);

impl FromStr for Scheme {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| UnknownName(s.to_owned()))
    }
}

/// How two-point schemes obtain `x_1` from `x_0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Bootstrap {
    /// One derivative-free Zheng step from `x_0` with the run's μ.
    #[default]
    ZhengFirstStep,
    /// `x_1 = x_0 - sign(f(x_0)) ε max(1, |x_0|)`.
    OffsetX0,
}

impl Bootstrap {
    pub const ALL: [Bootstrap; 2] = [Bootstrap::ZhengFirstStep, Bootstrap::OffsetX0];

    pub fn name(self) -> &'static str {
        match self {
            Bootstrap::ZhengFirstStep => "zheng-first-step",
            Bootstrap::OffsetX0 => "offset-x0",
        }
    }
}

impl FromStr for Bootstrap {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Bootstrap::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| UnknownName(s.to_owned()))
    }
}

/// Which smallness test declares convergence.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// `|x_{n+1} - x_n| <= ε`
    #[default]
    StepSize,
    /// `|f(x_{n+1})| <= ε`
    Residual,
    /// Whichever of the two fires first.
    Either,
}

impl StopRule {
    pub const ALL: [StopRule; 3] = [StopRule::StepSize, StopRule::Residual, StopRule::Either];

    pub fn name(self) -> &'static str {
        match self {
            StopRule::StepSize => "step",
            StopRule::Residual => "residual",
            StopRule::Either => "either",
        }
    }

    fn tests_step(self) -> bool {
        matches!(self, StopRule::StepSize | StopRule::Either)
    }

    fn tests_residual(self) -> bool {
        matches!(self, StopRule::Residual | StopRule::Either)
    }
}

impl FromStr for StopRule {
    type Err = UnknownName;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StopRule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| UnknownName(s.to_owned()))
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("mu must be finite, got {0}")]
    BadMu(f64),
    #[error("step length h must be positive and finite, got {0}")]
    BadStepLength(f64),
    #[error("epsilon must be positive and finite, got {0}")]
    BadEpsilon(f64),
    #[error("max_iters must be at least 1")]
    ZeroMaxIters,
    #[error("escape bound must be positive, got {0}")]
    BadEscapeBound(f64),
    #[error("x0 = {x0} is outside the domain of `{problem}`")]
    X0OutsideDomain { problem: String, x0: f64 },
    #[error("scheme {scheme} needs a derivative but `{problem}` has none")]
    MissingDerivative { problem: String, scheme: Scheme },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub scheme: Scheme,
    /// Ignored by `newton` and `secant`.
    pub mu: f64,
    /// Euler step length; only `euler` reads it.
    pub h: f64,
    pub epsilon: f64,
    /// Budget of counted iterations. The bootstrap step of a two-point
    /// scheme is not counted.
    pub max_iters: usize,
    pub bootstrap: Bootstrap,
    pub stop_rule: StopRule,
    pub escape_bound: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self::new(Scheme::SecantDyn, 0.0)
    }
}

impl SolverConfig {
    pub fn new(scheme: Scheme, mu: f64) -> Self {
        Self {
            scheme,
            mu,
            h: 1.0,
            epsilon: DEFAULT_EPSILON,
            max_iters: DEFAULT_MAX_ITERS,
            bootstrap: Bootstrap::default(),
            stop_rule: StopRule::default(),
            escape_bound: DEFAULT_ESCAPE_BOUND,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if !self.mu.is_finite() {
            return Err(ConfigError::BadMu(self.mu));
        }
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(ConfigError::BadStepLength(self.h));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(ConfigError::BadEpsilon(self.epsilon));
        }
        if self.max_iters == 0 {
            return Err(ConfigError::ZeroMaxIters);
        }
        if !(self.escape_bound > 0.0) {
            return Err(ConfigError::BadEscapeBound(self.escape_bound));
        }
        Ok(())
    }
}

fn newton_update(x: f64, fx: f64, dfx: f64) -> Result<f64, StepError> {
    if dfx.abs() < DENOMINATOR_FLOOR {
        return Err(StepError::DerivativeZero(dfx));
    }
    Ok(x - fx / dfx)
}

fn euler_update(x: f64, fx: f64, dfx: f64, mu: f64, h: f64) -> Result<f64, StepError> {
    let denom = mu * fx + dfx;
    if denom.abs() < DENOMINATOR_FLOOR {
        return Err(StepError::DenominatorUnderflow(denom));
    }
    Ok(x - h * fx / denom)
}

// f(x + f) - f is formed before adding μf²: near x = 50 on the exp problem
// f ~ 1e-20 and μf² would otherwise be absorbed.
fn zheng_update(x: f64, fx: f64, f_probe: f64, mu: f64) -> Result<f64, StepError> {
    let denom = mu * fx * fx + (f_probe - fx);
    if denom.abs() < DENOMINATOR_FLOOR {
        return Err(StepError::DenominatorUnderflow(denom));
    }
    Ok(x - fx * fx / denom)
}

fn secant_dyn_update(
    x_prev: f64,
    f_prev: f64,
    x_curr: f64,
    f_curr: f64,
    mu: f64,
) -> Result<f64, StepError> {
    let dx = x_curr - x_prev;
    if dx.abs() < DENOMINATOR_FLOOR {
        return Err(StepError::StagnantPair);
    }
    let denom = mu * dx * f_curr + f_curr - f_prev;
    if denom.abs() < DENOMINATOR_FLOOR {
        return Err(StepError::DenominatorUnderflow(denom));
    }
    Ok(x_curr - f_curr * dx / denom)
}

fn zheng_from(p: &ProblemSpec, x: f64, fx: f64, mu: f64) -> Result<f64, StepError> {
    let f_probe = p.probe_f(x + fx)?;
    zheng_update(x, fx, f_probe, mu)
}

pub fn newton_step(p: &ProblemSpec, x: f64) -> Result<f64, StepError> {
    newton_update(x, p.eval_f(x)?, p.eval_df(x)?)
}

pub fn euler_flow_step(p: &ProblemSpec, x: f64, mu: f64, h: f64) -> Result<f64, StepError> {
    euler_update(x, p.eval_f(x)?, p.eval_df(x)?, mu, h)
}

pub fn wu_step(p: &ProblemSpec, x: f64, mu: f64) -> Result<f64, StepError> {
    euler_flow_step(p, x, mu, 1.0)
}

/// Derivative-free step whose difference quotient uses `f(x)` as its
/// increment. The probe `x + f(x)` only needs `f` to be finite there.
pub fn zheng_step(p: &ProblemSpec, x: f64, mu: f64) -> Result<f64, StepError> {
    zheng_from(p, x, p.eval_f(x)?, mu)
}

/// Derivative-free two-point step whose difference quotient uses the last
/// increment `x_curr - x_prev`.
pub fn secant_dyn_step(
    p: &ProblemSpec,
    x_prev: f64,
    x_curr: f64,
    mu: f64,
) -> Result<f64, StepError> {
    secant_dyn_update(x_prev, p.eval_f(x_prev)?, x_curr, p.eval_f(x_curr)?, mu)
}

pub fn secant_step(p: &ProblemSpec, x_prev: f64, x_curr: f64) -> Result<f64, StepError> {
    secant_dyn_step(p, x_prev, x_curr, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub n: usize,
    pub x: f64,
    pub f: f64,
}

/// Every accepted iterate of a run, starting with `x_0`.
#[derive(Debug, Clone, PartialEq)]
pub struct IterationTrace {
    pub points: Vec<TracePoint>,
    pub known_root: Option<f64>,
}

impl IterationTrace {
    /// `e_n = x_n - x*`, when the root is known.
    pub fn errors(&self) -> Option<Vec<f64>> {
        let root = self.known_root?;
        Some(self.points.iter().map(|pt| pt.x - root).collect())
    }

    /// Builds a trace from raw iterates; residuals are left at zero.
    /// Mostly useful for feeding hand-made error sequences to the analysis.
    pub fn from_iterates(xs: &[f64], known_root: Option<f64>) -> Self {
        Self {
            points: xs
                .iter()
                .enumerate()
                .map(|(n, &x)| TracePoint { n, x, f: 0.0 })
                .collect(),
            known_root,
        }
    }

    pub fn last(&self) -> &TracePoint {
        self.points.last().expect("trace always holds x0")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Converged,
    Diverged,
    Exhausted,
}

impl Verdict {
    pub fn name(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::Diverged => "diverged",
            Verdict::Exhausted => "exhausted",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reason {
    StepBelowEpsilon,
    ResidualBelowEpsilon,
    DomainViolation,
    NonFinite,
    DerivativeZero,
    DenominatorUnderflow,
    StagnantPair,
    EscapeBoundExceeded,
    MaxItersReached,
}

impl Reason {
    pub fn name(self) -> &'static str {
        match self {
            Reason::StepBelowEpsilon => "step_below_epsilon",
            Reason::ResidualBelowEpsilon => "residual_below_epsilon",
            Reason::DomainViolation => "domain_violation",
            Reason::NonFinite => "nonfinite",
            Reason::DerivativeZero => "derivative_zero",
            Reason::DenominatorUnderflow => "denominator_underflow",
            Reason::StagnantPair => "stagnant_pair",
            Reason::EscapeBoundExceeded => "escape_bound_exceeded",
            Reason::MaxItersReached => "max_iters_reached",
        }
    }

    fn from_step_error(err: StepError) -> Self {
        match err {
            StepError::Eval(EvalError::DomainViolation(_)) => Reason::DomainViolation,
            StepError::Eval(EvalError::NonFiniteValue(_)) => Reason::NonFinite,
            StepError::Eval(EvalError::MissingDerivative) => {
                unreachable!("derivative availability is checked before iterating")
            }
            StepError::DerivativeZero(_) => Reason::DerivativeZero,
            StepError::DenominatorUnderflow(_) => Reason::DenominatorUnderflow,
            StepError::StagnantPair => Reason::StagnantPair,
        }
    }
}

impl fmt::Display for Reason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(self.name())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub verdict: Verdict,
    pub reason: Reason,
    /// Kernel applications, not counting a two-point bootstrap.
    pub iterations: usize,
    /// Last accepted iterate.
    pub final_x: f64,
    /// The iterate rejected by a domain, finiteness or escape check.
    pub rejected_x: Option<f64>,
    /// Whether `trace.points[1]` was produced by the bootstrap rule.
    pub bootstrapped: bool,
    pub trace: IterationTrace,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.verdict == Verdict::Converged
    }

    /// `|f(final_x)|`.
    pub fn residual(&self) -> f64 {
        self.trace.last().f.abs()
    }
}

struct Driver<'a> {
    problem: &'a ProblemSpec,
    cfg: &'a SolverConfig,
    points: Vec<TracePoint>,
    rejected_x: Option<f64>,
}

enum Accept {
    Continue,
    Stop(Verdict, Reason),
}

impl Driver<'_> {
    fn curr(&self) -> TracePoint {
        *self.points.last().unwrap()
    }

    fn prev(&self) -> TracePoint {
        self.points[self.points.len() - 2]
    }

    fn accept(&mut self, x_next: f64) -> Accept {
        if !x_next.is_finite() {
            self.rejected_x = Some(x_next);
            return Accept::Stop(Verdict::Diverged, Reason::NonFinite);
        }
        if x_next.abs() > self.cfg.escape_bound {
            self.rejected_x = Some(x_next);
            return Accept::Stop(Verdict::Diverged, Reason::EscapeBoundExceeded);
        }
        let f_next = match self.problem.eval_f(x_next) {
            Ok(v) => v,
            Err(err) => {
                self.rejected_x = Some(x_next);
                return Accept::Stop(Verdict::Diverged, Reason::from_step_error(err.into()));
            }
        };
        let x_curr = self.curr().x;
        self.points.push(TracePoint {
            n: self.points.len(),
            x: x_next,
            f: f_next,
        });

        let rule = self.cfg.stop_rule;
        let eps = self.cfg.epsilon;
        if rule.tests_step() && (x_next - x_curr).abs() <= eps {
            Accept::Stop(Verdict::Converged, Reason::StepBelowEpsilon)
        } else if f_next == 0.0 || (rule.tests_residual() && f_next.abs() <= eps) {
            Accept::Stop(Verdict::Converged, Reason::ResidualBelowEpsilon)
        } else {
            Accept::Continue
        }
    }

    fn next_iterate(&self) -> Result<f64, StepError> {
        let p = self.problem;
        let cfg = self.cfg;
        let curr = self.curr();
        match cfg.scheme {
            Scheme::Newton => newton_update(curr.x, curr.f, p.eval_df(curr.x)?),
            Scheme::EulerFlow => euler_update(curr.x, curr.f, p.eval_df(curr.x)?, cfg.mu, cfg.h),
            Scheme::Wu => euler_update(curr.x, curr.f, p.eval_df(curr.x)?, cfg.mu, 1.0),
            Scheme::Zheng => zheng_from(p, curr.x, curr.f, cfg.mu),
            Scheme::SecantDyn | Scheme::Secant => {
                let mu = if cfg.scheme == Scheme::Secant {
                    0.0
                } else {
                    cfg.mu
                };
                let prev = self.prev();
                secant_dyn_update(prev.x, prev.f, curr.x, curr.f, mu)
            }
        }
    }

    fn bootstrap_iterate(&self) -> Result<f64, StepError> {
        let x0 = self.curr();
        match self.cfg.bootstrap {
            Bootstrap::ZhengFirstStep => zheng_from(self.problem, x0.x, x0.f, self.cfg.mu),
            Bootstrap::OffsetX0 => {
                Ok(x0.x - x0.f.signum() * self.cfg.epsilon * x0.x.abs().max(1.0))
            }
        }
    }

    fn step_failure(&self, err: StepError) -> (Verdict, Reason) {
        match err {
            StepError::StagnantPair if self.cfg.stop_rule.tests_step() => {
                (Verdict::Converged, Reason::StepBelowEpsilon)
            }
            other => (Verdict::Diverged, Reason::from_step_error(other)),
        }
    }
}

/// Iterates `cfg.scheme` from `x0` until convergence, divergence or
/// exhaustion of `cfg.max_iters`.
///
/// Two-point schemes first derive `x_1` with `cfg.bootstrap`; that step is
/// recorded in the trace but not counted in `iterations`. An iterate with
/// `f = 0` exactly is accepted as converged under every stop rule.
pub fn run(p: &ProblemSpec, cfg: &SolverConfig, x0: f64) -> Result<RunOutcome, ConfigError> {
    cfg.validate()?;
    if !p.domain().contains(x0) {
        return Err(ConfigError::X0OutsideDomain {
            problem: p.name().to_owned(),
            x0,
        });
    }
    if cfg.scheme.uses_derivative() && !p.has_derivative() {
        return Err(ConfigError::MissingDerivative {
            problem: p.name().to_owned(),
            scheme: cfg.scheme,
        });
    }

    let mut driver = Driver {
        problem: p,
        cfg,
        points: Vec::new(),
        rejected_x: None,
    };
    let mut iterations = 0;
    let mut bootstrapped = false;

    let (verdict, reason) = 'solve: {
        let f0 = match p.eval_f(x0) {
            Ok(v) => v,
            Err(err) => {
                driver.rejected_x = Some(x0);
                // keep the trace non-empty
                driver.points.push(TracePoint {
                    n: 0,
                    x: x0,
                    f: f64::NAN,
                });
                break 'solve (Verdict::Diverged, Reason::from_step_error(err.into()));
            }
        };
        driver.points.push(TracePoint { n: 0, x: x0, f: f0 });
        if f0 == 0.0 {
            break 'solve (Verdict::Converged, Reason::ResidualBelowEpsilon);
        }

        if cfg.scheme.is_two_point() {
            bootstrapped = true;
            match driver.bootstrap_iterate() {
                Ok(x1) => {
                    if let Accept::Stop(v, r) = driver.accept(x1) {
                        break 'solve (v, r);
                    }
                }
                Err(err) => break 'solve driver.step_failure(err),
            }
        }

        while iterations < cfg.max_iters {
            let step = driver.next_iterate();
            iterations += 1;
            match step {
                Ok(x_next) => {
                    if let Accept::Stop(v, r) = driver.accept(x_next) {
                        break 'solve (v, r);
                    }
                }
                Err(err) => break 'solve driver.step_failure(err),
            }
        }
        (Verdict::Exhausted, Reason::MaxItersReached)
    };

    let trace = IterationTrace {
        points: driver.points,
        known_root: p.known_root(),
    };
    Ok(RunOutcome {
        verdict,
        reason,
        iterations,
        final_x: trace.last().x,
        rejected_x: driver.rejected_x,
        bootstrapped,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{find_problem, Interval};
    use std::f64::consts::PI;

    fn poly(name: &str, f: fn(f64) -> f64, df: fn(f64) -> f64) -> ProblemSpec {
        ProblemSpec::new(name, f, Interval::new(-100.0, 100.0).unwrap(), 1.0)
            .unwrap()
            .with_derivative(df)
    }

    fn linear() -> ProblemSpec {
        poly("x", |x| x, |_| 1.0)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn newton_examples() {
        let p = poly("x2-4", |x| x * x - 4.0, |x| 2.0 * x);
        assert!(close(newton_step(&p, 3.0).unwrap(), 13.0 / 6.0, 1e-15));
        assert_eq!(newton_step(&linear(), 7.0).unwrap(), 0.0);

        let log = find_problem("log").unwrap();
        let x1 = newton_step(&log, 5.0).unwrap();
        assert!(close(x1, 5.0 - 5.0 * 5f64.ln(), 1e-15));
        assert!(close(x1, -3.0472, 1e-4));
        assert_eq!(
            newton_step(&log, x1),
            Err(StepError::Eval(EvalError::DomainViolation(x1)))
        );
    }

    #[test]
    fn newton_flat_derivative() {
        let p = poly("x2+1", |x| x * x + 1.0, |x| 2.0 * x);
        assert_eq!(newton_step(&p, 0.0), Err(StepError::DerivativeZero(0.0)));
    }

    #[test]
    fn euler_flow_examples() {
        assert_eq!(euler_flow_step(&linear(), 4.0, 0.0, 1.0).unwrap(), 0.0);
        assert_eq!(euler_flow_step(&linear(), 4.0, 0.0, 0.5).unwrap(), 2.0);
        let log = find_problem("log").unwrap();
        let x1 = euler_flow_step(&log, 5.0, 0.135, 1.0).unwrap();
        let ln5 = 5f64.ln();
        assert!(close(x1, 5.0 - ln5 / (0.135 * ln5 + 0.2), 1e-15));
        assert!(close(x1, 1.142972, 1e-6));
    }

    #[test]
    fn euler_flow_underflow() {
        // μf + f' = -1·1 + 1 = 0 at x = 1 for f(x) = x
        assert!(matches!(
            euler_flow_step(&linear(), 1.0, -1.0, 1.0),
            Err(StepError::DenominatorUnderflow(_))
        ));
    }

    #[test]
    fn wu_examples() {
        assert_eq!(wu_step(&linear(), 9.0, 0.0).unwrap(), 0.0);
        let p = poly("expm1", |x| x.exp() - 1.0, f64::exp);
        let x = 0.1f64;
        let fx = x.exp() - 1.0;
        let expected = x - fx / (fx + x.exp());
        let got = wu_step(&p, x, 1.0).unwrap();
        assert!(close(got, expected, 1e-16));
        assert!(close(got, 0.013106, 1e-6));
    }

    #[test]
    fn zheng_examples() {
        assert_eq!(zheng_step(&linear(), 4.0, 0.0).unwrap(), 0.0);
        // f(x) = x + 1 has f(x + f) - f = f, so μ = -1/f cancels the denominator
        let p = poly("x+1", |x| x + 1.0, |_| 1.0);
        assert!(matches!(
            zheng_step(&p, 1.0, -0.5),
            Err(StepError::DenominatorUnderflow(_))
        ));
        // probe beyond the domain is fine as long as f is defined there
        let log = find_problem("log").unwrap();
        assert!(zheng_step(&log, 5.0, 1.0).is_ok());
        // probe where ln is undefined
        let wide = ProblemSpec::new("ln", f64::ln, Interval::new(0.01, 5.0).unwrap(), 1.0).unwrap();
        assert_eq!(
            zheng_step(&wide, 0.01, 1.0),
            Err(StepError::Eval(EvalError::NonFiniteValue(
                0.01 + 0.01f64.ln()
            )))
        );
    }

    #[test]
    fn secant_dyn_examples() {
        for (xp, xc) in [(1.0, 2.0), (-3.0, 7.5), (0.25, -0.125)] {
            assert_eq!(secant_dyn_step(&linear(), xp, xc, 0.0).unwrap(), 0.0);
        }
        let p = poly("x2-1", |x| x * x - 1.0, |x| 2.0 * x);
        let x2 = secant_dyn_step(&p, 2.0, 1.5, 0.0).unwrap();
        assert!(close(x2, 1.5 - 0.625 / 1.75, 1e-15));
        assert!(close(x2, 1.142857, 1e-6));
        assert_eq!(
            secant_dyn_step(&p, 1.5, 1.5, 0.3),
            Err(StepError::StagnantPair)
        );
        assert!(matches!(
            secant_dyn_step(&p, -1.5, 1.5, 0.0),
            Err(StepError::DenominatorUnderflow(_))
        ));
    }

    #[test]
    fn secant_examples() {
        let p = poly("x2-4", |x| x * x - 4.0, |x| 2.0 * x);
        let x2 = secant_step(&p, 3.0, 2.5).unwrap();
        assert!(close(x2, 2.5 - 2.25 * (-0.5) / (2.25 - 5.0), 1e-15));
        assert!(close(x2, 2.0909, 1e-4));
        assert_eq!(secant_step(&linear(), 1.0, 2.0).unwrap(), 0.0);
        assert_eq!(
            secant_step(&p, 3.0, 2.5),
            secant_dyn_step(&p, 3.0, 2.5, 0.0)
        );
    }

    #[test]
    fn names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        for b in Bootstrap::ALL {
            assert_eq!(b.name().parse::<Bootstrap>().unwrap(), b);
        }
        for r in StopRule::ALL {
            assert_eq!(r.name().parse::<StopRule>().unwrap(), r);
        }
        assert!("halley".parse::<Scheme>().is_err());
    }

    #[test]
    fn config_validation() {
        let ok = SolverConfig::new(Scheme::EulerFlow, 0.1);
        assert!(ok.validate().is_ok());
        assert_eq!(
            SolverConfig { h: 0.0, ..ok }.validate(),
            Err(ConfigError::BadStepLength(0.0))
        );
        assert_eq!(
            SolverConfig {
                epsilon: -1.0,
                ..ok
            }
            .validate(),
            Err(ConfigError::BadEpsilon(-1.0))
        );
        assert_eq!(
            SolverConfig { max_iters: 0, ..ok }.validate(),
            Err(ConfigError::ZeroMaxIters)
        );
        assert_eq!(
            SolverConfig {
                escape_bound: 0.0,
                ..ok
            }
            .validate(),
            Err(ConfigError::BadEscapeBound(0.0))
        );
        assert!(matches!(
            SolverConfig { mu: f64::NAN, ..ok }.validate(),
            Err(ConfigError::BadMu(_))
        ));

        let log = find_problem("log").unwrap();
        assert!(matches!(
            run(&log, &ok, 6.0),
            Err(ConfigError::X0OutsideDomain { .. })
        ));
        let bare = ProblemSpec::new("bare", |x| x, Interval::new(-1.0, 1.0).unwrap(), 0.5).unwrap();
        assert!(matches!(
            run(&bare, &SolverConfig::new(Scheme::Newton, 0.0), 0.5),
            Err(ConfigError::MissingDerivative { .. })
        ));
        assert!(run(&bare, &SolverConfig::new(Scheme::Zheng, 0.0), 0.5).is_ok());
    }

    #[test]
    fn run_log_newton_leaves_domain() {
        let log = find_problem("log").unwrap();
        let out = run(&log, &SolverConfig::new(Scheme::Newton, 0.0), 5.0).unwrap();
        assert_eq!(out.verdict, Verdict::Diverged);
        assert_eq!(out.reason, Reason::DomainViolation);
        assert_eq!(out.iterations, 1);
        assert_eq!(out.final_x, 5.0);
        assert!(close(out.rejected_x.unwrap(), -3.0472, 1e-4));
    }

    #[test]
    fn run_secant_dyn_table_rows() {
        let log = find_problem("log").unwrap();
        let out = run(&log, &SolverConfig::new(Scheme::SecantDyn, 0.135), 5.0).unwrap();
        assert!(out.converged());
        assert_eq!(out.iterations, 6);
        assert_eq!(format!("{:.6}", out.final_x), "1.000000");

        let exp = find_problem("exp").unwrap();
        let out = run(&exp, &SolverConfig::new(Scheme::SecantDyn, 1.18), 50.0).unwrap();
        assert!(out.converged());
        assert!((39..=41).contains(&out.iterations), "{}", out.iterations);
        assert_eq!(format!("{:.6}", out.final_x), "1.000000");
    }

    #[test]
    fn run_from_root_stops_immediately() {
        let trig = find_problem("trig").unwrap();
        let out = run(&trig, &SolverConfig::new(Scheme::SecantDyn, 2.65), PI / 6.0).unwrap();
        assert!(out.converged());
        assert!(out.iterations <= 1);
        // the bootstrap may move by one ulp
        assert!(close(out.final_x, PI / 6.0, 2.0 * f64::EPSILON));

        let lin = linear();
        for scheme in Scheme::ALL {
            let out = run(&lin, &SolverConfig::new(scheme, 0.5), 0.0).unwrap();
            assert_eq!(
                (out.verdict, out.reason, out.iterations),
                (Verdict::Converged, Reason::ResidualBelowEpsilon, 0)
            );
        }
    }

    #[test]
    fn run_exhausts_budget() {
        // h = 0.01 contracts by 0.99 per step
        let cfg = SolverConfig {
            h: 0.01,
            max_iters: 20,
            ..SolverConfig::new(Scheme::EulerFlow, 0.0)
        };
        let out = run(&linear(), &cfg, 1.0).unwrap();
        assert_eq!(
            (out.verdict, out.reason, out.iterations),
            (Verdict::Exhausted, Reason::MaxItersReached, 20)
        );
        assert_eq!(out.trace.points.len(), 21);
    }

    #[test]
    fn run_escape_bound() {
        // Newton on atan overshoots outward from |x0| > 1.39
        let p = ProblemSpec::new(
            "atan",
            f64::atan,
            Interval::new(-1e300, 1e300).unwrap(),
            3.0,
        )
        .unwrap()
        .with_derivative(|x| 1.0 / (1.0 + x * x));
        let cfg = SolverConfig {
            escape_bound: 1e6,
            ..SolverConfig::new(Scheme::Newton, 0.0)
        };
        let out = run(&p, &cfg, 3.0).unwrap();
        assert_eq!(out.reason, Reason::EscapeBoundExceeded);
        assert!(out.rejected_x.unwrap().abs() > 1e6);
    }

    #[test]
    fn residual_rule_and_stagnation() {
        let p = poly("x2-2", |x| x * x - 2.0, |x| 2.0 * x);
        let cfg = SolverConfig {
            stop_rule: StopRule::Residual,
            ..SolverConfig::new(Scheme::Newton, 0.0)
        };
        let out = run(&p, &cfg, 1.0).unwrap();
        assert_eq!(out.reason, Reason::ResidualBelowEpsilon);
        assert!(out.residual() <= 1e-5);

        // f = 1 everywhere off the root: secant quotient vanishes
        let flat = ProblemSpec::new(
            "flat",
            |x: f64| if x > 0.0 { 1.0 } else { -1.0 },
            Interval::new(-10.0, 10.0).unwrap(),
            1.0,
        )
        .unwrap();
        let cfg = SolverConfig {
            bootstrap: Bootstrap::OffsetX0,
            stop_rule: StopRule::Residual,
            ..SolverConfig::new(Scheme::Secant, 0.0)
        };
        let out = run(&flat, &cfg, 1.0).unwrap();
        assert_eq!(
            (out.verdict, out.reason),
            (Verdict::Diverged, Reason::DenominatorUnderflow)
        );
    }

    #[test]
    fn trace_records_every_iterate() {
        let trig = find_problem("trig").unwrap();
        let cfg = SolverConfig::new(Scheme::SecantDyn, 2.65);
        let out = run(&trig, &cfg, trig.default_x0()).unwrap();
        let pts = &out.trace.points;
        assert!(out.bootstrapped);
        assert_eq!(pts.len(), out.iterations + 2);
        assert!(pts.iter().enumerate().all(|(i, pt)| pt.n == i));
        let errors = out.trace.errors().unwrap();
        for (pt, e) in pts.iter().zip(&errors) {
            assert_eq!(*e, pt.x - PI / 6.0);
        }
        assert_eq!(pts[1].x, zheng_step(&trig, pts[0].x, 2.65).unwrap());
        for n in 1..pts.len() - 1 {
            assert_eq!(
                pts[n + 1].x,
                secant_dyn_step(&trig, pts[n - 1].x, pts[n].x, 2.65).unwrap()
            );
        }
    }
}
