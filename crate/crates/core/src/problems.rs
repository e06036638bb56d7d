//! Test equations `f(x) = 0` with their legal domains, known roots and
//! default starting points.
//!
//! A [`ProblemSpec`] owns the evaluator for `f` and, optionally, its exact
//! derivative. Iterates are only legal inside the closed interval
//! [`ProblemSpec::domain`]; [`ProblemSpec::eval_f`] enforces that, so solvers
//! never have to.

use std::f64::consts::{E, PI};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

/// Shared scalar evaluator.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Largest residual tolerated at a problem's registered root.
pub const ROOT_RESIDUAL_TOL: f64 = 1e-12;

/// Failure to evaluate `f` or `f'` at a point.
#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum EvalError {
    #[error("x = {0} lies outside the problem domain")]
    DomainViolation(f64),
    #[error("evaluation at x = {0} produced a non-finite value")]
    NonFiniteValue(f64),
    #[error("problem has no derivative evaluator")]
    MissingDerivative,
}

/// Rejected problem definition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProblemError {
    #[error("domain [{lo}, {hi}] is empty or not finite")]
    BadDomain { lo: f64, hi: f64 },
    #[error("default x0 = {0} is outside the domain")]
    X0OutsideDomain(f64),
    #[error("known root {0} is outside the domain")]
    RootOutsideDomain(f64),
    #[error("|f(root)| = {residual} exceeds {ROOT_RESIDUAL_TOL} at root {root}")]
    RootResidual { root: f64, residual: f64 },
}

/// Closed interval `[lo, hi]` with `lo < hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    lo: f64,
    hi: f64,
}

impl Interval {
    pub fn new(lo: f64, hi: f64) -> Result<Self, ProblemError> {
        if lo.is_finite() && hi.is_finite() && lo < hi {
            Ok(Self { lo, hi })
        } else {
            Err(ProblemError::BadDomain { lo, hi })
        }
    }

    pub fn lo(&self) -> f64 {
        self.lo
    }

    pub fn hi(&self) -> f64 {
        self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// `count` evenly spaced points including both endpoints.
    pub fn linspace(&self, count: usize) -> Vec<f64> {
        match count {
            0 => Vec::new(),
            1 => vec![self.lo],
            _ => {
                let last = (count - 1) as f64;
                (0..count)
                    .map(|i| {
                        if i == count - 1 {
                            self.hi
                        } else {
                            self.lo + (self.hi - self.lo) * (i as f64 / last)
                        }
                    })
                    .collect()
            }
        }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A scalar equation `f(x) = 0` together with its experimental setup.
#[derive(Clone)]
pub struct ProblemSpec {
    name: String,
    f: RealFn,
    df: Option<RealFn>,
    domain: Interval,
    known_root: Option<f64>,
    default_x0: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemSpec")
            .field("name", &self.name)
            .field("has_df", &self.df.is_some())
            .field("domain", &self.domain)
            .field("known_root", &self.known_root)
            .field("default_x0", &self.default_x0)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new<F>(
        name: impl Into<String>,
        f: F,
        domain: Interval,
        default_x0: f64,
    ) -> Result<Self, ProblemError>
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        if !domain.contains(default_x0) {
            return Err(ProblemError::X0OutsideDomain(default_x0));
        }
        Ok(Self {
            name: name.into(),
            f: Arc::new(f),
            df: None,
            domain,
            known_root: None,
            default_x0,
        })
    }

    /// Attaches the exact derivative. Only Newton, the Euler flow step and
    /// the analysis oracles read it.
    pub fn with_derivative<F>(mut self, df: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.df = Some(Arc::new(df));
        self
    }

    pub fn with_known_root(mut self, root: f64) -> Result<Self, ProblemError> {
        if !self.domain.contains(root) {
            return Err(ProblemError::RootOutsideDomain(root));
        }
        let residual = (self.f)(root).abs();
        if !(residual <= ROOT_RESIDUAL_TOL) {
            return Err(ProblemError::RootResidual { root, residual });
        }
        self.known_root = Some(root);
        Ok(self)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn domain(&self) -> Interval {
        self.domain
    }

    pub fn known_root(&self) -> Option<f64> {
        self.known_root
    }

    pub fn default_x0(&self) -> f64 {
        self.default_x0
    }

    pub fn has_derivative(&self) -> bool {
        self.df.is_some()
    }

    /// `f(x)` for an iterate: `x` must lie in the domain and the value must be
    /// finite.
    pub fn eval_f(&self, x: f64) -> Result<f64, EvalError> {
        if !self.domain.contains(x) {
            return Err(EvalError::DomainViolation(x));
        }
        self.probe_f(x)
    }

    /// `f(x)` at an auxiliary point of a difference quotient. Only finiteness
    /// is checked; the point is never accepted as an iterate.
    pub fn probe_f(&self, x: f64) -> Result<f64, EvalError> {
        let v = (self.f)(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFiniteValue(x))
        }
    }

    pub fn eval_df(&self, x: f64) -> Result<f64, EvalError> {
        let df = self.df.as_ref().ok_or(EvalError::MissingDerivative)?;
        if !self.domain.contains(x) {
            return Err(EvalError::DomainViolation(x));
        }
        let v = df(x);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(EvalError::NonFiniteValue(x))
        }
    }

    /// The same problem with `f` (and `f'`) multiplied by `kappa`.
    pub fn scaled(&self, kappa: f64) -> Self {
        let f = Arc::clone(&self.f);
        let df = self.df.clone();
        Self {
            name: format!("{}*{}", kappa, self.name),
            f: Arc::new(move |x| kappa * f(x)),
            df: df.map(|d| Arc::new(move |x| kappa * d(x)) as RealFn),
            domain: self.domain,
            known_root: self.known_root,
            default_x0: self.default_x0,
        }
    }
}

/// Registry names, in registration order.
pub const BUILTIN_NAMES: [&str; 3] = ["log", "exp", "trig"];

/// The three benchmark equations: logarithmic, exponential and trigonometric.
pub fn builtin_problems() -> Vec<ProblemSpec> {
    vec![log_problem(), exp_problem(), trig_problem()]
}

/// Looks a builtin problem up by its registry name.
pub fn find_problem(name: &str) -> Option<ProblemSpec> {
    builtin_problems().into_iter().find(|p| p.name() == name)
}

fn log_problem() -> ProblemSpec {
    ProblemSpec::new("log", f64::ln, Interval::new(0.5, 5.0).unwrap(), 5.0)
        .unwrap()
        .with_derivative(|x| 1.0 / x)
        .with_known_root(1.0)
        .unwrap()
}

fn exp_problem() -> ProblemSpec {
    ProblemSpec::new(
        "exp",
        |x| (x - 1.0) * (-x).exp(),
        Interval::new(-1.0, 50.0).unwrap(),
        50.0,
    )
    .unwrap()
    .with_derivative(|x| (2.0 - x) * (-x).exp())
    .with_known_root(1.0)
    .unwrap()
}

fn trig_problem() -> ProblemSpec {
    let hi = 11.0 * PI / 24.0;
    ProblemSpec::new(
        "trig",
        |x| 2.0 * x.sin() - 1.0,
        Interval::new(0.0, hi).unwrap(),
        hi,
    )
    .unwrap()
    .with_derivative(|x| 2.0 * x.cos())
    .with_known_root(PI / 6.0)
    .unwrap()
}

/// μ values used for the derivative-free comparison scheme on
/// `log`, `exp`, `trig`.
pub fn zheng_reference_mu(name: &str) -> Option<f64> {
    match name {
        "log" => Some(1.0),
        "exp" => Some(1.0 + 1.0 / E),
        "trig" => Some(0.5 + 3f64.sqrt() / 6.0),
        _ => None,
    }
}

/// μ values used for the two-point dynamical scheme on `log`, `exp`, `trig`.
pub fn secant_dyn_reference_mu(name: &str) -> Option<f64> {
    match name {
        "log" => Some(0.135),
        "exp" => Some(1.18),
        "trig" => Some(2.65),
        _ => None,
    }
}
