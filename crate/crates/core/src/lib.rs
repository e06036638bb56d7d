//! Scalar root finding with a derivative-free Newton-like iteration obtained
//! by discretising the flow `dx/dt = -f(x)/(μf(x) + f'(x))`, together with
//! the baselines it is compared against and the tooling to benchmark them.
//!
//! * [`problems`]: test equations and their domains.
//! * [`solvers`]: step kernels and the iteration driver.
//! * [`analysis`]: empirical convergence order and error constants.
//! * [`harness`]: benchmark table, parameter sweeps and basin grids.

pub mod analysis;
pub mod harness;
pub mod problems;
pub mod solvers;

pub use problems::{builtin_problems, find_problem, Interval, ProblemSpec};
pub use solvers::{
    run, Bootstrap, IterationTrace, Reason, RunOutcome, Scheme, SolverConfig, StopRule, Verdict,
};
