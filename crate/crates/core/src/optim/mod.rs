//! Optimization kernel: dense simplex and concave maximization over marginal
//! polytopes.

mod maxent;
mod polytope;
mod simplex;

pub use maxent::{
    entropy, feasible_point, maxent_projected_gradient, maximize, quadratic_projected_gradient,
    Entropy, MaxentSolution, NegSquares, Objective, StopReason,
};
pub use polytope::{MarginalPolytope, DEFAULT_CELL_CAP};
pub use simplex::{lp_solve, lp_solve_with, LinearProgram, LpSolution, LpStatus};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OptimError {
    #[error("malformed problem: {0}")]
    Dimension(String),
    #[error("no feasible point (phase-I objective {phase_one_objective:.3e})")]
    Infeasible { phase_one_objective: f64 },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex pivot limit reached")]
    PivotLimit,
    #[error("more than {cap} cells")]
    TooManyCells { cap: usize },
    #[error("invalid solver configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub max_iterations: usize,
    pub improvement_tol: f64,
    pub certificate_tol: f64,
    pub feasibility_tol: f64,
    pub ln_floor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            max_iterations: 10_000,
            improvement_tol: 1e-12,
            certificate_tol: 1e-7,
            feasibility_tol: 1e-9,
            ln_floor: 1e-12,
        }
    }
}

impl SolverConfig {
    pub fn check(&self) -> Result<(), OptimError> {
        let positive = [
            ("improvement_tol", self.improvement_tol),
            ("certificate_tol", self.certificate_tol),
            ("feasibility_tol", self.feasibility_tol),
            ("ln_floor", self.ln_floor),
        ];
        if self.max_iterations == 0 {
            return Err(OptimError::Config("max_iterations must be positive".into()));
        }
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(OptimError::Config(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }
}
