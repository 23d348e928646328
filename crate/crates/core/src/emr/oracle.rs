//! Reference solutions used to cross-check the solver.

use std::sync::Arc;

use crate::algebra::PreBooleanAlgebra;
use crate::belief::Bba;
use crate::optim::{entropy, lp_solve, LpStatus, DEFAULT_CELL_CAP};

use super::{
    enhancement_violations, EmrError, FusionOutcome, FusionResult, JointAssignment, Problem,
    Rejection, SolverDiagnostics,
};

/// Residual at which iterative fitting stops.
pub const IPF_TOL: f64 = 1e-10;
/// Cap on full sweeps over all axes.
pub const IPF_MAX_SWEEPS: usize = 100_000;

const SUPPORT_TOL: f64 = 1e-12;

/// Powerset algebra on `{a, b, c}` with `m1 = {a: alpha1, c: gamma1, top: rest}`
/// and `m2 = {b: beta2, c: gamma2, top: rest}`.
pub fn zadeh_family_sources(
    alpha1: f64,
    gamma1: f64,
    beta2: f64,
    gamma2: f64,
) -> Result<(Arc<PreBooleanAlgebra>, Bba, Bba), EmrError> {
    check_zadeh_parameters(alpha1, gamma1, beta2, gamma2)?;
    let alg =
        Arc::new(PreBooleanAlgebra::powerset(&["a", "b", "c"]).expect("three atoms always build"));
    let p = |name: &str| alg.atom(name).expect("atom exists");
    let m1 = Bba::from_masses(
        alg.clone(),
        [
            (p("a"), alpha1),
            (p("c"), gamma1),
            (alg.top(), (1.0 - alpha1 - gamma1).max(0.0)),
        ],
        true,
    );
    let m2 = Bba::from_masses(
        alg.clone(),
        [
            (p("b"), beta2),
            (p("c"), gamma2),
            (alg.top(), (1.0 - beta2 - gamma2).max(0.0)),
        ],
        true,
    );
    Ok((alg, m1, m2))
}

fn check_zadeh_parameters(
    alpha1: f64,
    gamma1: f64,
    beta2: f64,
    gamma2: f64,
) -> Result<(), EmrError> {
    for (name, v) in [
        ("alpha1", alpha1),
        ("gamma1", gamma1),
        ("beta2", beta2),
        ("gamma2", gamma2),
    ] {
        if !(0.0..=1.0).contains(&v) {
            return Err(EmrError::Parameter(format!(
                "{name} = {v} is outside [0, 1]"
            )));
        }
    }
    if alpha1 + gamma1 > 1.0 + 1e-12 {
        return Err(EmrError::Parameter(format!(
            "alpha1 + gamma1 = {} exceeds 1",
            alpha1 + gamma1
        )));
    }
    if beta2 + gamma2 > 1.0 + 1e-12 {
        return Err(EmrError::Parameter(format!(
            "beta2 + gamma2 = {} exceeds 1",
            beta2 + gamma2
        )));
    }
    Ok(())
}

/// Closed-form maximum-entropy fusion of the Zadeh family.
///
/// With `theta = f(c, c)` every other cell is fixed by the marginals:
/// `f(a,top) = alpha1`, `f(top,b) = beta2`, `f(c,top) = gamma1 - theta`,
/// `f(top,c) = gamma2 - theta`, `f(top,top) = 1 - alpha1 - beta2 - gamma1 -
/// gamma2 + theta`. A valid `theta` exists iff
/// `max(0, alpha1 + beta2 + gamma1 + gamma2 - 1) <= min(gamma1, gamma2)`, and
/// the entropy is maximal at `theta = gamma1 gamma2 / (1 - alpha1 - beta2)`.
pub fn zadeh_family_oracle(
    alpha1: f64,
    gamma1: f64,
    beta2: f64,
    gamma2: f64,
) -> Result<FusionOutcome, EmrError> {
    let (alg, m1, m2) = zadeh_family_sources(alpha1, gamma1, beta2, gamma2)?;
    let lower = (alpha1 + beta2 + gamma1 + gamma2 - 1.0).max(0.0);
    let upper = gamma1.min(gamma2);
    if lower > upper {
        return Ok(FusionOutcome::rejected(Rejection {
            infeasibility: lower - upper,
            violations: enhancement_violations(&[&m1, &m2]),
        }));
    }
    let free = 1.0 - alpha1 - beta2;
    let theta = if free > 0.0 {
        (gamma1 * gamma2 / free).clamp(lower, upper)
    } else {
        0.0
    };
    let cells = [
        alpha1,
        beta2,
        theta,
        gamma1 - theta,
        gamma2 - theta,
        free - gamma1 - gamma2 + theta,
    ];
    let p = |name: &str| alg.atom(name).expect("atom exists");
    let fused = Bba::from_masses(
        alg.clone(),
        [
            (p("a"), alpha1),
            (p("b"), beta2),
            (p("c"), gamma1 + gamma2 - theta),
            (alg.top(), cells[5]),
        ],
        true,
    );
    Ok(FusionOutcome {
        result: FusionResult::Fused(fused),
        diagnostics: SolverDiagnostics {
            entropy: entropy(&cells),
            iterations: 0,
            max_marginal_residual: 0.0,
            optimality_certificate: 0.0,
            certified: true,
            stop: None,
        },
        joint: None,
    })
}

/// Maximum-entropy joint assignment by iterative proportional fitting.
///
/// Cells that are zero at every feasible point are removed first (each cell
/// is maximized by linear programming). Fitting then starts from the uniform
/// assignment on the remaining cells and rescales one axis at a time.
pub fn ipf_oracle(bs: &[&Bba]) -> Result<JointAssignment, EmrError> {
    let problem = Problem::new(bs, DEFAULT_CELL_CAP)?;
    let poly = &problem.polytope;
    let n = poly.num_cells();

    let mut support = vec![false; n];
    for j in 0..n {
        let mut c = vec![0.0; n];
        c[j] = 1.0;
        let sol = lp_solve(&poly.lp(c))?;
        match sol.status {
            LpStatus::Optimal => support[j] = sol.value > SUPPORT_TOL,
            LpStatus::Infeasible => {
                return Err(crate::optim::OptimError::Infeasible {
                    phase_one_objective: sol.phase_one_objective,
                }
                .into())
            }
            LpStatus::Unbounded => return Err(crate::optim::OptimError::Unbounded.into()),
        }
    }

    let marginals = poly.marginals();
    let live = support.iter().filter(|&&s| s).count().max(1);
    let mut f: Vec<f64> = support
        .iter()
        .map(|&s| if s { 1.0 / live as f64 } else { 0.0 })
        .collect();
    let cells = poly.cells();

    for _ in 0..IPF_MAX_SWEEPS {
        for (k, target) in marginals.iter().enumerate() {
            let mut sums = vec![0.0; target.len()];
            for (cell, v) in cells.iter().zip(&f) {
                sums[cell[k]] += v;
            }
            for (cell, v) in cells.iter().zip(f.iter_mut()) {
                let s = sums[cell[k]];
                *v = if s > 0.0 {
                    *v * target[cell[k]] / s
                } else {
                    0.0
                };
            }
        }
        if poly.max_residual(&f) < IPF_TOL {
            return Ok(problem.joint(&f));
        }
    }
    Err(EmrError::IpfNotConverged {
        sweeps: IPF_MAX_SWEEPS,
        residual: poly.max_residual(&f),
    })
}
