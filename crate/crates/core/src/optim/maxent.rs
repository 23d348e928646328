//! Concave maximization over a marginal polytope.
//!
//! The outer loop is the linearized-direction scheme: at each iterate solve
//! the LP `max grad.(v - f)` over the polytope (the optimal value is the
//! optimality certificate), then step toward the LP vertex with step halving
//! until the objective improves. Each iteration also tries a projected Newton
//! step restricted to the cells currently positive, which is what brings the
//! certificate down to `1e-7` in a few dozen iterations; a step is accepted
//! only if it increases the objective.

use nalgebra::{DMatrix, DVector};

use super::polytope::MarginalPolytope;
use super::simplex::{lp_solve_with, LpStatus};
use super::{OptimError, SolverConfig};

const MAX_HALVINGS: usize = 60;
const STALL_LIMIT: usize = 3;

/// Concave objective over the cell values.
pub trait Objective {
    fn value(&self, f: &[f64]) -> f64;
    fn gradient(&self, f: &[f64]) -> Vec<f64>;
    /// `-d²/df²` of the cell term at a positive value.
    fn curvature(&self, fi: f64) -> f64;
    /// Fraction of the distance to the boundary a Newton step may cover.
    fn boundary_fraction(&self) -> f64;
}

/// `H(f) = -sum f ln f`, with `0 ln 0 = 0`.
#[derive(Debug, Clone, Copy)]
pub struct Entropy {
    pub ln_floor: f64,
}

pub fn entropy(f: &[f64]) -> f64 {
    f.iter()
        .filter(|&&v| v > 0.0)
        .map(|&v| -v * v.ln())
        .fold(0.0, |acc, h| acc + h)
}

impl Objective for Entropy {
    fn value(&self, f: &[f64]) -> f64 {
        entropy(f)
    }

    fn gradient(&self, f: &[f64]) -> Vec<f64> {
        f.iter()
            .map(|&v| -(1.0 + v.max(self.ln_floor).ln()))
            .collect()
    }

    fn curvature(&self, fi: f64) -> f64 {
        1.0 / fi
    }

    fn boundary_fraction(&self) -> f64 {
        0.99
    }
}

/// `-sum f^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct NegSquares;

impl Objective for NegSquares {
    fn value(&self, f: &[f64]) -> f64 {
        -f.iter().map(|v| v * v).sum::<f64>()
    }

    fn gradient(&self, f: &[f64]) -> Vec<f64> {
        f.iter().map(|v| -2.0 * v).collect()
    }

    fn curvature(&self, _fi: f64) -> f64 {
        2.0
    }

    fn boundary_fraction(&self) -> f64 {
        1.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    /// LP improvement bound fell below `certificate_tol`.
    Certified,
    /// Improvements below `improvement_tol` for several iterations.
    Stalled,
    /// No halving of either direction improved the objective.
    NoImprovement,
    IterationLimit,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MaxentSolution {
    /// Values on the allowed cells, in the polytope's cell order.
    pub point: Vec<f64>,
    pub objective: f64,
    /// Direction LPs solved.
    pub iterations: usize,
    /// Best LP improvement `max grad.(v - f)` at the returned point.
    pub certificate: f64,
    pub certified: bool,
    pub max_residual: f64,
    pub stop: StopReason,
}

/// Feasible starting point from phase I.
pub fn feasible_point(
    poly: &MarginalPolytope,
    config: &SolverConfig,
) -> Result<Vec<f64>, OptimError> {
    let lp = poly.lp(vec![0.0; poly.num_cells()]);
    let sol = lp_solve_with(&lp, config.feasibility_tol)?;
    match sol.status {
        LpStatus::Infeasible => Err(OptimError::Infeasible {
            phase_one_objective: sol.phase_one_objective,
        }),
        LpStatus::Unbounded => Err(OptimError::Unbounded),
        LpStatus::Optimal => Ok(clamp(sol.point)),
    }
}

pub fn maxent_projected_gradient(
    poly: &MarginalPolytope,
    config: &SolverConfig,
) -> Result<MaxentSolution, OptimError> {
    maximize(
        poly,
        &Entropy {
            ln_floor: config.ln_floor,
        },
        config,
    )
}

pub fn quadratic_projected_gradient(
    poly: &MarginalPolytope,
    config: &SolverConfig,
) -> Result<MaxentSolution, OptimError> {
    maximize(poly, &NegSquares, config)
}

pub fn maximize(
    poly: &MarginalPolytope,
    objective: &dyn Objective,
    config: &SolverConfig,
) -> Result<MaxentSolution, OptimError> {
    config.check()?;
    let mut f = feasible_point(poly, config)?;
    let a = poly.equality_matrix();
    let mut h = objective.value(&f);
    let mut iterations = 0;
    let mut stalls = 0;

    let (certificate, stop) = loop {
        let g = objective.gradient(&f);
        let direction = lp_solve_with(&poly.lp(g.clone()), config.feasibility_tol)?;
        iterations += 1;
        match direction.status {
            LpStatus::Optimal => {}
            LpStatus::Unbounded => return Err(OptimError::Unbounded),
            LpStatus::Infeasible => {
                return Err(OptimError::Infeasible {
                    phase_one_objective: direction.phase_one_objective,
                })
            }
        }
        let vertex = clamp(direction.point);
        let certificate = (dot(&g, &vertex) - dot(&g, &f)).max(0.0);
        if certificate <= config.certificate_tol {
            break (certificate, StopReason::Certified);
        }
        if iterations >= config.max_iterations {
            break (certificate, StopReason::IterationLimit);
        }

        let toward_vertex: Vec<f64> = vertex.iter().zip(&f).map(|(v, x)| v - x).collect();
        let mut best = halve_until_better(&f, &toward_vertex, 1.0, objective, h);
        if let Some(newton) = newton_direction(&a, &f, &g, objective) {
            let t0 = step_limit(&f, &newton) * objective.boundary_fraction();
            if let Some(candidate) = halve_until_better(&f, &newton, t0.min(1.0), objective, h) {
                if best.as_ref().is_none_or(|b| candidate.1 > b.1) {
                    best = Some(candidate);
                }
            }
        }
        let Some((next, h_next)) = best else {
            break (certificate, StopReason::NoImprovement);
        };
        let gain = h_next - h;
        f = next;
        h = h_next;
        if gain < config.improvement_tol {
            stalls += 1;
            if stalls >= STALL_LIMIT {
                // Report the certificate of the final point.
                let g = objective.gradient(&f);
                let sol = lp_solve_with(&poly.lp(g.clone()), config.feasibility_tol)?;
                iterations += 1;
                let cert = (dot(&g, &clamp(sol.point)) - dot(&g, &f)).max(0.0);
                let stop = if cert <= config.certificate_tol {
                    StopReason::Certified
                } else {
                    StopReason::Stalled
                };
                break (cert, stop);
            }
        } else {
            stalls = 0;
        }
    };

    Ok(MaxentSolution {
        max_residual: poly.max_residual(&f),
        objective: h,
        certified: certificate <= config.certificate_tol,
        point: f,
        iterations,
        certificate,
        stop,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn clamp(mut v: Vec<f64>) -> Vec<f64> {
    for x in v.iter_mut() {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    v
}

/// Largest `t` keeping `f + t d >= 0`.
fn step_limit(f: &[f64], d: &[f64]) -> f64 {
    f.iter()
        .zip(d)
        .filter(|(_, &di)| di < 0.0)
        .map(|(&fi, &di)| fi / -di)
        .fold(f64::INFINITY, f64::min)
}

fn halve_until_better(
    f: &[f64],
    d: &[f64],
    t0: f64,
    objective: &dyn Objective,
    h0: f64,
) -> Option<(Vec<f64>, f64)> {
    if t0.is_nan() || t0 <= 0.0 {
        return None;
    }
    let mut t = t0;
    for _ in 0..=MAX_HALVINGS {
        let x = clamp(f.iter().zip(d).map(|(fi, di)| fi + t * di).collect());
        let hx = objective.value(&x);
        if hx > h0 {
            return Some((x, hx));
        }
        t /= 2.0;
    }
    None
}

/// Newton direction of the objective restricted to the positive cells and
/// projected onto the null space of the equality constraints.
fn newton_direction(
    a: &[Vec<f64>],
    f: &[f64],
    g: &[f64],
    objective: &dyn Objective,
) -> Option<Vec<f64>> {
    let support: Vec<usize> = (0..f.len()).filter(|&j| f[j] > 0.0).collect();
    if support.is_empty() || a.is_empty() {
        return None;
    }
    let rows = a.len();
    let w: Vec<f64> = support
        .iter()
        .map(|&j| 1.0 / objective.curvature(f[j]))
        .collect();
    let mut m = DMatrix::<f64>::zeros(rows, rows);
    let mut rhs = DVector::<f64>::zeros(rows);
    for (s, &j) in support.iter().enumerate() {
        for r in 0..rows {
            let arj = a[r][j];
            if arj == 0.0 {
                continue;
            }
            rhs[r] -= arj * w[s] * g[j];
            for q in 0..rows {
                let aqj = a[q][j];
                if aqj != 0.0 {
                    m[(r, q)] += arj * w[s] * aqj;
                }
            }
        }
    }
    let svd = m.svd(true, true);
    let scale = svd.singular_values.max();
    let lambda = svd.solve(&rhs, scale * 1e-12).ok()?;
    let mut d = vec![0.0; f.len()];
    for (s, &j) in support.iter().enumerate() {
        let price: f64 = (0..rows).map(|r| a[r][j] * lambda[r]).sum();
        d[j] = w[s] * (g[j] + price);
    }
    if dot(g, &d) <= 0.0 || d.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(d)
}
