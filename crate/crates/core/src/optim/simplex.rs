//! Dense two-phase tableau simplex with Bland's rule.

use super::OptimError;

/// `maximize c.x  s.t.  A x = b,  x >= l`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub equalities: Vec<Vec<f64>>,
    pub rhs: Vec<f64>,
    pub lower_bounds: Vec<f64>,
}

impl LinearProgram {
    /// Program with all variables bounded below by zero.
    pub fn new(objective: Vec<f64>, equalities: Vec<Vec<f64>>, rhs: Vec<f64>) -> Self {
        let n = objective.len();
        LinearProgram {
            objective,
            equalities,
            rhs,
            lower_bounds: vec![0.0; n],
        }
    }

    pub fn with_lower_bounds(mut self, lower_bounds: Vec<f64>) -> Self {
        self.lower_bounds = lower_bounds;
        self
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    fn check(&self) -> Result<(), OptimError> {
        let n = self.objective.len();
        if self.lower_bounds.len() != n {
            return Err(OptimError::Dimension(format!(
                "{} lower bounds for {n} variables",
                self.lower_bounds.len()
            )));
        }
        if self.rhs.len() != self.equalities.len() {
            return Err(OptimError::Dimension(format!(
                "{} right-hand sides for {} rows",
                self.rhs.len(),
                self.equalities.len()
            )));
        }
        if let Some(row) = self.equalities.iter().find(|r| r.len() != n) {
            return Err(OptimError::Dimension(format!(
                "row of length {} for {n} variables",
                row.len()
            )));
        }
        let finite = self.rhs.iter().all(|v| v.is_finite())
            && self.objective.iter().all(|v| v.is_finite())
            && self.lower_bounds.iter().all(|v| v.is_finite())
            && self.equalities.iter().flatten().all(|v| v.is_finite());
        if !finite {
            return Err(OptimError::Dimension("non-finite coefficient".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Optimal vertex when `status` is `Optimal`, otherwise the last basic
    /// point reached.
    pub point: Vec<f64>,
    pub value: f64,
    /// Sum of artificial variables at the end of phase I.
    pub phase_one_objective: f64,
    /// Row prices `y` with `c_j - y.A_j <= 0` at an optimum. Redundant rows
    /// get zero.
    pub duals: Vec<f64>,
    pub pivots: usize,
}

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-10;
const MAX_PIVOTS: usize = 200_000;

struct Tableau {
    /// Structural + artificial columns.
    cols: usize,
    /// Row-major, `cols + 1` entries per row; the last one is the rhs.
    rows: Vec<Vec<f64>>,
    basis: Vec<usize>,
    /// Reduced costs per column and, last, the current objective value.
    cost: Vec<f64>,
    pivots: usize,
}

impl Tableau {
    fn rhs(&self, r: usize) -> f64 {
        self.rows[r][self.cols]
    }

    fn pivot(&mut self, r: usize, e: usize) {
        let p = self.rows[r][e];
        for v in self.rows[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let factor = row[e];
            if factor != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= factor * pv;
                }
                row[e] = 0.0;
            }
        }
        let factor = self.cost[e];
        if factor != 0.0 {
            for (j, pv) in pivot_row.iter().enumerate() {
                if j == self.cols {
                    self.cost[j] += factor * pv;
                } else {
                    self.cost[j] -= factor * pv;
                }
            }
            self.cost[e] = 0.0;
        }
        self.basis[r] = e;
        self.pivots += 1;
    }

    fn set_costs(&mut self, c: &[f64]) {
        let mut cost = vec![0.0; self.cols + 1];
        cost[..self.cols].copy_from_slice(c);
        for (r, row) in self.rows.iter().enumerate() {
            let cb = c[self.basis[r]];
            if cb != 0.0 {
                for j in 0..self.cols {
                    cost[j] -= cb * row[j];
                }
                cost[self.cols] += cb * row[self.cols];
            }
        }
        for &b in &self.basis {
            cost[b] = 0.0;
        }
        self.cost = cost;
    }

    /// Runs Bland-rule pivots over columns `0..enterable`. Returns false when
    /// the objective is unbounded.
    fn optimize(&mut self, enterable: usize) -> Result<bool, OptimError> {
        loop {
            if self.pivots > MAX_PIVOTS {
                return Err(OptimError::PivotLimit);
            }
            let Some(e) = (0..enterable).find(|&j| self.cost[j] > COST_EPS) else {
                return Ok(true);
            };
            let mut leave: Option<(usize, f64)> = None;
            for r in 0..self.rows.len() {
                let a = self.rows[r][e];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(r).max(0.0) / a;
                    leave = match leave {
                        None => Some((r, ratio)),
                        Some((lr, lratio)) => {
                            let tie = (ratio - lratio).abs() <= 1e-12 * (1.0 + lratio.abs());
                            if ratio < lratio && !tie || tie && self.basis[r] < self.basis[lr] {
                                Some((r, ratio))
                            } else {
                                Some((lr, lratio))
                            }
                        }
                    };
                }
            }
            match leave {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, e),
            }
        }
    }
}

/// Solves with the default phase-I tolerance of `1e-9`.
pub fn lp_solve(lp: &LinearProgram) -> Result<LpSolution, OptimError> {
    lp_solve_with(lp, 1e-9)
}

/// Two-phase simplex. Phase I minimizes the sum of artificial variables and
/// declares the program feasible when that sum is at most `feasibility_tol`.
pub fn lp_solve_with(lp: &LinearProgram, feasibility_tol: f64) -> Result<LpSolution, OptimError> {
    lp.check()?;
    let n = lp.num_vars();
    let m = lp.equalities.len();
    let cols = n + m;

    // Shift x = l + y and make every rhs nonnegative.
    let mut sign = vec![1.0; m];
    let mut rows = Vec::with_capacity(m);
    for (i, (row, &b)) in lp.equalities.iter().zip(&lp.rhs).enumerate() {
        let shifted: f64 = b - row
            .iter()
            .zip(&lp.lower_bounds)
            .map(|(a, l)| a * l)
            .sum::<f64>();
        if shifted < 0.0 {
            sign[i] = -1.0;
        }
        let mut t = vec![0.0; cols + 1];
        for j in 0..n {
            t[j] = sign[i] * row[j];
        }
        t[n + i] = 1.0;
        t[cols] = sign[i] * shifted;
        rows.push(t);
    }
    let mut tab = Tableau {
        cols,
        rows,
        basis: (n..n + m).collect(),
        cost: Vec::new(),
        pivots: 0,
    };

    let mut phase_one = vec![0.0; cols];
    for c in phase_one.iter_mut().skip(n) {
        *c = -1.0;
    }
    tab.set_costs(&phase_one);
    tab.optimize(n)?;
    let phase_one_objective = (-tab.cost[cols]).max(0.0);

    let extract = |tab: &Tableau| -> Vec<f64> {
        let mut y = vec![0.0; n];
        for (r, &b) in tab.basis.iter().enumerate() {
            if b < n {
                y[b] = tab.rhs(r);
            }
        }
        y.iter()
            .zip(&lp.lower_bounds)
            .map(|(v, l)| l + if v.abs() < 1e-13 { 0.0 } else { *v })
            .collect()
    };

    if phase_one_objective > feasibility_tol {
        let point = extract(&tab);
        return Ok(LpSolution {
            status: LpStatus::Infeasible,
            value: dot(&lp.objective, &point),
            point,
            phase_one_objective,
            duals: vec![0.0; m],
            pivots: tab.pivots,
        });
    }

    // Drive remaining artificials out of the basis; rows where that is
    // impossible are linear combinations of the others.
    let mut r = 0;
    while r < tab.rows.len() {
        if tab.basis[r] >= n {
            let best = (0..n)
                .map(|j| (j, tab.rows[r][j].abs()))
                .filter(|(_, a)| *a > 1e-9)
                .max_by(|a, b| a.1.total_cmp(&b.1).then(b.0.cmp(&a.0)));
            match best {
                Some((j, _)) => tab.pivot(r, j),
                None => {
                    tab.rows.remove(r);
                    tab.basis.remove(r);
                    continue;
                }
            }
        }
        r += 1;
    }

    let mut c = vec![0.0; cols];
    c[..n].copy_from_slice(&lp.objective);
    tab.set_costs(&c);
    let bounded = tab.optimize(n)?;
    let point = extract(&tab);
    let duals = (0..m).map(|i| -sign[i] * tab.cost[n + i]).collect();
    Ok(LpSolution {
        status: if bounded {
            LpStatus::Optimal
        } else {
            LpStatus::Unbounded
        },
        value: dot(&lp.objective, &point),
        point,
        phase_one_objective,
        duals,
        pivots: tab.pivots,
    })
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
