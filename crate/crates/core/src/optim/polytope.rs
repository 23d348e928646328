use super::simplex::LinearProgram;
use super::OptimError;

/// Default cap on the number of candidate cells (product of axis lengths).
pub const DEFAULT_CELL_CAP: usize = 10_000_000;

/// Nonnegative arrays over a product grid with prescribed axis sums and a
/// set of cells pinned to zero.
///
/// Only allowed cells become variables. The sum constraint of the last index
/// of every axis after the first is implied by the others (all axes share the
/// same grand total) and is left out of the equality system.
#[derive(Debug, Clone, PartialEq)]
pub struct MarginalPolytope {
    marginals: Vec<Vec<f64>>,
    cells: Vec<Vec<usize>>,
    forbidden: Vec<Vec<usize>>,
    rows: Vec<(usize, usize)>,
}

impl MarginalPolytope {
    /// Enumerates the grid in lexicographic order and drops the cells for
    /// which `is_forbidden` holds.
    pub fn new(
        marginals: Vec<Vec<f64>>,
        mut is_forbidden: impl FnMut(&[usize]) -> bool,
        cell_cap: usize,
    ) -> Result<Self, OptimError> {
        if marginals.is_empty() || marginals.iter().any(|m| m.is_empty()) {
            return Err(OptimError::Dimension(
                "every axis needs at least one entry".into(),
            ));
        }
        let shape: Vec<usize> = marginals.iter().map(|m| m.len()).collect();
        let total = shape
            .iter()
            .try_fold(1usize, |acc, &s| acc.checked_mul(s))
            .filter(|&t| t <= cell_cap)
            .ok_or(OptimError::TooManyCells { cap: cell_cap })?;
        let mut cells = Vec::new();
        let mut forbidden = Vec::new();
        let mut idx = vec![0usize; shape.len()];
        for _ in 0..total {
            if is_forbidden(&idx) {
                forbidden.push(idx.clone());
            } else {
                cells.push(idx.clone());
            }
            for k in (0..shape.len()).rev() {
                idx[k] += 1;
                if idx[k] < shape[k] {
                    break;
                }
                idx[k] = 0;
            }
        }
        Ok(Self::assemble(marginals, cells, forbidden))
    }

    /// Polytope over an explicit list of allowed cells.
    pub fn from_cells(
        marginals: Vec<Vec<f64>>,
        cells: Vec<Vec<usize>>,
    ) -> Result<Self, OptimError> {
        for c in &cells {
            if c.len() != marginals.len() || c.iter().zip(&marginals).any(|(i, m)| *i >= m.len()) {
                return Err(OptimError::Dimension(format!(
                    "cell {c:?} outside the grid"
                )));
            }
        }
        Ok(Self::assemble(marginals, cells, Vec::new()))
    }

    fn assemble(
        marginals: Vec<Vec<f64>>,
        cells: Vec<Vec<usize>>,
        forbidden: Vec<Vec<usize>>,
    ) -> Self {
        let mut rows = Vec::new();
        for (k, m) in marginals.iter().enumerate() {
            let keep = if k == 0 { m.len() } else { m.len() - 1 };
            rows.extend((0..keep).map(|i| (k, i)));
        }
        MarginalPolytope {
            marginals,
            cells,
            forbidden,
            rows,
        }
    }

    pub fn marginals(&self) -> &[Vec<f64>] {
        &self.marginals
    }

    /// Allowed cells, one index per axis.
    pub fn cells(&self) -> &[Vec<usize>] {
        &self.cells
    }

    pub fn forbidden(&self) -> &[Vec<usize>] {
        &self.forbidden
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn equality_matrix(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.cells.len()]; self.rows.len()];
        for (j, cell) in self.cells.iter().enumerate() {
            for (r, &(k, i)) in self.rows.iter().enumerate() {
                if cell[k] == i {
                    a[r][j] = 1.0;
                }
            }
        }
        a
    }

    pub fn rhs(&self) -> Vec<f64> {
        self.rows
            .iter()
            .map(|&(k, i)| self.marginals[k][i])
            .collect()
    }

    /// `maximize objective.f` over the polytope.
    pub fn lp(&self, objective: Vec<f64>) -> LinearProgram {
        LinearProgram::new(objective, self.equality_matrix(), self.rhs())
    }

    pub fn axis_sums(&self, f: &[f64]) -> Vec<Vec<f64>> {
        let mut sums: Vec<Vec<f64>> = self.marginals.iter().map(|m| vec![0.0; m.len()]).collect();
        for (cell, v) in self.cells.iter().zip(f) {
            for (k, &i) in cell.iter().enumerate() {
                sums[k][i] += v;
            }
        }
        sums
    }

    /// Largest deviation of any axis sum from its marginal, including the
    /// rows left out of the equality system.
    pub fn max_residual(&self, f: &[f64]) -> f64 {
        self.axis_sums(f)
            .iter()
            .zip(&self.marginals)
            .flat_map(|(s, m)| s.iter().zip(m).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max)
    }
}
