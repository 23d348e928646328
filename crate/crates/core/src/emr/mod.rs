//! Entropy Maximizing Rule.
//!
//! The fused mass of `phi` is the total of a joint assignment `f` over the
//! tuples of focal propositions whose meet is `phi`. Among all `f >= 0` that
//! reproduce every source as a marginal and vanish on tuples meeting to bot,
//! the rule picks the one of maximum entropy. When no such `f` exists the
//! sources are rejected as contradictory.

mod oracle;

pub use oracle::{ipf_oracle, zadeh_family_oracle, zadeh_family_sources, IPF_MAX_SWEEPS, IPF_TOL};

use std::collections::BTreeMap;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{PreBooleanAlgebra, Proposition};
use crate::belief::{enhancement_bound, Bba, Diagnostics};
use crate::optim::{
    entropy, feasible_point, maximize, Entropy, MarginalPolytope, NegSquares, Objective,
    OptimError, SolverConfig, StopReason, DEFAULT_CELL_CAP,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EmrError {
    #[error("at least two sources are required")]
    TooFewSources,
    #[error("sources are defined over different algebras")]
    MixedAlgebras,
    #[error("source #{0} is invalid: {1}")]
    InvalidSource(usize, Diagnostics),
    #[error("source #{0} is TBM-like (mass allowed on bot); the entropy rule needs coherent sources, use the tbm rule instead")]
    Incoherent(usize),
    #[error(transparent)]
    Optim(#[from] OptimError),
    #[error("iterative fitting did not converge after {sweeps} sweeps (residual {residual:.3e})")]
    IpfNotConverged { sweeps: usize, residual: f64 },
    #[error("parameter out of range: {0}")]
    Parameter(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EmrOptions {
    pub solver: SolverConfig,
    /// Upper bound on the size of the tuple grid before forbidden cells are
    /// removed.
    pub cell_cap: usize,
}

impl Default for EmrOptions {
    fn default() -> Self {
        EmrOptions {
            solver: SolverConfig::default(),
            cell_cap: DEFAULT_CELL_CAP,
        }
    }
}

/// Joint assignment over tuples of focal propositions (one per source).
#[derive(Debug, Clone, PartialEq)]
pub struct JointAssignment {
    pub sources: Vec<Vec<Proposition>>,
    /// Allowed tuples (indices into `sources`) with their values, in
    /// lexicographic order.
    pub cells: Vec<(Vec<usize>, f64)>,
    /// Tuples whose meet is bot.
    pub forbidden: Vec<Vec<usize>>,
}

impl JointAssignment {
    pub fn value(&self, tuple: &[usize]) -> f64 {
        self.cells
            .iter()
            .find(|(c, _)| c.as_slice() == tuple)
            .map(|(_, v)| *v)
            .unwrap_or(0.0)
    }

    /// Value at the tuple of propositions, zero when any is not focal.
    pub fn value_at(&self, props: &[Proposition]) -> f64 {
        let idx: Option<Vec<usize>> = props
            .iter()
            .zip(&self.sources)
            .map(|(p, src)| src.iter().position(|q| q == p))
            .collect();
        match idx {
            Some(idx) if idx.len() == self.sources.len() => self.value(&idx),
            _ => 0.0,
        }
    }

    pub fn entropy(&self) -> f64 {
        let values: Vec<f64> = self.cells.iter().map(|(_, v)| *v).collect();
        entropy(&values)
    }

    pub fn meet_of(&self, tuple: &[usize]) -> Proposition {
        let mut acc = self.sources[0][tuple[0]].clone();
        for (k, &i) in tuple.iter().enumerate().skip(1) {
            acc = acc.and(&self.sources[k][i]);
        }
        acc
    }

    /// Largest deviation of an axis sum from the matching source mass.
    pub fn max_marginal_residual(&self, sources: &[&Bba]) -> f64 {
        let mut worst: f64 = 0.0;
        for (k, src) in self.sources.iter().enumerate() {
            for (i, p) in src.iter().enumerate() {
                let sum: f64 = self
                    .cells
                    .iter()
                    .filter(|(c, _)| c[k] == i)
                    .map(|(_, v)| v)
                    .sum();
                worst = worst.max((sum - sources[k].mass(p)).abs());
            }
        }
        worst
    }

    /// `m(phi) = sum of f over the tuples meeting to phi`.
    pub fn fused(&self, algebra: &Arc<PreBooleanAlgebra>) -> Bba {
        let mut masses: BTreeMap<Proposition, f64> = BTreeMap::new();
        for (c, v) in &self.cells {
            if *v > 0.0 {
                *masses.entry(self.meet_of(c)).or_insert(0.0) += v;
            }
        }
        Bba::from_masses(algebra.clone(), masses, true)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverDiagnostics {
    pub entropy: f64,
    pub iterations: usize,
    pub max_marginal_residual: f64,
    pub optimality_certificate: f64,
    pub certified: bool,
    pub stop: Option<StopReason>,
}

/// Pairwise disjoint focal propositions whose best beliefs add up past one.
#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementViolation {
    pub family: Vec<Proposition>,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Rejection {
    /// Phase-I objective of the feasibility LP (sum of artificial
    /// variables). The closed-form oracle stores the gap of its existence
    /// condition instead.
    pub infeasibility: f64,
    /// Violated belief-enhancement bounds, worst first.
    pub violations: Vec<EnhancementViolation>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum FusionResult {
    Fused(Bba),
    Rejected(Rejection),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutcome {
    pub result: FusionResult,
    pub diagnostics: SolverDiagnostics,
    pub joint: Option<JointAssignment>,
}

impl FusionOutcome {
    pub fn fused(&self) -> Option<&Bba> {
        match &self.result {
            FusionResult::Fused(b) => Some(b),
            FusionResult::Rejected(_) => None,
        }
    }

    pub fn rejection(&self) -> Option<&Rejection> {
        match &self.result {
            FusionResult::Rejected(r) => Some(r),
            FusionResult::Fused(_) => None,
        }
    }

    pub fn is_rejected(&self) -> bool {
        self.rejection().is_some()
    }

    fn rejected(rejection: Rejection) -> Self {
        FusionOutcome {
            result: FusionResult::Rejected(rejection),
            diagnostics: SolverDiagnostics {
                entropy: f64::NAN,
                iterations: 0,
                max_marginal_residual: f64::NAN,
                optimality_certificate: f64::NAN,
                certified: false,
                stop: None,
            },
            joint: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub phase_one_objective: f64,
    pub violations: Vec<EnhancementViolation>,
}

/// Problem shared by the solvers and the oracles: focal lists per source and
/// the marginal polytope over their tuples.
pub(crate) struct Problem {
    pub algebra: Arc<PreBooleanAlgebra>,
    pub focal: Vec<Vec<Proposition>>,
    pub polytope: MarginalPolytope,
}

pub(crate) fn check_sources(bs: &[&Bba]) -> Result<(), EmrError> {
    if bs.len() < 2 {
        return Err(EmrError::TooFewSources);
    }
    for (i, b) in bs.iter().enumerate() {
        if !b.same_algebra(bs[0]) {
            return Err(EmrError::MixedAlgebras);
        }
        let diag = b.validate();
        if !diag.is_valid() {
            return Err(EmrError::InvalidSource(i, diag));
        }
        if !b.is_coherent() {
            return Err(EmrError::Incoherent(i));
        }
    }
    Ok(())
}

impl Problem {
    pub(crate) fn new(bs: &[&Bba], cell_cap: usize) -> Result<Problem, EmrError> {
        check_sources(bs)?;
        let focal_masses: Vec<Vec<(Proposition, f64)>> = bs
            .iter()
            .map(|b| b.focal().into_iter().filter(|(_, m)| *m > 0.0).collect())
            .collect();
        let focal: Vec<Vec<Proposition>> = focal_masses
            .iter()
            .map(|src| src.iter().map(|(p, _)| p.clone()).collect())
            .collect();
        let marginals: Vec<Vec<f64>> = focal_masses
            .iter()
            .map(|src| src.iter().map(|(_, m)| *m).collect())
            .collect();
        let polytope = MarginalPolytope::new(
            marginals,
            |cell| {
                let mut acc = focal[0][cell[0]].clone();
                for (k, &i) in cell.iter().enumerate().skip(1) {
                    acc = acc.and(&focal[k][i]);
                    if acc.is_bot() {
                        return true;
                    }
                }
                acc.is_bot()
            },
            cell_cap,
        )?;
        Ok(Problem {
            algebra: bs[0].algebra().clone(),
            focal,
            polytope,
        })
    }

    pub(crate) fn joint(&self, values: &[f64]) -> JointAssignment {
        JointAssignment {
            sources: self.focal.clone(),
            cells: self
                .polytope
                .cells()
                .iter()
                .cloned()
                .zip(
                    values
                        .iter()
                        .map(|&v| if v.abs() < 1e-15 { 0.0 } else { v }),
                )
                .collect(),
            forbidden: self.polytope.forbidden().to_vec(),
        }
    }
}

/// Maximal families of pairwise disjoint focal propositions whose
/// enhancement bound exceeds one, worst first.
pub fn enhancement_violations(bs: &[&Bba]) -> Vec<EnhancementViolation> {
    const MAX_FAMILIES: usize = 10_000;
    let Some(first) = bs.first() else {
        return Vec::new();
    };
    let algebra = first.algebra();
    let mut props: Vec<Proposition> = Vec::new();
    for b in bs {
        for (p, _) in b.focal() {
            if !p.is_bot() && !props.contains(&p) {
                props.push(p);
            }
        }
    }
    props.sort_by_key(|p| algebra.position(p).unwrap_or(usize::MAX));
    let n = props.len();
    let adj: Vec<Vec<bool>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| i != j && props[i].disjoint(&props[j]))
                .collect()
        })
        .collect();

    let mut families: Vec<Vec<usize>> = Vec::new();
    bron_kerbosch(
        &adj,
        Vec::new(),
        (0..n).collect(),
        Vec::new(),
        &mut families,
        MAX_FAMILIES,
    );

    let mut out: Vec<EnhancementViolation> = families
        .into_iter()
        .filter_map(|mut fam| {
            fam.sort_unstable();
            let family: Vec<Proposition> = fam.iter().map(|&i| props[i].clone()).collect();
            let bound = enhancement_bound(bs, &family).ok()?;
            (bound > 1.0 + 1e-12).then_some(EnhancementViolation { family, bound })
        })
        .collect();
    out.sort_by(|a, b| b.bound.total_cmp(&a.bound));
    out
}

fn bron_kerbosch(
    adj: &[Vec<bool>],
    r: Vec<usize>,
    mut p: Vec<usize>,
    mut x: Vec<usize>,
    out: &mut Vec<Vec<usize>>,
    limit: usize,
) {
    if out.len() >= limit {
        return;
    }
    if p.is_empty() && x.is_empty() {
        out.push(r);
        return;
    }
    let pivot = p
        .iter()
        .chain(&x)
        .copied()
        .max_by_key(|&u| p.iter().filter(|&&v| adj[u][v]).count())
        .expect("p or x is nonempty");
    let candidates: Vec<usize> = p.iter().copied().filter(|&v| !adj[pivot][v]).collect();
    for v in candidates {
        let mut r2 = r.clone();
        r2.push(v);
        let p2 = p.iter().copied().filter(|&u| adj[v][u]).collect();
        let x2 = x.iter().copied().filter(|&u| adj[v][u]).collect();
        bron_kerbosch(adj, r2, p2, x2, out, limit);
        p.retain(|&u| u != v);
        x.push(v);
    }
}

/// Decides whether a joint assignment meeting all constraints exists.
pub fn emr_feasible(bs: &[&Bba]) -> Result<FeasibilityReport, EmrError> {
    emr_feasible_with(bs, &EmrOptions::default())
}

pub fn emr_feasible_with(bs: &[&Bba], opts: &EmrOptions) -> Result<FeasibilityReport, EmrError> {
    let problem = Problem::new(bs, opts.cell_cap)?;
    let violations = enhancement_violations(bs);
    match feasible_point(&problem.polytope, &opts.solver) {
        Ok(_) => Ok(FeasibilityReport {
            feasible: true,
            phase_one_objective: 0.0,
            violations,
        }),
        Err(OptimError::Infeasible {
            phase_one_objective,
        }) => Ok(FeasibilityReport {
            feasible: false,
            phase_one_objective,
            violations,
        }),
        Err(e) => Err(e.into()),
    }
}

fn fuse(
    bs: &[&Bba],
    objective: &dyn Objective,
    opts: &EmrOptions,
) -> Result<FusionOutcome, EmrError> {
    let problem = Problem::new(bs, opts.cell_cap)?;
    match maximize(&problem.polytope, objective, &opts.solver) {
        Ok(sol) => {
            let joint = problem.joint(&sol.point);
            let fused = joint.fused(&problem.algebra);
            Ok(FusionOutcome {
                result: FusionResult::Fused(fused),
                diagnostics: SolverDiagnostics {
                    entropy: joint.entropy(),
                    iterations: sol.iterations,
                    max_marginal_residual: joint.max_marginal_residual(bs),
                    optimality_certificate: sol.certificate,
                    certified: sol.certified,
                    stop: Some(sol.stop),
                },
                joint: Some(joint),
            })
        }
        Err(OptimError::Infeasible {
            phase_one_objective,
        }) => Ok(FusionOutcome::rejected(Rejection {
            infeasibility: phase_one_objective,
            violations: enhancement_violations(bs),
        })),
        Err(e) => Err(e.into()),
    }
}

pub fn emr_fuse(b1: &Bba, b2: &Bba) -> Result<FusionOutcome, EmrError> {
    emr_fuse_n(&[b1, b2])
}

pub fn emr_fuse_n(bs: &[&Bba]) -> Result<FusionOutcome, EmrError> {
    emr_fuse_n_with(bs, &EmrOptions::default())
}

pub fn emr_fuse_n_with(bs: &[&Bba], opts: &EmrOptions) -> Result<FusionOutcome, EmrError> {
    let objective = Entropy {
        ln_floor: opts.solver.ln_floor,
    };
    fuse(bs, &objective, opts)
}

/// Same constraints as [`emr_fuse`] with the entropy replaced by `-sum f^2`.
pub fn emr_fuse_approx(b1: &Bba, b2: &Bba) -> Result<FusionOutcome, EmrError> {
    emr_fuse_approx_n_with(&[b1, b2], &EmrOptions::default())
}

pub fn emr_fuse_approx_n_with(bs: &[&Bba], opts: &EmrOptions) -> Result<FusionOutcome, EmrError> {
    fuse(bs, &NegSquares, opts)
}
