//! JSON reports written by `fuse`.

use serde::Serialize;

use crate::algebra::PreBooleanAlgebra;
use crate::belief::Bba;
use crate::emr::{Rejection, SolverDiagnostics};
use crate::optim::StopReason;

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub rule: String,
    pub sources: Vec<String>,
    pub outcome: Outcome,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub masses: Option<Vec<MassEntry>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rejection: Option<RejectionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostics: Option<DiagnosticsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beliefs: Option<Vec<BeliefEntry>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Fused,
    Rejected,
}

#[derive(Debug, Clone, Serialize)]
pub struct MassEntry {
    pub label: String,
    pub key: String,
    pub mass: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BeliefEntry {
    pub label: String,
    pub key: String,
    pub belief: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectionReport {
    pub phase_one_objective: f64,
    pub violations: Vec<ViolationReport>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ViolationReport {
    pub family: Vec<String>,
    pub bound: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct DiagnosticsReport {
    pub entropy: f64,
    pub iterations: usize,
    pub max_marginal_residual: f64,
    pub optimality_certificate: f64,
    pub certified: bool,
    pub stop: String,
}

/// Focal masses in lattice order.
pub fn mass_entries(b: &Bba) -> Vec<MassEntry> {
    let alg = b.algebra();
    b.focal()
        .into_iter()
        .map(|(p, m)| MassEntry {
            label: alg.canonical_label(&p),
            key: p.hex_key(),
            mass: m,
        })
        .collect()
}

pub fn belief_entries(b: &Bba) -> Vec<BeliefEntry> {
    let alg = b.algebra();
    b.belief_function()
        .values
        .into_iter()
        .map(|(p, bel)| BeliefEntry {
            label: alg.canonical_label(&p),
            key: p.hex_key(),
            belief: bel,
        })
        .collect()
}

pub fn rejection_report(alg: &PreBooleanAlgebra, r: &Rejection) -> RejectionReport {
    RejectionReport {
        phase_one_objective: r.infeasibility,
        violations: r
            .violations
            .iter()
            .map(|v| ViolationReport {
                family: v.family.iter().map(|p| alg.canonical_label(p)).collect(),
                bound: v.bound,
            })
            .collect(),
    }
}

pub fn diagnostics_report(d: &SolverDiagnostics) -> DiagnosticsReport {
    DiagnosticsReport {
        entropy: d.entropy,
        iterations: d.iterations,
        max_marginal_residual: d.max_marginal_residual,
        optimality_certificate: d.optimality_certificate,
        certified: d.certified,
        stop: match d.stop {
            Some(StopReason::Certified) => "certified",
            Some(StopReason::Stalled) => "stalled",
            Some(StopReason::NoImprovement) => "no-improvement",
            Some(StopReason::IterationLimit) => "iteration-limit",
            None => "none",
        }
        .to_string(),
    }
}
