//! Evidence fusion over pre-Boolean algebras.
//!
//! Propositions live in a finite lattice generated by named atoms under
//! meet and join, optionally cut down by equational constraints. Belief
//! assignments over that lattice can be combined with the classical
//! conjunctive, TBM, free and Dempster rules, or with the entropy maximizing
//! rule, which fuses by choosing the most uncommitted joint assignment
//! compatible with every source and rejects truly contradictory sources.

pub mod algebra;
pub mod belief;
pub mod cli;
pub mod emr;
pub mod expr;
pub mod optim;
pub mod rules;

pub use algebra::{
    AlgebraError, AlgebraWarning, Atom, ConstraintSet, Equation, PreBooleanAlgebra, Proposition,
};
pub use belief::{enhancement_bound, enhancement_bound_check, Bba, BeliefError, BeliefFunction};
pub use emr::{
    emr_feasible, emr_fuse, emr_fuse_approx, emr_fuse_n, ipf_oracle, zadeh_family_oracle, EmrError,
    EmrOptions, FusionOutcome, FusionResult, JointAssignment, Rejection,
};
pub use expr::{Expression, ParseError};
pub use optim::{OptimError, SolverConfig};
pub use rules::{
    conjunctive, dempster_fuse, free_dsmt_fuse, redistribute, tbm_fuse, ConjunctiveImage,
    Redistribution, RuleError,
};

use thiserror::Error as ThisError;

#[derive(Debug, Clone, PartialEq, ThisError)]
pub enum Error {
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(transparent)]
    Rule(#[from] RuleError),
    #[error(transparent)]
    Emr(#[from] EmrError),
    #[error(transparent)]
    Optim(#[from] OptimError),
}
