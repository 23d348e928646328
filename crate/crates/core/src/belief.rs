//! Basic belief assignments and belief functions.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::algebra::{PreBooleanAlgebra, Proposition};

/// Tolerance on the sum of masses.
pub const NORMALIZATION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum BeliefError {
    #[error("invalid basic belief assignment: {0}")]
    Invalid(Diagnostics),
    #[error("proposition is not a member of the lattice")]
    NotInLattice,
    #[error("belief assignments are defined over different algebras")]
    MixedAlgebras,
    #[error("family members {0} and {1} are not disjoint")]
    NotDisjoint(usize, usize),
    #[error("masses sum to {0}; cannot renormalize")]
    CannotRenormalize(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    NotNormalized { sum: f64 },
    NegativeMass { position: Option<usize>, mass: f64 },
    NonFiniteMass { position: Option<usize> },
    BottomMass { mass: f64 },
    UnknownProposition,
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NotNormalized { sum } => write!(f, "masses sum to {sum}, expected 1"),
            Issue::NegativeMass { position, mass } => match position {
                Some(p) => write!(f, "negative mass {mass} on lattice member #{p}"),
                None => write!(f, "negative mass {mass}"),
            },
            Issue::NonFiniteMass { position } => match position {
                Some(p) => write!(f, "non-finite mass on lattice member #{p}"),
                None => write!(f, "non-finite mass"),
            },
            Issue::BottomMass { mass } => {
                write!(f, "mass {mass} on bot in a coherent assignment")
            }
            Issue::UnknownProposition => f.write_str("focal proposition outside the lattice"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Warning {
    /// Bel of the join of all atoms is below 1 (mass outside the atoms'
    /// span, e.g. on `top` when `a|b|c = top` is not a constraint).
    AtomsNotExhaustive { belief: f64 },
}

impl fmt::Display for Warning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Warning::AtomsNotExhaustive { belief } => {
                write!(f, "belief of the join of all atoms is {belief} < 1")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub errors: Vec<Issue>,
    pub warnings: Vec<Warning>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.errors.is_empty()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.errors.iter().map(|e| e.to_string()).collect();
        if parts.is_empty() {
            f.write_str("valid")
        } else {
            f.write_str(&parts.join("; "))
        }
    }
}

/// A mass function over the lattice of a pre-Boolean algebra. Only focal
/// (nonzero) masses are stored.
#[derive(Debug, Clone)]
pub struct Bba {
    algebra: Arc<PreBooleanAlgebra>,
    masses: BTreeMap<Proposition, f64>,
    coherent: bool,
}

impl PartialEq for Bba {
    fn eq(&self, other: &Self) -> bool {
        self.algebra.id() == other.algebra.id()
            && self.coherent == other.coherent
            && self.masses == other.masses
    }
}

impl Bba {
    /// Builds an assignment without checking it. Entries for the same
    /// proposition are summed; exact zeros are dropped.
    pub fn from_masses(
        algebra: Arc<PreBooleanAlgebra>,
        masses: impl IntoIterator<Item = (Proposition, f64)>,
        coherent: bool,
    ) -> Bba {
        let mut map: BTreeMap<Proposition, f64> = BTreeMap::new();
        for (p, m) in masses {
            *map.entry(p).or_insert(0.0) += m;
        }
        map.retain(|_, m| *m != 0.0);
        Bba {
            algebra,
            masses: map,
            coherent,
        }
    }

    /// Builds and validates an assignment.
    pub fn new(
        algebra: Arc<PreBooleanAlgebra>,
        masses: impl IntoIterator<Item = (Proposition, f64)>,
        coherent: bool,
    ) -> Result<Bba, BeliefError> {
        let b = Bba::from_masses(algebra, masses, coherent);
        let diag = b.validate();
        if diag.is_valid() {
            Ok(b)
        } else {
            Err(BeliefError::Invalid(diag))
        }
    }

    /// Builds a coherent assignment from expression strings.
    pub fn parse<S: AsRef<str>>(
        algebra: &Arc<PreBooleanAlgebra>,
        masses: &[(S, f64)],
    ) -> Result<Bba, crate::Error> {
        let mut entries = Vec::with_capacity(masses.len());
        for (text, m) in masses {
            entries.push((algebra.parse(text.as_ref())?, *m));
        }
        Ok(Bba::new(algebra.clone(), entries, true)?)
    }

    /// The bba of total ignorance: all mass on `top`.
    pub fn total_ignorance(algebra: Arc<PreBooleanAlgebra>) -> Bba {
        let top = algebra.top();
        Bba::from_masses(algebra, [(top, 1.0)], true)
    }

    pub fn algebra(&self) -> &Arc<PreBooleanAlgebra> {
        &self.algebra
    }

    pub fn is_coherent(&self) -> bool {
        self.coherent
    }

    pub fn mass(&self, p: &Proposition) -> f64 {
        self.masses.get(p).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.masses.values().fold(0.0, |acc, m| acc + m)
    }

    /// Focal elements with their masses, in lattice order.
    pub fn focal(&self) -> Vec<(Proposition, f64)> {
        let mut out: Vec<(Proposition, f64)> =
            self.masses.iter().map(|(p, m)| (p.clone(), *m)).collect();
        out.sort_by_key(|(p, _)| self.algebra.position(p).unwrap_or(usize::MAX));
        out
    }

    pub fn same_algebra(&self, other: &Bba) -> bool {
        self.algebra.id() == other.algebra.id()
    }

    pub fn validate(&self) -> Diagnostics {
        let mut diag = Diagnostics::default();
        let mut sum = 0.0;
        for (p, &m) in &self.masses {
            let position = self.algebra.position(p);
            if position.is_none() {
                diag.errors.push(Issue::UnknownProposition);
            }
            if !m.is_finite() {
                diag.errors.push(Issue::NonFiniteMass { position });
                continue;
            }
            if m < 0.0 {
                diag.errors.push(Issue::NegativeMass { position, mass: m });
            }
            if self.coherent && p.is_bot() {
                diag.errors.push(Issue::BottomMass { mass: m });
            }
            sum += m;
        }
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            diag.errors.push(Issue::NotNormalized { sum });
        }
        if diag.errors.is_empty() {
            let atoms: Vec<Proposition> = self
                .algebra
                .atoms()
                .iter()
                .filter_map(|a| self.algebra.atom(a.name()).ok())
                .collect();
            if let Some(first) = atoms.first() {
                let span = atoms.iter().skip(1).fold(first.clone(), |acc, a| acc.or(a));
                let bel = self.belief_unchecked(&span);
                if bel < 1.0 - NORMALIZATION_TOL {
                    diag.warnings
                        .push(Warning::AtomsNotExhaustive { belief: bel });
                }
            }
        }
        diag
    }

    /// Rescales positive masses to sum to one.
    pub fn renormalized(&self) -> Result<Bba, BeliefError> {
        let sum = self.total();
        if !(sum.is_finite() && sum > 0.0) {
            return Err(BeliefError::CannotRenormalize(sum));
        }
        Ok(Bba {
            algebra: self.algebra.clone(),
            masses: self
                .masses
                .iter()
                .map(|(p, m)| (p.clone(), m / sum))
                .collect(),
            coherent: self.coherent,
        })
    }

    fn belief_unchecked(&self, phi: &Proposition) -> f64 {
        self.masses
            .iter()
            .filter(|(p, _)| p.sub_of(phi))
            .map(|(_, m)| m)
            .fold(0.0, |acc, m| acc + m)
    }

    fn check_member(&self, phi: &Proposition) -> Result<(), BeliefError> {
        if !self.algebra.owns(phi) {
            return Err(BeliefError::MixedAlgebras);
        }
        if !self.algebra.contains(phi) {
            return Err(BeliefError::NotInLattice);
        }
        Ok(())
    }

    /// `Bel(phi)`: total mass of the sub-propositions of `phi`, bot included.
    pub fn belief(&self, phi: &Proposition) -> Result<f64, BeliefError> {
        self.check_member(phi)?;
        Ok(self.belief_unchecked(phi))
    }

    /// Smets' truncated belief, which leaves out the mass on bot.
    pub fn smets_belief(&self, phi: &Proposition) -> Result<f64, BeliefError> {
        self.check_member(phi)?;
        Ok(self
            .masses
            .iter()
            .filter(|(p, _)| !p.is_bot() && p.sub_of(phi))
            .map(|(_, m)| m)
            .fold(0.0, |acc, m| acc + m))
    }

    /// Belief of every lattice member, in lattice order.
    pub fn belief_function(&self) -> BeliefFunction {
        BeliefFunction {
            values: self
                .algebra
                .lattice()
                .iter()
                .map(|p| (p.clone(), self.belief_unchecked(p)))
                .collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeliefFunction {
    pub values: Vec<(Proposition, f64)>,
}

impl BeliefFunction {
    pub fn get(&self, p: &Proposition) -> Option<f64> {
        self.values.iter().find(|(q, _)| q == p).map(|(_, v)| *v)
    }
}

/// Evaluates `sum_i max(Bel1(phi_i), Bel2(phi_i)) <= 1` over a family of
/// pairwise disjoint propositions. `false` proves that no entropy-maximizing
/// fusion of the two assignments exists.
pub fn enhancement_bound_check(
    b1: &Bba,
    b2: &Bba,
    family: &[Proposition],
) -> Result<bool, BeliefError> {
    Ok(enhancement_bound(&[b1, b2], family)? <= 1.0 + 1e-12)
}

/// `sum_i max_k Bel_k(phi_i)` for a pairwise disjoint family.
pub fn enhancement_bound(sources: &[&Bba], family: &[Proposition]) -> Result<f64, BeliefError> {
    if let Some(first) = sources.first() {
        if sources.iter().any(|b| !b.same_algebra(first)) {
            return Err(BeliefError::MixedAlgebras);
        }
    }
    for (i, x) in family.iter().enumerate() {
        for (j, y) in family.iter().enumerate().skip(i + 1) {
            if !x.same_algebra(y) {
                return Err(BeliefError::MixedAlgebras);
            }
            if !x.disjoint(y) {
                return Err(BeliefError::NotDisjoint(i, j));
            }
        }
    }
    let mut total = 0.0;
    for phi in family {
        let mut best: f64 = 0.0;
        for b in sources {
            best = best.max(b.belief(phi)?);
        }
        total += best;
    }
    Ok(total)
}
