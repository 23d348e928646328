//! Classical combination rules: the conjunctive function, TBM and free DSmT
//! fusion, and conflict redistribution (Dempster-Shafer being the
//! proportional case).

use std::collections::BTreeMap;

use thiserror::Error;

use crate::algebra::Proposition;
use crate::belief::{Bba, BeliefError, NORMALIZATION_TOL};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RuleError {
    #[error("belief assignments are defined over different algebras")]
    MixedAlgebras,
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error(
        "the algebra is not insulated (two non-bot members meet to bot); use emr, tbm or dempster"
    )]
    NotInsulated,
    #[error("total conflict: the conjunctive function puts all mass on bot")]
    TotalConflict,
    #[error("invalid redistribution: {0}")]
    InvalidRedistribution(String),
    #[error("redistributed masses sum to {0}")]
    NotNormalized(f64),
}

/// The conjunctive function of two assignments, before any conflict
/// handling.
#[derive(Debug, Clone)]
pub struct ConjunctiveImage {
    mu: Bba,
}

impl ConjunctiveImage {
    pub fn conflict(&self) -> f64 {
        self.mu.mass(&self.mu.algebra().bot())
    }

    pub fn mu(&self, p: &Proposition) -> f64 {
        self.mu.mass(p)
    }

    /// The image as a TBM-like (non-coherent) assignment.
    pub fn as_bba(&self) -> &Bba {
        &self.mu
    }

    pub fn into_bba(self) -> Bba {
        self.mu
    }
}

/// A normalized nonnegative reallocation of the conflict over non-bot
/// propositions.
#[derive(Debug, Clone)]
pub struct Redistribution {
    rho: BTreeMap<Proposition, f64>,
}

impl Redistribution {
    pub fn new(rho: impl IntoIterator<Item = (Proposition, f64)>) -> Result<Self, RuleError> {
        let mut map = BTreeMap::new();
        for (p, w) in rho {
            if !w.is_finite() || w < 0.0 {
                return Err(RuleError::InvalidRedistribution(format!(
                    "weight {w} is negative or not finite"
                )));
            }
            if p.is_bot() && w > 0.0 {
                return Err(RuleError::InvalidRedistribution("weight on bot".into()));
            }
            *map.entry(p).or_insert(0.0) += w;
        }
        let sum: f64 = map.values().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(RuleError::InvalidRedistribution(format!(
                "weights sum to {sum}"
            )));
        }
        Ok(Redistribution { rho: map })
    }

    /// Weights proportional to the non-conflicting part of `mu`.
    pub fn proportional(mu: &ConjunctiveImage) -> Result<Self, RuleError> {
        let k = mu.conflict();
        if k >= 1.0 - 1e-15 {
            return Err(RuleError::TotalConflict);
        }
        Redistribution::new(
            mu.mu
                .focal()
                .into_iter()
                .filter(|(p, _)| !p.is_bot())
                .map(|(p, m)| (p, m / (1.0 - k))),
        )
    }

    pub fn weight(&self, p: &Proposition) -> f64 {
        self.rho.get(p).copied().unwrap_or(0.0)
    }
}

/// `mu(phi) = sum over focal pairs with psi & eta = phi of m1(psi) m2(eta)`.
pub fn conjunctive(b1: &Bba, b2: &Bba) -> Result<ConjunctiveImage, RuleError> {
    if !b1.same_algebra(b2) {
        return Err(RuleError::MixedAlgebras);
    }
    let mut mu: BTreeMap<Proposition, f64> = BTreeMap::new();
    for (p, mp) in b1.focal() {
        for (q, mq) in b2.focal() {
            *mu.entry(p.and(&q)).or_insert(0.0) += mp * mq;
        }
    }
    Ok(ConjunctiveImage {
        mu: Bba::from_masses(b1.algebra().clone(), mu, false),
    })
}

/// TBM combination: the conjunctive function kept as is, mass on bot
/// included.
pub fn tbm_fuse(b1: &Bba, b2: &Bba) -> Result<Bba, RuleError> {
    Ok(conjunctive(b1, b2)?.into_bba())
}

/// Conjunctive fusion on an insulated algebra, where it never produces
/// conflict.
pub fn free_dsmt_fuse(b1: &Bba, b2: &Bba) -> Result<Bba, RuleError> {
    if !b1.same_algebra(b2) {
        return Err(RuleError::MixedAlgebras);
    }
    if !b1.algebra().is_insulated() {
        return Err(RuleError::NotInsulated);
    }
    let mu = conjunctive(b1, b2)?;
    let coherent = b1.is_coherent() && b2.is_coherent();
    Ok(Bba::from_masses(
        b1.algebra().clone(),
        mu.mu.focal(),
        coherent,
    ))
}

/// `m(phi) = mu(phi) + rho(phi) mu(bot)` for `phi != bot`.
pub fn redistribute(mu: &ConjunctiveImage, rho: &Redistribution) -> Result<Bba, RuleError> {
    let k = mu.conflict();
    let mut out: BTreeMap<Proposition, f64> = BTreeMap::new();
    for (p, m) in mu.mu.focal() {
        if !p.is_bot() {
            *out.entry(p).or_insert(0.0) += m;
        }
    }
    for (p, w) in &rho.rho {
        if !mu.mu.algebra().owns(p) {
            return Err(RuleError::MixedAlgebras);
        }
        *out.entry(p.clone()).or_insert(0.0) += w * k;
    }
    let sum: f64 = out.values().sum();
    if (sum - 1.0).abs() > NORMALIZATION_TOL {
        return Err(RuleError::NotNormalized(sum));
    }
    Ok(Bba::new(mu.mu.algebra().clone(), out, true)?)
}

/// Dempster's rule: `m(phi) = mu(phi) / (1 - mu(bot))` for `phi != bot`.
pub fn dempster_fuse(b1: &Bba, b2: &Bba) -> Result<Bba, RuleError> {
    let mu = conjunctive(b1, b2)?;
    let k = mu.conflict();
    if k >= 1.0 - 1e-15 {
        return Err(RuleError::TotalConflict);
    }
    let masses: Vec<(Proposition, f64)> = mu
        .mu
        .focal()
        .into_iter()
        .filter(|(p, _)| !p.is_bot())
        .map(|(p, m)| (p, m / (1.0 - k)))
        .collect();
    Ok(Bba::new(b1.algebra().clone(), masses, true)?)
}
