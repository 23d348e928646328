//! Constrained pre-Boolean algebras (hyperpower sets).
//!
//! Propositions are stored as bitsets over the minterms of the ambient Boolean
//! algebra generated by the atoms. Minterm `m` has atom `k` true iff bit `k`
//! of `m` is set. Constraints delete minterms; the pre-Boolean lattice is the
//! closure of the atoms, `bot` and `top` under meet and join.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};

use smallvec::{smallvec, SmallVec};
use thiserror::Error;

use crate::expr::{is_valid_atom_name, Expression, ParseError};

pub const MAX_ATOMS: usize = 12;
pub const MAX_LATTICE_SIZE: usize = 100_000;

pub(crate) type Words = SmallVec<[u64; 2]>;

static NEXT_ALGEBRA_ID: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum AlgebraError {
    #[error("invalid atom name '{0}'")]
    InvalidAtomName(String),
    #[error("duplicate atom '{0}'")]
    DuplicateAtom(String),
    #[error("too many atoms: {0} (at most {MAX_ATOMS})")]
    TooManyAtoms(usize),
    #[error("unknown atom '{0}'")]
    UnknownAtom(String),
    #[error(transparent)]
    Parse(#[from] ParseError),
    #[error("lattice closure exceeded {MAX_LATTICE_SIZE} elements")]
    LatticeTooLarge,
    #[error("propositions belong to different algebras")]
    MixedAlgebras,
    #[error("proposition is not a member of the lattice")]
    NotInLattice,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Atom(String);

impl Atom {
    pub fn new(name: impl Into<String>) -> Result<Atom, AlgebraError> {
        let name = name.into();
        if !is_valid_atom_name(&name) {
            return Err(AlgebraError::InvalidAtomName(name));
        }
        Ok(Atom(name))
    }

    pub fn name(&self) -> &str {
        &self.0
    }
}

/// One equation `lhs = rhs` of a constraint set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Equation {
    pub lhs: Expression,
    pub rhs: Expression,
}

impl Equation {
    /// Parses `"expr = expr"`.
    pub fn parse(text: &str) -> Result<Equation, ParseError> {
        let mut parts = text.splitn(2, '=');
        let lhs_text = parts.next().unwrap_or("");
        let Some(rhs_text) = parts.next() else {
            return Err(ParseError::Syntax {
                column: text.chars().count() + 1,
                message: "expected '=' between two expressions".into(),
            });
        };
        let offset = lhs_text.chars().count() + 1;
        let lhs = Expression::parse(lhs_text)?;
        let rhs = Expression::parse(rhs_text).map_err(|e| match e {
            ParseError::Syntax { column, message } => ParseError::Syntax {
                column: column + offset,
                message,
            },
            other => other,
        })?;
        Ok(Equation { lhs, rhs })
    }
}

impl fmt::Display for Equation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} = {}", self.lhs, self.rhs)
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    pub equations: Vec<Equation>,
}

impl ConstraintSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn parse<S: AsRef<str>>(lines: &[S]) -> Result<ConstraintSet, ParseError> {
        let equations = lines
            .iter()
            .map(|l| Equation::parse(l.as_ref()))
            .collect::<Result<_, _>>()?;
        Ok(ConstraintSet { equations })
    }

    pub fn push(&mut self, lhs: Expression, rhs: Expression) {
        self.equations.push(Equation { lhs, rhs });
    }
}

/// Element of a constrained Boolean algebra: the set of surviving minterms it
/// covers.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Proposition {
    algebra: u64,
    bits: Words,
}

impl fmt::Debug for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Proposition(#{}, 0x{})", self.algebra, self.hex_key())
    }
}

impl Proposition {
    pub fn is_bot(&self) -> bool {
        self.bits.iter().all(|w| *w == 0)
    }

    /// Number of minterms covered.
    pub fn count(&self) -> u32 {
        self.bits.iter().map(|w| w.count_ones()).sum()
    }

    pub fn contains_minterm(&self, minterm: usize) -> bool {
        self.bits
            .get(minterm / 64)
            .is_some_and(|w| (w >> (minterm % 64)) & 1 == 1)
    }

    pub fn minterms(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.iter().enumerate().flat_map(|(i, &w)| {
            (0..64)
                .filter(move |b| (w >> b) & 1 == 1)
                .map(move |b| i * 64 + b)
        })
    }

    pub fn same_algebra(&self, other: &Proposition) -> bool {
        self.algebra == other.algebra
    }

    pub fn meet(&self, other: &Proposition) -> Result<Proposition, AlgebraError> {
        if !self.same_algebra(other) {
            return Err(AlgebraError::MixedAlgebras);
        }
        Ok(self.and(other))
    }

    pub fn join(&self, other: &Proposition) -> Result<Proposition, AlgebraError> {
        if !self.same_algebra(other) {
            return Err(AlgebraError::MixedAlgebras);
        }
        Ok(self.or(other))
    }

    /// `self ⊂ other`, i.e. `self ∧ other = self`.
    pub fn is_sub(&self, other: &Proposition) -> Result<bool, AlgebraError> {
        if !self.same_algebra(other) {
            return Err(AlgebraError::MixedAlgebras);
        }
        Ok(self.sub_of(other))
    }

    pub(crate) fn and(&self, other: &Proposition) -> Proposition {
        debug_assert!(self.same_algebra(other));
        Proposition {
            algebra: self.algebra,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a & b)
                .collect(),
        }
    }

    pub(crate) fn or(&self, other: &Proposition) -> Proposition {
        debug_assert!(self.same_algebra(other));
        Proposition {
            algebra: self.algebra,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(a, b)| a | b)
                .collect(),
        }
    }

    pub(crate) fn sub_of(&self, other: &Proposition) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & !b == 0)
    }

    pub(crate) fn disjoint(&self, other: &Proposition) -> bool {
        self.bits.iter().zip(&other.bits).all(|(a, b)| a & b == 0)
    }

    /// Lowercase hexadecimal rendering of the minterm bitset, most
    /// significant digit first, without leading zeros.
    pub fn hex_key(&self) -> String {
        let mut out = String::new();
        for w in self.bits.iter().rev() {
            if out.is_empty() {
                if *w != 0 {
                    out = format!("{w:x}");
                }
            } else {
                out.push_str(&format!("{w:016x}"));
            }
        }
        if out.is_empty() {
            out.push('0');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AlgebraWarning {
    /// Constraints delete every minterm where the atom holds.
    AtomCollapsed(String),
    /// Two atoms denote the same proposition after propagation.
    AtomsIdentified(String, String),
    /// No minterm survives; `top = bot`.
    Degenerate,
}

impl fmt::Display for AlgebraWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AlgebraWarning::AtomCollapsed(a) => write!(f, "constraints force atom '{a}' to bot"),
            AlgebraWarning::AtomsIdentified(a, b) => {
                write!(f, "constraints identify atoms '{a}' and '{b}'")
            }
            AlgebraWarning::Degenerate => {
                f.write_str("constraints remove every minterm (top = bot)")
            }
        }
    }
}

/// The pre-Boolean algebra generated by a set of atoms under constraints.
/// Immutable once built.
#[derive(Debug)]
pub struct PreBooleanAlgebra {
    id: u64,
    atoms: Vec<Atom>,
    words: usize,
    universe: usize,
    surviving: Words,
    atom_bits: Vec<Words>,
    lattice: Vec<Proposition>,
    index: HashMap<Words, usize>,
    warnings: Vec<AlgebraWarning>,
}

fn full_words(universe: usize, words: usize) -> Words {
    let mut out: Words = smallvec![0; words];
    for m in 0..universe {
        out[m / 64] |= 1 << (m % 64);
    }
    out
}

fn and_words(a: &Words, b: &Words) -> Words {
    a.iter().zip(b).map(|(x, y)| x & y).collect()
}

fn cmp_numeric(a: &Words, b: &Words) -> std::cmp::Ordering {
    a.iter().rev().cmp(b.iter().rev())
}

impl PreBooleanAlgebra {
    pub fn build(atoms: Vec<Atom>, constraints: &ConstraintSet) -> Result<Self, AlgebraError> {
        if atoms.len() > MAX_ATOMS {
            return Err(AlgebraError::TooManyAtoms(atoms.len()));
        }
        for (i, a) in atoms.iter().enumerate() {
            if atoms[..i].contains(a) {
                return Err(AlgebraError::DuplicateAtom(a.0.clone()));
            }
        }
        let n = atoms.len();
        let universe = 1usize << n;
        let words = universe.div_ceil(64);
        let atom_bits: Vec<Words> = (0..n)
            .map(|k| {
                let mut w: Words = smallvec![0; words];
                for m in 0..universe {
                    if (m >> k) & 1 == 1 {
                        w[m / 64] |= 1 << (m % 64);
                    }
                }
                w
            })
            .collect();

        let mut algebra = PreBooleanAlgebra {
            id: NEXT_ALGEBRA_ID.fetch_add(1, Ordering::Relaxed),
            atoms,
            words,
            universe,
            surviving: full_words(universe, words),
            atom_bits,
            lattice: Vec::new(),
            index: HashMap::new(),
            warnings: Vec::new(),
        };

        // phi = psi holds in the quotient iff phi xor psi is deleted.
        let mut surviving = algebra.surviving.clone();
        for eq in &constraints.equations {
            let lhs = algebra.eval_ambient(&eq.lhs)?;
            let rhs = algebra.eval_ambient(&eq.rhs)?;
            for i in 0..words {
                surviving[i] &= !(lhs[i] ^ rhs[i]);
            }
        }
        algebra.surviving = surviving;

        algebra.collect_warnings();
        algebra.close_lattice()?;
        Ok(algebra)
    }

    /// Free pre-Boolean algebra (hyperpower set) on the given atom names.
    pub fn free<S: AsRef<str>>(names: &[S]) -> Result<Self, AlgebraError> {
        Self::with_constraints(names, &[] as &[&str])
    }

    /// Convenience constructor from atom names and `"lhs = rhs"` strings.
    pub fn with_constraints<S: AsRef<str>, C: AsRef<str>>(
        names: &[S],
        constraints: &[C],
    ) -> Result<Self, AlgebraError> {
        let atoms = names
            .iter()
            .map(|n| Atom::new(n.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        let constraints = ConstraintSet::parse(constraints)?;
        Self::build(atoms, &constraints)
    }

    /// Boolean algebra of subsets of the atoms: atoms pairwise exclusive and
    /// exhaustive.
    pub fn powerset<S: AsRef<str>>(names: &[S]) -> Result<Self, AlgebraError> {
        let mut lines = Vec::new();
        for i in 0..names.len() {
            for j in i + 1..names.len() {
                lines.push(format!("{}&{} = bot", names[i].as_ref(), names[j].as_ref()));
            }
        }
        if !names.is_empty() {
            let all: Vec<&str> = names.iter().map(|s| s.as_ref()).collect();
            lines.push(format!("{} = top", all.join("|")));
        }
        Self::with_constraints(names, &lines)
    }

    fn collect_warnings(&mut self) {
        if self.surviving.iter().all(|w| *w == 0) {
            self.warnings.push(AlgebraWarning::Degenerate);
            return;
        }
        let reduced: Vec<Words> = self
            .atom_bits
            .iter()
            .map(|b| and_words(b, &self.surviving))
            .collect();
        for (k, bits) in reduced.iter().enumerate() {
            if bits.iter().all(|w| *w == 0) {
                self.warnings
                    .push(AlgebraWarning::AtomCollapsed(self.atoms[k].0.clone()));
            }
        }
        for i in 0..reduced.len() {
            for j in i + 1..reduced.len() {
                if reduced[i] == reduced[j] && reduced[i].iter().any(|w| *w != 0) {
                    self.warnings.push(AlgebraWarning::AtomsIdentified(
                        self.atoms[i].0.clone(),
                        self.atoms[j].0.clone(),
                    ));
                }
            }
        }
    }

    fn close_lattice(&mut self) -> Result<(), AlgebraError> {
        let mut elements: Vec<Words> = Vec::new();
        let mut seen: HashMap<Words, ()> = HashMap::new();
        let mut push = |w: Words, elements: &mut Vec<Words>| -> Result<(), AlgebraError> {
            if seen.insert(w.clone(), ()).is_none() {
                elements.push(w);
                if elements.len() > MAX_LATTICE_SIZE {
                    return Err(AlgebraError::LatticeTooLarge);
                }
            }
            Ok(())
        };
        push(smallvec![0; self.words], &mut elements)?;
        push(self.surviving.clone(), &mut elements)?;
        for bits in &self.atom_bits {
            push(and_words(bits, &self.surviving), &mut elements)?;
        }

        // Every pair (i, j) with j <= i is combined exactly once.
        let mut i = 0;
        while i < elements.len() {
            for j in 0..=i {
                let (x, y) = (&elements[i], &elements[j]);
                let m: Words = x.iter().zip(y).map(|(a, b)| a & b).collect();
                let u: Words = x.iter().zip(y).map(|(a, b)| a | b).collect();
                push(m, &mut elements)?;
                push(u, &mut elements)?;
            }
            i += 1;
        }

        elements.sort_by(|a, b| {
            let ca: u32 = a.iter().map(|w| w.count_ones()).sum();
            let cb: u32 = b.iter().map(|w| w.count_ones()).sum();
            ca.cmp(&cb).then_with(|| cmp_numeric(a, b))
        });
        self.index = elements
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        self.lattice = elements
            .into_iter()
            .map(|bits| Proposition {
                algebra: self.id,
                bits,
            })
            .collect();
        Ok(())
    }

    fn eval_ambient(&self, expr: &Expression) -> Result<Words, AlgebraError> {
        Ok(match expr {
            Expression::Atom(name) => {
                let k = self
                    .atom_index(name)
                    .ok_or_else(|| AlgebraError::UnknownAtom(name.clone()))?;
                self.atom_bits[k].clone()
            }
            Expression::Bot => smallvec![0; self.words],
            Expression::Top => full_words(self.universe, self.words),
            Expression::Meet(l, r) => {
                let (l, r) = (self.eval_ambient(l)?, self.eval_ambient(r)?);
                l.iter().zip(&r).map(|(a, b)| a & b).collect()
            }
            Expression::Join(l, r) => {
                let (l, r) = (self.eval_ambient(l)?, self.eval_ambient(r)?);
                l.iter().zip(&r).map(|(a, b)| a | b).collect()
            }
        })
    }

    fn wrap(&self, bits: Words) -> Proposition {
        Proposition {
            algebra: self.id,
            bits,
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn atoms(&self) -> &[Atom] {
        &self.atoms
    }

    pub fn atom_index(&self, name: &str) -> Option<usize> {
        self.atoms.iter().position(|a| a.0 == name)
    }

    pub fn atom(&self, name: &str) -> Result<Proposition, AlgebraError> {
        let k = self
            .atom_index(name)
            .ok_or_else(|| AlgebraError::UnknownAtom(name.to_string()))?;
        Ok(self.wrap(and_words(&self.atom_bits[k], &self.surviving)))
    }

    pub fn warnings(&self) -> &[AlgebraWarning] {
        &self.warnings
    }

    /// Minterm ids kept after constraint propagation.
    pub fn surviving_minterms(&self) -> Vec<usize> {
        self.top().minterms().collect()
    }

    pub fn bot(&self) -> Proposition {
        self.wrap(smallvec![0; self.words])
    }

    pub fn top(&self) -> Proposition {
        self.wrap(self.surviving.clone())
    }

    /// Lattice members ordered by size, then numerically by bitset.
    pub fn lattice(&self) -> &[Proposition] {
        &self.lattice
    }

    pub fn len(&self) -> usize {
        self.lattice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lattice.is_empty()
    }

    pub fn position(&self, p: &Proposition) -> Option<usize> {
        if p.algebra != self.id {
            return None;
        }
        self.index.get(&p.bits).copied()
    }

    pub fn contains(&self, p: &Proposition) -> bool {
        self.position(p).is_some()
    }

    pub fn owns(&self, p: &Proposition) -> bool {
        p.algebra == self.id
    }

    pub fn evaluate(&self, expr: &Expression) -> Result<Proposition, AlgebraError> {
        let bits = self.eval_ambient(expr)?;
        Ok(self.wrap(and_words(&bits, &self.surviving)))
    }

    /// Parses an expression and evaluates it within the algebra.
    pub fn parse(&self, text: &str) -> Result<Proposition, AlgebraError> {
        let expr = Expression::parse(text)?;
        self.evaluate(&expr)
    }

    pub fn meet(&self, a: &Proposition, b: &Proposition) -> Result<Proposition, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.and(b))
    }

    pub fn join(&self, a: &Proposition, b: &Proposition) -> Result<Proposition, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.or(b))
    }

    pub fn is_sub(&self, a: &Proposition, b: &Proposition) -> Result<bool, AlgebraError> {
        self.check(a)?;
        self.check(b)?;
        Ok(a.sub_of(b))
    }

    fn check(&self, p: &Proposition) -> Result<(), AlgebraError> {
        if p.algebra != self.id {
            Err(AlgebraError::MixedAlgebras)
        } else {
            Ok(())
        }
    }

    /// True when no two non-bot lattice members meet to bot.
    ///
    /// Every non-bot member contains the meet of all non-collapsed atoms, so
    /// it suffices to test that single meet.
    pub fn is_insulated(&self) -> bool {
        if self.top().is_bot() {
            return true;
        }
        let mut core = self.surviving.clone();
        for bits in &self.atom_bits {
            let reduced = and_words(bits, &self.surviving);
            if reduced.iter().any(|w| *w != 0) {
                core = and_words(&core, &reduced);
            }
        }
        core.iter().any(|w| *w != 0)
    }

    fn conj(&self, subset: usize) -> Words {
        let mut acc = self.surviving.clone();
        for (k, bits) in self.atom_bits.iter().enumerate() {
            if (subset >> k) & 1 == 1 {
                acc = and_words(&acc, bits);
            }
        }
        acc
    }

    /// Deterministic negation-free label.
    ///
    /// Lattice members print as a join of meets of atoms built from their
    /// minimal implicants (`a|b&c`); `bot` and `top` print as keywords.
    /// Propositions with no negation-free form fall back to minterm names
    /// (`m1|m6`).
    pub fn canonical_label(&self, p: &Proposition) -> String {
        if p.is_bot() {
            return "bot".into();
        }
        if p.bits == self.surviving {
            return "top".into();
        }
        let n = self.atoms.len();
        let subsets = 1usize << n;
        let within = |w: &Words| w.iter().zip(&p.bits).all(|(a, b)| a & !b == 0);
        let conj: Vec<Words> = (0..subsets).map(|s| self.conj(s)).collect();
        let implicant: Vec<bool> = conj
            .iter()
            .map(|w| w.iter().any(|x| *x != 0) && within(w))
            .collect();

        let mut terms: Vec<usize> = (0..subsets)
            .filter(|&s| implicant[s])
            .filter(|&s| (0..n).all(|k| (s >> k) & 1 == 0 || !implicant[s & !(1 << k)]))
            .collect();

        let mut cover: Words = smallvec![0; self.words];
        for &s in &terms {
            for (c, w) in cover.iter_mut().zip(&conj[s]) {
                *c |= w;
            }
        }
        if cover != p.bits {
            return p
                .minterms()
                .map(|m| format!("m{m}"))
                .collect::<Vec<_>>()
                .join("|");
        }

        let atom_list = |s: usize| -> Vec<usize> { (0..n).filter(|k| (s >> k) & 1 == 1).collect() };
        terms.sort_by_key(|&x| atom_list(x));
        // Drop terms whose minterms are already inside another kept term.
        let mut kept: Vec<usize> = Vec::new();
        for &s in &terms {
            let covered = kept
                .iter()
                .any(|&t| conj[s].iter().zip(&conj[t]).all(|(a, b)| a & !b == 0));
            if !covered {
                kept.retain(|&t| !conj[t].iter().zip(&conj[s]).all(|(a, b)| a & !b == 0));
                kept.push(s);
            }
        }
        kept.sort_by_key(|&s| atom_list(s));
        kept.iter()
            .map(|&s| {
                atom_list(s)
                    .iter()
                    .map(|&k| self.atoms[k].0.as_str())
                    .collect::<Vec<_>>()
                    .join("&")
            })
            .collect::<Vec<_>>()
            .join("|")
    }
}
