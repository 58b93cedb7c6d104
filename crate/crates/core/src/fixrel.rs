//! Relations over `S1 × S2` and Kleene fixpoint iteration on them.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Automaton, AutomatonError, StateId};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FixError {
    #[error("functor `{name}` did not stabilise within {rounds} rounds; it is not monotone")]
    NonMonotone { name: String, rounds: usize },
    #[error("relation over {found} used where {expected} was expected")]
    UniverseMismatch {
        expected: PairUniverse,
        found: PairUniverse,
    },
}

/// The shape of `S1 × S2` for a fixed pair of automata.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PairUniverse {
    left: usize,
    right: usize,
}

impl PairUniverse {
    pub fn new(left: usize, right: usize) -> Self {
        Self { left, right }
    }

    /// Universe of a compared pair; the alphabets must coincide.
    pub fn of(a: &Automaton, b: &Automaton) -> Result<Self, AutomatonError> {
        a.check_same_alphabet(b)?;
        Ok(Self::new(a.num_states(), b.num_states()))
    }

    pub fn left_size(&self) -> usize {
        self.left
    }

    pub fn right_size(&self) -> usize {
        self.right
    }

    pub fn size(&self) -> usize {
        self.left * self.right
    }

    fn index(&self, s1: StateId, s2: StateId) -> usize {
        assert!(
            s1.0 < self.left && s2.0 < self.right,
            "pair ({}, {}) outside {self}",
            s1.0,
            s2.0
        );
        s1.0 * self.right + s2.0
    }

    pub fn pairs(&self) -> impl Iterator<Item = (StateId, StateId)> {
        let right = self.right;
        (0..self.size()).map(move |i| (StateId(i / right), StateId(i % right)))
    }

    fn check(&self, other: &PairUniverse) -> Result<(), FixError> {
        if self == other {
            Ok(())
        } else {
            Err(FixError::UniverseMismatch {
                expected: *self,
                found: *other,
            })
        }
    }
}

impl fmt::Display for PairUniverse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{} pairs", self.left, self.right)
    }
}

/// A set of state pairs, stored densely.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PairRel {
    universe: PairUniverse,
    bits: Vec<bool>,
}

impl PairRel {
    pub fn empty(universe: PairUniverse) -> Self {
        Self {
            universe,
            bits: vec![false; universe.size()],
        }
    }

    pub fn full(universe: PairUniverse) -> Self {
        Self {
            universe,
            bits: vec![true; universe.size()],
        }
    }

    pub fn from_pairs(
        universe: PairUniverse,
        pairs: impl IntoIterator<Item = (StateId, StateId)>,
    ) -> Self {
        let mut r = Self::empty(universe);
        for (s1, s2) in pairs {
            r.insert(s1, s2);
        }
        r
    }

    pub fn from_fn(universe: PairUniverse, mut f: impl FnMut(StateId, StateId) -> bool) -> Self {
        let bits = universe.pairs().map(|(s1, s2)| f(s1, s2)).collect();
        Self { universe, bits }
    }

    pub fn universe(&self) -> PairUniverse {
        self.universe
    }

    pub fn contains(&self, s1: StateId, s2: StateId) -> bool {
        self.bits[self.universe.index(s1, s2)]
    }

    pub fn insert(&mut self, s1: StateId, s2: StateId) -> bool {
        let i = self.universe.index(s1, s2);
        !std::mem::replace(&mut self.bits[i], true)
    }

    pub fn remove(&mut self, s1: StateId, s2: StateId) -> bool {
        let i = self.universe.index(s1, s2);
        std::mem::replace(&mut self.bits[i], false)
    }

    pub fn len(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// Members in lexicographic (left, right) index order.
    pub fn iter(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.universe
            .pairs()
            .zip(self.bits.iter())
            .filter(|(_, &b)| b)
            .map(|(p, _)| p)
    }

    pub fn is_subset(&self, other: &PairRel) -> bool {
        self.universe == other.universe
            && self.bits.iter().zip(&other.bits).all(|(&a, &b)| !a || b)
    }

    pub fn union(&self, other: &PairRel) -> PairRel {
        self.zip(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &PairRel) -> PairRel {
        self.zip(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &PairRel) -> PairRel {
        self.zip(other, |a, b| a && !b)
    }

    pub fn complement(&self) -> PairRel {
        PairRel {
            universe: self.universe,
            bits: self.bits.iter().map(|b| !b).collect(),
        }
    }

    fn zip(&self, other: &PairRel, f: impl Fn(bool, bool) -> bool) -> PairRel {
        assert_eq!(self.universe, other.universe, "relations over different universes");
        PairRel {
            universe: self.universe,
            bits: self.bits.iter().zip(&other.bits).map(|(&a, &b)| f(a, b)).collect(),
        }
    }

    /// Renders the pairs as `{(s1,s2), ...}` using state names.
    pub fn display_with(&self, a: &Automaton, b: &Automaton) -> String {
        let items: Vec<String> = self
            .iter()
            .map(|(s1, s2)| format!("({},{})", a.state_name(s1), b.state_name(s2)))
            .collect();
        format!("{{{}}}", items.join(", "))
    }

    /// Named pairs, for serialization.
    pub fn named_pairs(&self, a: &Automaton, b: &Automaton) -> Vec<(String, String)> {
        self.iter()
            .map(|(s1, s2)| (a.state_name(s1).to_string(), b.state_name(s2).to_string()))
            .collect()
    }
}

impl fmt::Debug for PairRel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set()
            .entries(self.iter().map(|(a, b)| (a.0, b.0)))
            .finish()
    }
}

/// A monotone map on relations over one universe. Monotonicity is a
/// contract; the iterators below only detect its failure indirectly.
pub trait Functor {
    fn name(&self) -> &str;
    fn universe(&self) -> PairUniverse;
    fn apply(&self, x: &PairRel) -> PairRel;
}

/// Wraps a closure as a [`Functor`].
pub struct FnFunctor<F> {
    name: String,
    universe: PairUniverse,
    f: F,
}

impl<F: Fn(&PairRel) -> PairRel> FnFunctor<F> {
    pub fn new(name: impl Into<String>, universe: PairUniverse, f: F) -> Self {
        Self {
            name: name.into(),
            universe,
            f,
        }
    }
}

impl<F: Fn(&PairRel) -> PairRel> Functor for FnFunctor<F> {
    fn name(&self) -> &str {
        &self.name
    }

    fn universe(&self) -> PairUniverse {
        self.universe
    }

    fn apply(&self, x: &PairRel) -> PairRel {
        (self.f)(x)
    }
}

impl<T: Functor + ?Sized> Functor for &T {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn universe(&self) -> PairUniverse {
        (**self).universe()
    }

    fn apply(&self, x: &PairRel) -> PairRel {
        (**self).apply(x)
    }
}

impl<T: Functor + ?Sized> Functor for Box<T> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn universe(&self) -> PairUniverse {
        (**self).universe()
    }

    fn apply(&self, x: &PairRel) -> PairRel {
        (**self).apply(x)
    }
}

fn iterate(f: &dyn Functor, start: PairRel) -> Result<PairRel, FixError> {
    let rounds = f.universe().size() + 1;
    let mut x = start;
    for _ in 0..=rounds {
        let next = f.apply(&x);
        f.universe().check(&next.universe())?;
        if next == x {
            return Ok(x);
        }
        x = next;
    }
    Err(FixError::NonMonotone {
        name: f.name().to_string(),
        rounds,
    })
}

/// Greatest fixpoint, iterating down from the full relation.
pub fn gfp(f: &dyn Functor) -> Result<PairRel, FixError> {
    iterate(f, PairRel::full(f.universe()))
}

/// Least fixpoint, iterating up from the empty relation.
pub fn lfp(f: &dyn Functor) -> Result<PairRel, FixError> {
    iterate(f, PairRel::empty(f.universe()))
}

/// A least fixpoint together with the round in which each member first
/// appeared. A pair of rank `k` lies in `f(Y)` where `Y` holds exactly the
/// pairs of rank `< k`, so ranks give a well-founded order for derivations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankedLfp {
    pub value: PairRel,
    ranks: Vec<Option<usize>>,
}

impl RankedLfp {
    pub fn rank(&self, s1: StateId, s2: StateId) -> Option<usize> {
        self.ranks[self.value.universe().index(s1, s2)]
    }

    /// Members of rank strictly below `k`.
    pub fn below(&self, k: usize) -> PairRel {
        let u = self.value.universe();
        PairRel::from_fn(u, |s1, s2| self.rank(s1, s2).is_some_and(|r| r < k))
    }
}

/// [`lfp`] with first-appearance ranks (1-based).
pub fn lfp_ranked(f: &dyn Functor) -> Result<RankedLfp, FixError> {
    let u = f.universe();
    let rounds = u.size() + 1;
    let mut ranks: Vec<Option<usize>> = vec![None; u.size()];
    let mut x = PairRel::empty(u);
    for round in 1..=rounds + 1 {
        let next = f.apply(&x);
        u.check(&next.universe())?;
        if next == x {
            return Ok(RankedLfp { value: x, ranks });
        }
        for (s1, s2) in next.iter() {
            let i = u.index(s1, s2);
            if ranks[i].is_none() {
                ranks[i] = Some(round);
            }
        }
        x = next;
    }
    Err(FixError::NonMonotone {
        name: f.name().to_string(),
        rounds,
    })
}

/// Parameterized greatest fixpoint `νX. f(X ∪ h)`.
pub fn pgfp(f: &dyn Functor, h: &PairRel) -> Result<PairRel, FixError> {
    f.universe().check(&h.universe())?;
    let g = FnFunctor::new(format!("{}[∪H]", f.name()), f.universe(), |x: &PairRel| {
        f.apply(&x.union(h))
    });
    gfp(&g)
}

/// Whether `r ⊆ f(r)`.
pub fn check_postfixed(f: &dyn Functor, r: &PairRel) -> Result<bool, FixError> {
    f.universe().check(&r.universe())?;
    Ok(r.is_subset(&f.apply(r)))
}
