//! Simulation functors and the largest relation of each kind.
//!
//! Every kind is assembled from the same few building blocks on a
//! [`SimContext`]:
//!
//! * `step_into(X)`: every move of the left state is answered by an
//!   equally-labelled move of the right state landing in `X`;
//! * `final_into(X)`: `step_into(X)` restricted to accepting right states;
//! * `lstep(X)`: `step_into(X)` restricted to non-accepting left states.
//!
//! Inner least fixpoints are recomputed from scratch in every round of the
//! outer greatest fixpoint.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Automaton, AutomatonError, StateId};
use crate::fixrel::{
    check_postfixed, gfp, lfp, lfp_ranked, FixError, FnFunctor, Functor, PairRel, PairUniverse,
    RankedLfp,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum SimKind {
    #[serde(rename = "standard")]
    Standard,
    #[serde(rename = "direct")]
    Direct,
    #[serde(rename = "delay")]
    Delay,
    #[serde(rename = "rb")]
    Rb,
    #[serde(rename = "2delay")]
    TwoDelay,
    #[serde(rename = "rdelay")]
    RDelay,
    /// Unsound for inclusion; kept so tests can pin down why.
    #[serde(rename = "wrong")]
    Wrong,
}

impl SimKind {
    /// The kinds that certify language (or trace-to-language) inclusion.
    pub const PRODUCTION: [SimKind; 5] = [
        SimKind::Direct,
        SimKind::Delay,
        SimKind::Rb,
        SimKind::TwoDelay,
        SimKind::RDelay,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SimKind::Standard => "standard",
            SimKind::Direct => "direct",
            SimKind::Delay => "delay",
            SimKind::Rb => "rb",
            SimKind::TwoDelay => "2delay",
            SimKind::RDelay => "rdelay",
            SimKind::Wrong => "wrong",
        }
    }
}

impl fmt::Display for SimKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown simulation kind `{0}`")]
pub struct UnknownKind(pub String);

impl FromStr for SimKind {
    type Err = UnknownKind;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "standard" | "sim" => SimKind::Standard,
            "direct" => SimKind::Direct,
            "delay" => SimKind::Delay,
            "rb" => SimKind::Rb,
            "2delay" => SimKind::TwoDelay,
            "rdelay" => SimKind::RDelay,
            "wrong" => SimKind::Wrong,
            other => return Err(UnknownKind(other.to_string())),
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SimError {
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error(transparent)]
    Fix(#[from] FixError),
    #[error("the `{0}` relation is not available here")]
    Unsupported(SimKind),
}

/// A compared pair of automata over a common alphabet.
#[derive(Debug, Clone, Copy)]
pub struct SimContext<'a> {
    a: &'a Automaton,
    b: &'a Automaton,
    universe: PairUniverse,
}

// The inner fixpoints below are built from monotone pieces only.
fn inner(r: Result<PairRel, FixError>) -> PairRel {
    r.expect("simulation functors are monotone")
}

impl<'a> SimContext<'a> {
    pub fn new(a: &'a Automaton, b: &'a Automaton) -> Result<Self, AutomatonError> {
        Ok(Self {
            a,
            b,
            universe: PairUniverse::of(a, b)?,
        })
    }

    pub fn left(&self) -> &'a Automaton {
        self.a
    }

    pub fn right(&self) -> &'a Automaton {
        self.b
    }

    pub fn universe(&self) -> PairUniverse {
        self.universe
    }

    /// Whether every move of `s1` is matched by `s2` into `x`.
    pub fn steps_into(&self, s1: StateId, s2: StateId, x: &PairRel) -> bool {
        self.a.out_edges(s1).all(|(e, t1)| {
            self.b.succ(s2, e).iter().any(|&t2| x.contains(t1, t2))
        })
    }

    pub fn step_into(&self, x: &PairRel) -> PairRel {
        PairRel::from_fn(self.universe, |s1, s2| self.steps_into(s1, s2, x))
    }

    pub fn final_into(&self, x: &PairRel) -> PairRel {
        PairRel::from_fn(self.universe, |s1, s2| {
            self.b.is_accepting(s2) && self.steps_into(s1, s2, x)
        })
    }

    pub fn lstep(&self, x: &PairRel) -> PairRel {
        PairRel::from_fn(self.universe, |s1, s2| {
            !self.a.is_accepting(s1) && self.steps_into(s1, s2, x)
        })
    }

    pub fn direct_step(&self, x: &PairRel) -> PairRel {
        PairRel::from_fn(self.universe, |s1, s2| {
            (!self.a.is_accepting(s1) || self.b.is_accepting(s2)) && self.steps_into(s1, s2, x)
        })
    }

    fn reach_functor<'x>(&'x self, x: &'x PairRel) -> impl Functor + 'x {
        let base = self.final_into(x);
        FnFunctor::new("delay-R", self.universe, move |y: &PairRel| {
            base.union(&self.step_into(y))
        })
    }

    /// `μY. final_into(x) ∪ step_into(Y)`
    pub fn reach(&self, x: &PairRel) -> PairRel {
        inner(lfp(&self.reach_functor(x)))
    }

    pub fn reach_ranked(&self, x: &PairRel) -> RankedLfp {
        lfp_ranked(&self.reach_functor(x)).expect("simulation functors are monotone")
    }

    fn wait_functor<'x>(&'x self, x: &'x PairRel) -> impl Functor + 'x {
        FnFunctor::new("W", self.universe, move |y: &PairRel| {
            self.step_into(y).union(x)
        })
    }

    /// `μY. step_into(Y) ∪ x`
    pub fn wait(&self, x: &PairRel) -> PairRel {
        inner(lfp(&self.wait_functor(x)))
    }

    pub fn wait_ranked(&self, x: &PairRel) -> RankedLfp {
        lfp_ranked(&self.wait_functor(x)).expect("simulation functors are monotone")
    }

    fn rdelay_reach_functor(&self, x: &PairRel) -> impl Functor + '_ {
        let base = self.final_into(&self.wait(x));
        FnFunctor::new("rdelay-R", self.universe, move |y: &PairRel| {
            base.union(&self.step_into(y))
        })
    }

    /// `μY. final_into(W(x)) ∪ step_into(Y)`
    pub fn rdelay_reach(&self, x: &PairRel) -> PairRel {
        inner(lfp(&self.rdelay_reach_functor(x)))
    }

    pub fn rdelay_reach_ranked(&self, x: &PairRel) -> RankedLfp {
        lfp_ranked(&self.rdelay_reach_functor(x)).expect("simulation functors are monotone")
    }

    pub fn delay_outer(&self, x: &PairRel) -> PairRel {
        self.reach(x).union(&self.lstep(x))
    }

    pub fn rdelay_outer(&self, x: &PairRel) -> PairRel {
        self.rdelay_reach(x).union(&self.lstep(x))
    }

    /// The functor whose greatest fixpoint underlies `kind`: the full
    /// relation for standard/direct/rb/delay, the committed part for
    /// 2delay (delay-L) and rdelay (rdelay-L).
    pub fn outer_functor(&self, kind: SimKind) -> Result<Box<dyn Functor + '_>, SimError> {
        let u = self.universe;
        Ok(match kind {
            SimKind::Standard => Box::new(FnFunctor::new("sim", u, |x: &PairRel| self.step_into(x))),
            SimKind::Direct => {
                Box::new(FnFunctor::new("direct", u, |x: &PairRel| self.direct_step(x)))
            }
            SimKind::Delay | SimKind::TwoDelay => {
                Box::new(FnFunctor::new("delay-L", u, |x: &PairRel| self.delay_outer(x)))
            }
            SimKind::Rb => Box::new(FnFunctor::new("rb", u, |x: &PairRel| self.reach(x))),
            SimKind::RDelay => {
                Box::new(FnFunctor::new("rdelay-L", u, |x: &PairRel| self.rdelay_outer(x)))
            }
            SimKind::Wrong => return Err(SimError::Unsupported(kind)),
        })
    }

    /// The committed relation: `gfp(outer_functor(kind))`.
    pub fn committed(&self, kind: SimKind) -> Result<PairRel, SimError> {
        Ok(gfp(&*self.outer_functor(kind)?)?)
    }

    pub fn compute(&self, kind: SimKind) -> Result<PairRel, SimError> {
        let l = self.committed(kind)?;
        Ok(match kind {
            SimKind::TwoDelay | SimKind::RDelay => self.wait(&l),
            _ => l,
        })
    }
}

/// `{(s1,s2) | ∀e, s1 -e-> s1'. ∃ s2 -e-> s2'. (s1',s2') ∈ x}`
pub fn step_into(a: &Automaton, b: &Automaton, x: &PairRel) -> Result<PairRel, SimError> {
    let cx = SimContext::new(a, b)?;
    check_universe(&cx, x)?;
    Ok(cx.step_into(x))
}

fn check_universe(cx: &SimContext, x: &PairRel) -> Result<(), SimError> {
    if x.universe() == cx.universe {
        Ok(())
    } else {
        Err(FixError::UniverseMismatch {
            expected: cx.universe,
            found: x.universe(),
        }
        .into())
    }
}

/// The standard simulation functor.
pub fn functor_sim<'a>(cx: &'a SimContext<'a>) -> impl Functor + 'a {
    FnFunctor::new("sim", cx.universe(), move |x: &PairRel| cx.step_into(x))
}

pub fn compute(kind: SimKind, a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    SimContext::new(a, b)?.compute(kind)
}

pub fn compute_sim(a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    compute(SimKind::Standard, a, b)
}

pub fn compute_direct(a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    compute(SimKind::Direct, a, b)
}

pub fn compute_delay(a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    compute(SimKind::Delay, a, b)
}

/// The inner reach relation of delay simulation at a given `x`.
pub fn compute_delay_reach(a: &Automaton, b: &Automaton, x: &PairRel) -> Result<PairRel, SimError> {
    let cx = SimContext::new(a, b)?;
    check_universe(&cx, x)?;
    Ok(cx.reach(x))
}

pub fn compute_rb(a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    compute(SimKind::Rb, a, b)
}

pub fn compute_2delay(a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    compute(SimKind::TwoDelay, a, b)
}

pub fn compute_rdelay(a: &Automaton, b: &Automaton) -> Result<PairRel, SimError> {
    compute(SimKind::RDelay, a, b)
}

/// Whether `r` is a postfixed point of the outer functor of `kind`.
///
/// For 2delay and rdelay the outer functor is the committed (L) part; a
/// pair of a valid certificate then belongs to the relation through the
/// commit step.
pub fn check_certificate(
    kind: SimKind,
    a: &Automaton,
    b: &Automaton,
    r: &PairRel,
) -> Result<bool, SimError> {
    let cx = SimContext::new(a, b)?;
    let f = cx.outer_functor(kind)?;
    Ok(check_postfixed(&*f, r)?)
}
