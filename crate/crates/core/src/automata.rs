//! Finite Büchi automata and their trace/language semantics.
//!
//! An [`Automaton`] is built from a name-level [`AutomatonDef`] and stores
//! everything by dense index afterwards: states in declaration order, events
//! sorted by name. Two automata over the same event set therefore agree on
//! every [`EventId`], which is what the simulation code relies on.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::LabeledGraph;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct StateId(pub usize);

impl StateId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventId(pub usize);

impl EventId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AutomatonError {
    #[error("automaton `{name}` is invalid: {}", join_violations(.violations))]
    Invalid {
        name: String,
        violations: Vec<Violation>,
    },
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("unknown event `{0}`")]
    UnknownEvent(String),
    #[error("alphabet mismatch between `{left}` and `{right}`")]
    AlphabetMismatch { left: String, right: String },
    #[error("invalid generator parameters: {0}")]
    BadParameters(String),
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ViolationKind {
    UnknownState,
    UnknownEvent,
    DuplicateState,
    DuplicateEvent,
    DuplicateTransition,
}

impl ViolationKind {
    pub fn describe(self) -> &'static str {
        match self {
            ViolationKind::UnknownState => "unknown state",
            ViolationKind::UnknownEvent => "unknown event",
            ViolationKind::DuplicateState => "duplicate state",
            ViolationKind::DuplicateEvent => "duplicate event",
            ViolationKind::DuplicateTransition => "duplicate transition",
        }
    }
}

/// One broken invariant of an [`AutomatonDef`], with where it was found.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Which declaration the problem sits in, e.g. `initial` or `transition #2`.
    pub location: String,
    /// The offending identifier or transition.
    pub subject: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} `{}` in {}", self.kind.describe(), self.subject, self.location)
    }
}

/// Name-level description of an automaton, as written in input files.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct AutomatonDef {
    pub name: String,
    pub alphabet: Vec<String>,
    pub states: Vec<String>,
    pub initial: Vec<String>,
    pub accepting: Vec<String>,
    /// `(source, event, target)`
    pub transitions: Vec<(String, String, String)>,
}

impl AutomatonDef {
    /// Every invariant violation; empty iff the definition is well formed.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut states = BTreeSet::new();
        for s in &self.states {
            if !states.insert(s.as_str()) {
                out.push(Violation {
                    kind: ViolationKind::DuplicateState,
                    location: "states".into(),
                    subject: s.clone(),
                });
            }
        }
        let mut events = BTreeSet::new();
        for e in &self.alphabet {
            if !events.insert(e.as_str()) {
                out.push(Violation {
                    kind: ViolationKind::DuplicateEvent,
                    location: "alphabet".into(),
                    subject: e.clone(),
                });
            }
        }
        for (field, list) in [("initial", &self.initial), ("accepting", &self.accepting)] {
            for s in list {
                if !states.contains(s.as_str()) {
                    out.push(Violation {
                        kind: ViolationKind::UnknownState,
                        location: field.into(),
                        subject: s.clone(),
                    });
                }
            }
        }
        let mut seen = BTreeSet::new();
        for (i, (src, ev, dst)) in self.transitions.iter().enumerate() {
            let location = format!("transition #{}", i + 1);
            for s in [src, dst] {
                if !states.contains(s.as_str()) {
                    out.push(Violation {
                        kind: ViolationKind::UnknownState,
                        location: location.clone(),
                        subject: s.clone(),
                    });
                }
            }
            if !events.contains(ev.as_str()) {
                out.push(Violation {
                    kind: ViolationKind::UnknownEvent,
                    location: location.clone(),
                    subject: ev.clone(),
                });
            }
            if !seen.insert((src, ev, dst)) {
                out.push(Violation {
                    kind: ViolationKind::DuplicateTransition,
                    location,
                    subject: format!("{src} -{ev}-> {dst}"),
                });
            }
        }
        out
    }
}

/// Free-function form of [`AutomatonDef::validate`].
pub fn validate(def: &AutomatonDef) -> Vec<Violation> {
    def.validate()
}

/// A validated finite Büchi automaton. Immutable once built.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Automaton {
    name: String,
    alphabet: Vec<String>,
    states: Vec<String>,
    initial: Vec<StateId>,
    accepting: Vec<bool>,
    transitions: Vec<(StateId, EventId, StateId)>,
    // succ[state][event]
    succ: Vec<Vec<Vec<StateId>>>,
}

impl Automaton {
    pub fn new(def: AutomatonDef) -> Result<Self, AutomatonError> {
        let violations = def.validate();
        if !violations.is_empty() {
            return Err(AutomatonError::Invalid {
                name: def.name,
                violations,
            });
        }
        let mut alphabet = def.alphabet;
        alphabet.sort();
        let state_ix: HashMap<&str, usize> = def
            .states
            .iter()
            .enumerate()
            .map(|(i, s)| (s.as_str(), i))
            .collect();
        let event_ix: HashMap<&str, usize> = alphabet
            .iter()
            .enumerate()
            .map(|(i, e)| (e.as_str(), i))
            .collect();
        let mut initial: Vec<StateId> = def
            .initial
            .iter()
            .map(|s| StateId(state_ix[s.as_str()]))
            .collect();
        initial.sort();
        initial.dedup();
        let mut accepting = vec![false; def.states.len()];
        for s in &def.accepting {
            accepting[state_ix[s.as_str()]] = true;
        }
        let mut transitions: Vec<(StateId, EventId, StateId)> = def
            .transitions
            .iter()
            .map(|(s, e, t)| {
                (
                    StateId(state_ix[s.as_str()]),
                    EventId(event_ix[e.as_str()]),
                    StateId(state_ix[t.as_str()]),
                )
            })
            .collect();
        transitions.sort();
        let mut succ = vec![vec![Vec::new(); alphabet.len()]; def.states.len()];
        for &(s, e, t) in &transitions {
            succ[s.0][e.0].push(t);
        }
        Ok(Self {
            name: def.name,
            alphabet,
            states: def.states,
            initial,
            accepting,
            transitions,
            succ,
        })
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Event names, sorted.
    pub fn alphabet(&self) -> &[String] {
        &self.alphabet
    }

    /// State names in declaration order.
    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_events(&self) -> usize {
        self.alphabet.len()
    }

    pub fn initial(&self) -> &[StateId] {
        &self.initial
    }

    pub fn is_initial(&self, s: StateId) -> bool {
        self.initial.contains(&s)
    }

    pub fn is_accepting(&self, s: StateId) -> bool {
        self.accepting[s.0]
    }

    pub fn accepting_states(&self) -> impl Iterator<Item = StateId> + '_ {
        self.accepting
            .iter()
            .enumerate()
            .filter(|(_, &a)| a)
            .map(|(i, _)| StateId(i))
    }

    pub fn state_ids(&self) -> impl Iterator<Item = StateId> {
        (0..self.states.len()).map(StateId)
    }

    pub fn event_ids(&self) -> impl Iterator<Item = EventId> {
        (0..self.alphabet.len()).map(EventId)
    }

    /// Sorted `(source, event, target)` triples.
    pub fn transitions(&self) -> &[(StateId, EventId, StateId)] {
        &self.transitions
    }

    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s.0]
    }

    pub fn event_name(&self, e: EventId) -> &str {
        &self.alphabet[e.0]
    }

    pub fn state_id(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name).map(StateId)
    }

    pub fn event_id(&self, name: &str) -> Option<EventId> {
        self.alphabet.binary_search_by(|e| e.as_str().cmp(name)).ok().map(EventId)
    }

    pub fn resolve_state(&self, name: &str) -> Result<StateId, AutomatonError> {
        self.state_id(name)
            .ok_or_else(|| AutomatonError::UnknownState(name.to_string()))
    }

    pub fn resolve_event(&self, name: &str) -> Result<EventId, AutomatonError> {
        self.event_id(name)
            .ok_or_else(|| AutomatonError::UnknownEvent(name.to_string()))
    }

    /// Targets of `s -e->`, sorted by index.
    pub fn succ(&self, s: StateId, e: EventId) -> &[StateId] {
        &self.succ[s.0][e.0]
    }

    pub fn has_transition(&self, s: StateId, e: EventId, t: StateId) -> bool {
        self.succ[s.0][e.0].contains(&t)
    }

    /// Name-level successor query: `{s' | (s, e, s') ∈ transitions}`.
    pub fn successors(&self, s: &str, e: &str) -> Result<BTreeSet<String>, AutomatonError> {
        let s = self.resolve_state(s)?;
        let e = self.resolve_event(e)?;
        Ok(self
            .succ(s, e)
            .iter()
            .map(|&t| self.state_name(t).to_string())
            .collect())
    }

    /// `(event, target)` pairs leaving `s`, ordered by event then target.
    pub fn out_edges(&self, s: StateId) -> impl Iterator<Item = (EventId, StateId)> + '_ {
        self.succ[s.0]
            .iter()
            .enumerate()
            .flat_map(|(e, ts)| ts.iter().map(move |&t| (EventId(e), t)))
    }

    pub fn is_deadlock(&self, s: StateId) -> bool {
        self.succ[s.0].iter().all(|ts| ts.is_empty())
    }

    /// Same automaton with the initial set replaced by `{s}`.
    pub fn rooted_at(&self, s: StateId) -> Automaton {
        let mut a = self.clone();
        a.initial = vec![s];
        a
    }

    /// Same automaton with every state accepting.
    pub fn with_all_accepting(&self) -> Automaton {
        let mut a = self.clone();
        a.accepting = vec![true; a.states.len()];
        a
    }

    pub fn with_name(&self, name: impl Into<String>) -> Automaton {
        let mut a = self.clone();
        a.name = name.into();
        a
    }

    pub fn to_def(&self) -> AutomatonDef {
        AutomatonDef {
            name: self.name.clone(),
            alphabet: self.alphabet.clone(),
            states: self.states.clone(),
            initial: self
                .initial
                .iter()
                .map(|&s| self.state_name(s).to_string())
                .collect(),
            accepting: self
                .accepting_states()
                .map(|s| self.state_name(s).to_string())
                .collect(),
            transitions: self
                .transitions
                .iter()
                .map(|&(s, e, t)| {
                    (
                        self.state_name(s).to_string(),
                        self.event_name(e).to_string(),
                        self.state_name(t).to_string(),
                    )
                })
                .collect(),
        }
    }

    pub fn same_alphabet(&self, other: &Automaton) -> bool {
        self.alphabet == other.alphabet
    }

    pub fn check_same_alphabet(&self, other: &Automaton) -> Result<(), AutomatonError> {
        if self.same_alphabet(other) {
            Ok(())
        } else {
            Err(AutomatonError::AlphabetMismatch {
                left: self.name.clone(),
                right: other.name.clone(),
            })
        }
    }

    fn lasso_events(&self, w: &Lasso) -> Result<Vec<EventId>, AutomatonError> {
        w.stem
            .iter()
            .chain(w.period.iter())
            .map(|e| self.resolve_event(e))
            .collect()
    }

    // Product of the automaton with the positions of `w`; the stem positions
    // are visited once, the loop positions wrap around.
    fn lasso_product(&self, w: &Lasso) -> Result<(LabeledGraph, Vec<usize>, usize), AutomatonError> {
        let word = self.lasso_events(w)?;
        let len = word.len();
        let stem = w.stem.len();
        let next = |p: usize| if p + 1 < len { p + 1 } else { stem };
        let mut g = LabeledGraph::with_nodes(self.num_states() * len);
        for s in self.state_ids() {
            for (p, &e) in word.iter().enumerate() {
                for &t in self.succ(s, e) {
                    g.add_edge(s.0 * len + p, t.0 * len + next(p), e);
                }
            }
        }
        let init = self.initial.iter().map(|s| s.0 * len).collect();
        Ok((g, init, len))
    }

    /// Whether `w` is in the language: some run visits an accepting state
    /// infinitely often.
    pub fn member(&self, w: &Lasso) -> Result<bool, AutomatonError> {
        let (g, init, len) = self.lasso_product(w)?;
        Ok(g
            .accepting_lasso(&init, |n| self.accepting[n / len])
            .is_some())
    }

    /// Whether `w` is an infinite trace of the automaton, acceptance ignored.
    pub fn member_trace(&self, w: &Lasso) -> Result<bool, AutomatonError> {
        let (g, init, _) = self.lasso_product(w)?;
        Ok(g.accepting_lasso(&init, |_| true).is_some())
    }

    /// Decides emptiness of the language, producing an accepted lasso when
    /// it is nonempty.
    pub fn is_empty(&self) -> Emptiness {
        let mut g = LabeledGraph::with_nodes(self.num_states());
        for &(s, e, t) in &self.transitions {
            g.add_edge(s.0, t.0, e);
        }
        let init: Vec<usize> = self.initial.iter().map(|s| s.0).collect();
        match g.accepting_lasso(&init, |n| self.accepting[n]) {
            None => Emptiness::Empty,
            Some((stem, period)) => Emptiness::Witness(self.lasso_from_ids(&stem, &period)),
        }
    }

    pub(crate) fn lasso_from_ids(&self, stem: &[EventId], period: &[EventId]) -> Lasso {
        Lasso {
            stem: stem.iter().map(|&e| self.event_name(e).to_string()).collect(),
            period: period.iter().map(|&e| self.event_name(e).to_string()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Emptiness {
    Empty,
    Witness(Lasso),
}

impl Emptiness {
    pub fn is_empty(&self) -> bool {
        matches!(self, Emptiness::Empty)
    }

    pub fn witness(&self) -> Option<&Lasso> {
        match self {
            Emptiness::Empty => None,
            Emptiness::Witness(w) => Some(w),
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LassoError {
    #[error("lasso loop must be nonempty")]
    EmptyLoop,
    #[error("malformed lasso `{0}`: expected `stem;loop`")]
    Malformed(String),
}

/// An ultimately periodic word `stem · period^ω`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Lasso {
    stem: Vec<String>,
    period: Vec<String>,
}

impl Lasso {
    pub fn new<S: Into<String>>(
        stem: impl IntoIterator<Item = S>,
        period: impl IntoIterator<Item = S>,
    ) -> Result<Self, LassoError> {
        let period: Vec<String> = period.into_iter().map(Into::into).collect();
        if period.is_empty() {
            return Err(LassoError::EmptyLoop);
        }
        Ok(Self {
            stem: stem.into_iter().map(Into::into).collect(),
            period,
        })
    }

    /// `v^ω`
    pub fn periodic<S: Into<String>>(period: impl IntoIterator<Item = S>) -> Result<Self, LassoError> {
        Self::new(Vec::<S>::new(), period)
    }

    pub fn stem(&self) -> &[String] {
        &self.stem
    }

    pub fn period(&self) -> &[String] {
        &self.period
    }

    /// Moves the first `k` loop events into the stem and rotates the loop;
    /// denotes the same infinite word.
    pub fn rotate(&self, k: usize) -> Lasso {
        let k = k % self.period.len();
        let mut stem = self.stem.clone();
        stem.extend_from_slice(&self.period[..k]);
        let mut period = self.period[k..].to_vec();
        period.extend_from_slice(&self.period[..k]);
        Lasso { stem, period }
    }

    /// Repeats the loop `times` times; denotes the same infinite word.
    pub fn unroll(&self, times: usize) -> Lasso {
        let times = times.max(1);
        Lasso {
            stem: self.stem.clone(),
            period: vec![self.period.clone(); times].concat(),
        }
    }

    /// The `i`-th letter of the infinite word.
    pub fn letter(&self, i: usize) -> &str {
        if i < self.stem.len() {
            &self.stem[i]
        } else {
            &self.period[(i - self.stem.len()) % self.period.len()]
        }
    }
}

impl fmt::Display for Lasso {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{};{}", self.stem.join(","), self.period.join(","))
    }
}

impl FromStr for Lasso {
    type Err = LassoError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (stem, period) = s
            .split_once(';')
            .ok_or_else(|| LassoError::Malformed(s.to_string()))?;
        let split = |x: &str| -> Vec<String> {
            x.split(',')
                .map(str::trim)
                .filter(|t| !t.is_empty())
                .map(String::from)
                .collect()
        };
        Lasso::new(split(stem), split(period))
    }
}

fn event_names(n: usize) -> Vec<String> {
    if n <= 26 {
        (0..n).map(|i| ((b'a' + i as u8) as char).to_string()).collect()
    } else {
        (0..n).map(|i| format!("e{i}")).collect()
    }
}

/// Seeded random automaton: each potential transition is present with
/// probability `density`, each state accepting with `accepting_fraction`.
/// State `s0` is the single initial state.
pub fn random_automaton(
    states: usize,
    alphabet: usize,
    density: f64,
    accepting_fraction: f64,
    seed: u64,
) -> Result<Automaton, AutomatonError> {
    if states == 0 || alphabet == 0 {
        return Err(AutomatonError::BadParameters(
            "state and event counts must be at least 1".into(),
        ));
    }
    for (what, x) in [("density", density), ("accepting_fraction", accepting_fraction)] {
        if !(0.0..=1.0).contains(&x) {
            return Err(AutomatonError::BadParameters(format!("{what} {x} outside [0,1]")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let names: Vec<String> = (0..states).map(|i| format!("s{i}")).collect();
    let events = event_names(alphabet);
    let mut transitions = Vec::new();
    for s in &names {
        for e in &events {
            for t in &names {
                if rng.gen_bool(density) {
                    transitions.push((s.clone(), e.clone(), t.clone()));
                }
            }
        }
    }
    let accepting = names
        .iter()
        .filter(|_| rng.gen_bool(accepting_fraction))
        .cloned()
        .collect();
    Automaton::new(AutomatonDef {
        name: format!("rand{seed}"),
        alphabet: events,
        states: names.clone(),
        initial: vec![names[0].clone()],
        accepting,
        transitions,
    })
}

/// State name of the countdown program at `location` with counter `x`.
pub fn counter_state(location: u32, x: usize) -> String {
    format!("c{location}_x{x}")
}

/// The countdown program truncated to `x ≤ bound`: location 3 picks any
/// `n ≤ bound`, location 4 counts down, location 5 emits `done`.
/// Every state is accepting.
pub fn counter_program(bound: usize) -> Automaton {
    let c = counter_state;
    let mut states = vec![c(1, 0), c(2, 0), c(3, 0)];
    states.extend((0..=bound).map(|x| c(4, x)));
    states.push(c(5, 0));
    let eps = "eps".to_string();
    let mut transitions = vec![
        (c(1, 0), eps.clone(), c(2, 0)),
        (c(2, 0), eps.clone(), c(3, 0)),
    ];
    for n in 0..=bound {
        transitions.push((c(3, 0), eps.clone(), c(4, n)));
    }
    for x in 1..=bound {
        transitions.push((c(4, x), eps.clone(), c(4, x - 1)));
    }
    transitions.push((c(4, 0), eps.clone(), c(5, 0)));
    transitions.push((c(5, 0), "done".into(), c(2, 0)));
    Automaton::new(AutomatonDef {
        name: format!("Counter{bound}"),
        alphabet: vec!["done".into(), eps],
        states: states.clone(),
        initial: vec![c(1, 0)],
        accepting: states,
        transitions,
    })
    .expect("counter program is well formed")
}
