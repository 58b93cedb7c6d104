//! Goals, rules and proof scripts for the simulation rule systems, with a
//! checker and a bounded proof search.
//!
//! A goal `⊢[H] s1 ≼ s2` carries its phase (`L`, `R` or `W`), whether the
//! context `H` is guarded, and `H` itself. Rules are applied to one goal at
//! a time and yield the subgoals in a canonical order: by event, then by
//! left successor name for stepping rules; by pair name for invariant rules.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Automaton, EventId, StateId};
use crate::fixrel::{PairRel, PairUniverse, RankedLfp};
use crate::simulations::{SimContext, SimKind};

pub const DEFAULT_BUDGET: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Phase {
    L,
    R,
    W,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::L => "L",
            Phase::R => "R",
            Phase::W => "W",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Guard {
    Guarded,
    Released,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Rule {
    Final,
    Step,
    Delay,
    Cycle,
    Guard,
    Invariant,
    LToR,
    LStep,
    RDelay,
    RFinal,
    LCycle,
    LGuard,
    LInvariant,
    RInvariant,
    WWait,
    WCommit,
}

/// What a rule needs besides the goal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ChoiceKind {
    None,
    Match,
    Invariant,
}

impl Rule {
    pub const ALL: [Rule; 16] = [
        Rule::Final,
        Rule::Step,
        Rule::Delay,
        Rule::Cycle,
        Rule::Guard,
        Rule::Invariant,
        Rule::LToR,
        Rule::LStep,
        Rule::RDelay,
        Rule::RFinal,
        Rule::LCycle,
        Rule::LGuard,
        Rule::LInvariant,
        Rule::RInvariant,
        Rule::WWait,
        Rule::WCommit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::Final => "Final",
            Rule::Step => "Step",
            Rule::Delay => "Delay",
            Rule::Cycle => "Cycle",
            Rule::Guard => "Guard",
            Rule::Invariant => "Invariant",
            Rule::LToR => "L-to-R",
            Rule::LStep => "L-Step",
            Rule::RDelay => "R-Delay",
            Rule::RFinal => "R-Final",
            Rule::LCycle => "L-Cycle",
            Rule::LGuard => "L-Guard",
            Rule::LInvariant => "L-Invariant",
            Rule::RInvariant => "R-Invariant",
            Rule::WWait => "W-Wait",
            Rule::WCommit => "W-Commit",
        }
    }

    pub fn choice(self) -> ChoiceKind {
        match self {
            Rule::Final
            | Rule::Step
            | Rule::Delay
            | Rule::LStep
            | Rule::RDelay
            | Rule::RFinal
            | Rule::WWait => ChoiceKind::Match,
            Rule::Invariant | Rule::LInvariant | Rule::RInvariant => ChoiceKind::Invariant,
            _ => ChoiceKind::None,
        }
    }

    /// The rules of each system.
    pub fn of_system(system: SimKind) -> &'static [Rule] {
        use Rule::*;
        match system {
            SimKind::Direct => &[Final, Step, Cycle, Guard, Invariant],
            SimKind::Rb => &[Final, Delay, Cycle, Guard, Invariant],
            SimKind::Delay => &[LToR, LStep, RDelay, RFinal, LCycle, LGuard, LInvariant, RInvariant],
            SimKind::TwoDelay => &[
                WWait, WCommit, LToR, LStep, RDelay, RFinal, LCycle, LGuard, LInvariant, RInvariant,
            ],
            SimKind::RDelay => &[
                WWait, WCommit, LToR, LStep, RDelay, RFinal, LCycle, LGuard, LInvariant,
            ],
            SimKind::Standard | SimKind::Wrong => &[],
        }
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("unknown rule `{0}`")]
pub struct UnknownRule(pub String);

impl FromStr for Rule {
    type Err = UnknownRule;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Rule::ALL
            .iter()
            .copied()
            .find(|r| r.name() == s)
            .ok_or_else(|| UnknownRule(s.to_string()))
    }
}

impl TryFrom<String> for Rule {
    type Error = UnknownRule;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<Rule> for String {
    fn from(r: Rule) -> String {
        r.name().to_string()
    }
}

/// Machine-readable error classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum ErrorCode {
    UnsupportedSystem,
    AlphabetMismatch,
    UnknownState,
    UnknownEvent,
    RuleNotInSystem,
    WrongPhase,
    ContextGuarded,
    ContextReleased,
    SideCondition,
    UnexpectedChoice,
    IncompleteMatch,
    InvalidMatch,
    InvariantMissingGoal,
    InvariantOutsideAccepting,
    NotInContext,
    ChildCount,
}

impl ErrorCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCode::UnsupportedSystem => "UNSUPPORTED_SYSTEM",
            ErrorCode::AlphabetMismatch => "ALPHABET_MISMATCH",
            ErrorCode::UnknownState => "UNKNOWN_STATE",
            ErrorCode::UnknownEvent => "UNKNOWN_EVENT",
            ErrorCode::RuleNotInSystem => "RULE_NOT_IN_SYSTEM",
            ErrorCode::WrongPhase => "WRONG_PHASE",
            ErrorCode::ContextGuarded => "CONTEXT_GUARDED",
            ErrorCode::ContextReleased => "CONTEXT_RELEASED",
            ErrorCode::SideCondition => "SIDE_CONDITION",
            ErrorCode::UnexpectedChoice => "UNEXPECTED_CHOICE",
            ErrorCode::IncompleteMatch => "INCOMPLETE_MATCH",
            ErrorCode::InvalidMatch => "INVALID_MATCH",
            ErrorCode::InvariantMissingGoal => "INVARIANT_MISSING_GOAL",
            ErrorCode::InvariantOutsideAccepting => "INVARIANT_OUTSIDE_ACCEPTING",
            ErrorCode::NotInContext => "NOT_IN_CONTEXT",
            ErrorCode::ChildCount => "CHILD_COUNT",
        }
    }
}

impl fmt::Display for ErrorCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{message}")]
pub struct KernelError {
    pub code: ErrorCode,
    pub message: String,
}

impl KernelError {
    fn new(code: ErrorCode, message: impl Into<String>) -> Self {
        Self {
            code,
            message: message.into(),
        }
    }
}

/// One open proof obligation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Goal {
    pub system: SimKind,
    pub phase: Phase,
    pub guard: Guard,
    pub left: StateId,
    pub right: StateId,
    pub context: PairRel,
}

/// `event: left -> right`: the right successor chosen for one left move.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Match {
    pub event: String,
    pub left: String,
    pub right: String,
}

impl Match {
    pub fn new(event: impl Into<String>, left: impl Into<String>, right: impl Into<String>) -> Self {
        Self {
            event: event.into(),
            left: left.into(),
            right: right.into(),
        }
    }
}

/// A node of a proof tree: a rule, its choices and its subproofs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleApp {
    pub rule: Rule,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub matches: Vec<Match>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant: Vec<(String, String)>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub children: Vec<RuleApp>,
}

impl RuleApp {
    pub fn new(rule: Rule) -> Self {
        Self {
            rule,
            matches: Vec::new(),
            invariant: Vec::new(),
            children: Vec::new(),
        }
    }

    pub fn with_matches(mut self, matches: Vec<Match>) -> Self {
        self.matches = matches;
        self
    }

    pub fn with_invariant(mut self, pairs: Vec<(String, String)>) -> Self {
        self.invariant = pairs;
        self
    }

    pub fn with_children(mut self, children: Vec<RuleApp>) -> Self {
        self.children = children;
        self
    }

    /// Number of rule applications in the tree.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(RuleApp::size).sum::<usize>()
    }

    /// Sorts choice data into canonical order, recursively.
    pub fn canonicalize(&mut self) {
        self.matches.sort_by(|x, y| (&x.event, &x.left).cmp(&(&y.event, &y.left)));
        self.invariant.sort();
        self.invariant.dedup();
        for c in &mut self.children {
            c.canonicalize();
        }
    }

    /// The node at `path` (child indices from the root).
    pub fn at(&self, path: &[usize]) -> Option<&RuleApp> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children.get(i)?.at(rest),
        }
    }

    pub fn at_mut(&mut self, path: &[usize]) -> Option<&mut RuleApp> {
        match path.split_first() {
            None => Some(self),
            Some((&i, rest)) => self.children.get_mut(i)?.at_mut(rest),
        }
    }

    /// Paths of every node, in pre-order.
    pub fn paths(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new()];
        for (i, c) in self.children.iter().enumerate() {
            for mut p in c.paths() {
                p.insert(0, i);
                out.push(p);
            }
        }
        out
    }
}

/// A complete derivation for one root pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProofScript {
    pub system: SimKind,
    pub left: String,
    pub right: String,
    pub root: (String, String),
    pub tree: RuleApp,
}

/// A rule that may be applied to a goal, with the choices it needs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RuleSchema {
    pub rule: Rule,
    pub choice: ChoiceKind,
    /// For stepping rules: one slot per left move.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub slots: Vec<MatchSlot>,
    /// For R-Invariant: the chosen pairs must have accepting left states.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub accepting_left_only: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchSlot {
    pub event: String,
    pub left: String,
    /// Right successors under the same event.
    pub options: Vec<String>,
}

/// Why a script was not accepted.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("at {} ({goal}): {error}", path_string(.path))]
pub struct Rejection {
    /// Child indices from the root to the failing node.
    pub path: Vec<usize>,
    pub goal: String,
    pub error: KernelError,
}

fn path_string(path: &[usize]) -> String {
    if path.is_empty() {
        "root".to_string()
    } else {
        let parts: Vec<String> = path.iter().map(|i| i.to_string()).collect();
        format!("root/{}", parts.join("/"))
    }
}

/// The rule system of one simulation kind over a fixed pair of automata.
#[derive(Debug, Clone)]
pub struct Kernel {
    system: SimKind,
    a: Automaton,
    b: Automaton,
    universe: PairUniverse,
}

impl Kernel {
    pub fn new(system: SimKind, a: &Automaton, b: &Automaton) -> Result<Self, KernelError> {
        if Rule::of_system(system).is_empty() {
            return Err(KernelError::new(
                ErrorCode::UnsupportedSystem,
                format!("no rule system for `{system}`"),
            ));
        }
        let universe = PairUniverse::of(a, b)
            .map_err(|e| KernelError::new(ErrorCode::AlphabetMismatch, e.to_string()))?;
        Ok(Self {
            system,
            a: a.clone(),
            b: b.clone(),
            universe,
        })
    }

    pub fn system(&self) -> SimKind {
        self.system
    }

    pub fn left(&self) -> &Automaton {
        &self.a
    }

    pub fn right(&self) -> &Automaton {
        &self.b
    }

    pub fn initial_goal(&self, s1: StateId, s2: StateId) -> Goal {
        let phase = match self.system {
            SimKind::TwoDelay | SimKind::RDelay => Phase::W,
            _ => Phase::L,
        };
        Goal {
            system: self.system,
            phase,
            guard: Guard::Guarded,
            left: s1,
            right: s2,
            context: PairRel::empty(self.universe),
        }
    }

    pub fn initial_goal_named(&self, s1: &str, s2: &str) -> Result<Goal, KernelError> {
        Ok(self.initial_goal(self.left_state(s1)?, self.right_state(s2)?))
    }

    fn left_state(&self, name: &str) -> Result<StateId, KernelError> {
        self.a.state_id(name).ok_or_else(|| {
            KernelError::new(
                ErrorCode::UnknownState,
                format!("unknown state `{name}` in `{}`", self.a.name()),
            )
        })
    }

    fn right_state(&self, name: &str) -> Result<StateId, KernelError> {
        self.b.state_id(name).ok_or_else(|| {
            KernelError::new(
                ErrorCode::UnknownState,
                format!("unknown state `{name}` in `{}`", self.b.name()),
            )
        })
    }

    /// `⊢[H] s1 ≼_P s2`, with `[[H]]` marking a released context.
    pub fn describe(&self, g: &Goal) -> String {
        let h = g.context.display_with(&self.a, &self.b);
        let ctx = match g.guard {
            Guard::Guarded => format!("[{h}]"),
            Guard::Released => format!("[[{h}]]"),
        };
        format!(
            "⊢{ctx} {} ≼{} {}",
            self.a.state_name(g.left),
            g.phase,
            self.b.state_name(g.right)
        )
    }

    // Left moves of `s1` ordered by event name, then successor name.
    fn left_moves(&self, s1: StateId) -> Vec<(EventId, StateId)> {
        let mut moves: Vec<_> = self.a.out_edges(s1).collect();
        moves.sort_by(|x, y| {
            (x.0, self.a.state_name(x.1)).cmp(&(y.0, self.a.state_name(y.1)))
        });
        moves
    }

    fn requirement(&self, rule: Rule, g: &Goal) -> Result<(), KernelError> {
        if !Rule::of_system(self.system).contains(&rule) {
            return Err(KernelError::new(
                ErrorCode::RuleNotInSystem,
                format!("rule {rule} is not part of the {} system", self.system),
            ));
        }
        let phase = match rule {
            Rule::RDelay | Rule::RFinal | Rule::RInvariant => Phase::R,
            Rule::WWait | Rule::WCommit => Phase::W,
            _ => Phase::L,
        };
        if g.phase != phase {
            return Err(KernelError::new(
                ErrorCode::WrongPhase,
                format!("rule {rule} needs a {phase} goal, found a {} goal", g.phase),
            ));
        }
        if phase == Phase::L {
            let released = matches!(rule, Rule::Cycle | Rule::Guard | Rule::LCycle | Rule::LGuard);
            match (released, g.guard) {
                (true, Guard::Guarded) => {
                    return Err(KernelError::new(
                        ErrorCode::ContextGuarded,
                        format!("rule {rule} needs a released context; the context is guarded"),
                    ))
                }
                (false, Guard::Released) => {
                    return Err(KernelError::new(
                        ErrorCode::ContextReleased,
                        format!("rule {rule} needs a guarded goal; apply a Guard rule first"),
                    ))
                }
                _ => {}
            }
        }
        match rule {
            Rule::Step | Rule::LStep if self.a.is_accepting(g.left) => Err(KernelError::new(
                ErrorCode::SideCondition,
                format!(
                    "side condition s1 ∉ 𝓕1 fails: {} is accepting",
                    self.a.state_name(g.left)
                ),
            )),
            Rule::Final | Rule::RFinal if !self.b.is_accepting(g.right) => Err(KernelError::new(
                ErrorCode::SideCondition,
                format!(
                    "side condition s2 ∈ 𝓕2 fails: {} is not accepting",
                    self.b.state_name(g.right)
                ),
            )),
            _ => Ok(()),
        }
    }

    /// Rules whose phase, guard and acceptance side conditions hold.
    pub fn applicable_rules(&self, g: &Goal) -> Vec<RuleSchema> {
        let mut out = Vec::new();
        for &rule in Rule::of_system(self.system) {
            if self.requirement(rule, g).is_err() {
                continue;
            }
            match rule {
                Rule::Cycle | Rule::LCycle if !g.context.contains(g.left, g.right) => continue,
                Rule::RInvariant if !self.a.is_accepting(g.left) => continue,
                _ => {}
            }
            let slots = if rule.choice() == ChoiceKind::Match {
                self.left_moves(g.left)
                    .into_iter()
                    .map(|(e, t1)| MatchSlot {
                        event: self.a.event_name(e).to_string(),
                        left: self.a.state_name(t1).to_string(),
                        options: self
                            .b
                            .succ(g.right, e)
                            .iter()
                            .map(|&t| self.b.state_name(t).to_string())
                            .collect(),
                    })
                    .collect()
            } else {
                Vec::new()
            };
            out.push(RuleSchema {
                rule,
                choice: rule.choice(),
                slots,
                accepting_left_only: rule == Rule::RInvariant,
            });
        }
        out
    }

    // Right successor chosen for each left move, in left_moves order.
    fn resolve_matches(&self, g: &Goal, app: &RuleApp) -> Result<Vec<(StateId, StateId)>, KernelError> {
        let moves = self.left_moves(g.left);
        let mut chosen: Vec<Option<StateId>> = vec![None; moves.len()];
        for m in &app.matches {
            let e = self.a.event_id(&m.event).ok_or_else(|| {
                KernelError::new(ErrorCode::UnknownEvent, format!("unknown event `{}`", m.event))
            })?;
            let t1 = self.left_state(&m.left)?;
            let t2 = self.right_state(&m.right)?;
            let slot = moves.iter().position(|&mv| mv == (e, t1)).ok_or_else(|| {
                KernelError::new(
                    ErrorCode::InvalidMatch,
                    format!(
                        "{} has no {}-move to {}",
                        self.a.state_name(g.left),
                        m.event,
                        m.left
                    ),
                )
            })?;
            if chosen[slot].is_some() {
                return Err(KernelError::new(
                    ErrorCode::InvalidMatch,
                    format!("move {}:{} matched twice", m.event, m.left),
                ));
            }
            if !self.b.has_transition(g.right, e, t2) {
                return Err(KernelError::new(
                    ErrorCode::InvalidMatch,
                    format!(
                        "{} -{}-> {} is not a transition of `{}`",
                        self.b.state_name(g.right),
                        m.event,
                        m.right,
                        self.b.name()
                    ),
                ));
            }
            chosen[slot] = Some(t2);
        }
        moves
            .iter()
            .zip(chosen)
            .map(|(&(e, t1), c)| {
                c.map(|t2| (t1, t2)).ok_or_else(|| {
                    KernelError::new(
                        ErrorCode::IncompleteMatch,
                        format!(
                            "no match for move {}:{}",
                            self.a.event_name(e),
                            self.a.state_name(t1)
                        ),
                    )
                })
            })
            .collect()
    }

    fn resolve_invariant(&self, app: &RuleApp) -> Result<Vec<(StateId, StateId)>, KernelError> {
        let mut pairs: Vec<(&str, &str, StateId, StateId)> = Vec::new();
        for (x, y) in &app.invariant {
            pairs.push((x, y, self.left_state(x)?, self.right_state(y)?));
        }
        pairs.sort_by(|p, q| (p.0, p.1).cmp(&(q.0, q.1)));
        pairs.dedup_by(|p, q| p.2 == q.2 && p.3 == q.3);
        Ok(pairs.into_iter().map(|p| (p.2, p.3)).collect())
    }

    fn child(&self, g: &Goal, phase: Phase, guard: Guard, pair: (StateId, StateId), context: &PairRel) -> Goal {
        Goal {
            system: g.system,
            phase,
            guard,
            left: pair.0,
            right: pair.1,
            context: context.clone(),
        }
    }

    /// Applies the head of `app` (its children are ignored) to `g`.
    pub fn apply_rule(&self, g: &Goal, app: &RuleApp) -> Result<Vec<Goal>, KernelError> {
        let rule = app.rule;
        self.requirement(rule, g)?;
        if rule.choice() != ChoiceKind::Match && !app.matches.is_empty() {
            return Err(KernelError::new(
                ErrorCode::UnexpectedChoice,
                format!("rule {rule} takes no successor matches"),
            ));
        }
        if rule.choice() != ChoiceKind::Invariant && !app.invariant.is_empty() {
            return Err(KernelError::new(
                ErrorCode::UnexpectedChoice,
                format!("rule {rule} takes no invariant set"),
            ));
        }
        let pair = (g.left, g.right);
        let stepped = |phase: Phase, guard: Guard| -> Result<Vec<Goal>, KernelError> {
            Ok(self
                .resolve_matches(g, app)?
                .into_iter()
                .map(|p| self.child(g, phase, guard, p, &g.context))
                .collect())
        };
        match rule {
            Rule::Final | Rule::Step | Rule::LStep => stepped(Phase::L, Guard::Released),
            Rule::Delay => stepped(Phase::L, Guard::Guarded),
            Rule::RDelay => stepped(Phase::R, Guard::Guarded),
            Rule::WWait => stepped(Phase::W, Guard::Guarded),
            Rule::RFinal if self.system == SimKind::RDelay => stepped(Phase::W, Guard::Guarded),
            Rule::RFinal => stepped(Phase::L, Guard::Released),
            Rule::Cycle | Rule::LCycle => {
                if g.context.contains(g.left, g.right) {
                    Ok(Vec::new())
                } else {
                    Err(KernelError::new(
                        ErrorCode::NotInContext,
                        format!(
                            "({},{}) is not in the context",
                            self.a.state_name(g.left),
                            self.b.state_name(g.right)
                        ),
                    ))
                }
            }
            Rule::Guard | Rule::LGuard => Ok(vec![self.child(g, Phase::L, Guard::Guarded, pair, &g.context)]),
            Rule::LToR => Ok(vec![self.child(g, Phase::R, Guard::Guarded, pair, &g.context)]),
            Rule::WCommit => Ok(vec![self.child(g, Phase::L, Guard::Released, pair, &g.context)]),
            Rule::Invariant | Rule::LInvariant | Rule::RInvariant => {
                let set = self.resolve_invariant(app)?;
                if rule == Rule::RInvariant {
                    if let Some(&(x, y)) = set.iter().find(|(x, _)| !self.a.is_accepting(*x)) {
                        return Err(KernelError::new(
                            ErrorCode::InvariantOutsideAccepting,
                            format!(
                                "H' ⊄ 𝓕1 × 𝓢2: ({},{}) has a non-accepting left state",
                                self.a.state_name(x),
                                self.b.state_name(y)
                            ),
                        ));
                    }
                }
                if !set.contains(&pair) {
                    return Err(KernelError::new(
                        ErrorCode::InvariantMissingGoal,
                        format!(
                            "the invariant set must contain the goal pair ({},{})",
                            self.a.state_name(g.left),
                            self.b.state_name(g.right)
                        ),
                    ));
                }
                let mut ctx = g.context.clone();
                for &(x, y) in &set {
                    ctx.insert(x, y);
                }
                Ok(set
                    .into_iter()
                    .map(|p| self.child(g, g.phase, Guard::Guarded, p, &ctx))
                    .collect())
            }
        }
    }

    /// Checks that `tree` closes `goal`.
    pub fn check_tree(&self, goal: &Goal, tree: &RuleApp) -> Result<(), Rejection> {
        let mut path = Vec::new();
        self.check_node(goal, tree, &mut path)
    }

    fn check_node(&self, goal: &Goal, node: &RuleApp, path: &mut Vec<usize>) -> Result<(), Rejection> {
        let reject = |error: KernelError, path: &[usize]| Rejection {
            path: path.to_vec(),
            goal: self.describe(goal),
            error,
        };
        let children = self.apply_rule(goal, node).map_err(|e| reject(e, path))?;
        if children.len() != node.children.len() {
            return Err(reject(
                KernelError::new(
                    ErrorCode::ChildCount,
                    format!(
                        "rule {} yields {} subgoal(s) but the script gives {} subproof(s)",
                        node.rule,
                        children.len(),
                        node.children.len()
                    ),
                ),
                path,
            ));
        }
        for (i, (g, sub)) in children.iter().zip(&node.children).enumerate() {
            path.push(i);
            self.check_node(g, sub, path)?;
            path.pop();
        }
        Ok(())
    }

    pub fn check_script(&self, p: &ProofScript) -> Result<(), Rejection> {
        let root = self.initial_goal_named(&p.root.0, &p.root.1).map_err(|error| Rejection {
            path: Vec::new(),
            goal: format!("root ({}, {})", p.root.0, p.root.1),
            error,
        })?;
        if p.system != self.system {
            return Err(Rejection {
                path: Vec::new(),
                goal: self.describe(&root),
                error: KernelError::new(
                    ErrorCode::UnsupportedSystem,
                    format!("script is for {}, kernel is for {}", p.system, self.system),
                ),
            });
        }
        self.check_tree(&root, &p.tree)
    }
}

/// Checks a script against the two automata it names.
pub fn check_script(p: &ProofScript, a: &Automaton, b: &Automaton) -> Result<(), Rejection> {
    let kernel = Kernel::new(p.system, a, b).map_err(|error| Rejection {
        path: Vec::new(),
        goal: format!("root ({}, {})", p.root.0, p.root.1),
        error,
    })?;
    kernel.check_script(p)
}

/// Searches for a derivation of `(s1, s2)`; `Ok(None)` when the pair is not
/// related or the proof would exceed `budget` rule applications.
pub fn search_proof(
    system: SimKind,
    a: &Automaton,
    b: &Automaton,
    s1: StateId,
    s2: StateId,
    budget: usize,
) -> Result<Option<ProofScript>, KernelError> {
    let kernel = Kernel::new(system, a, b)?;
    let cx = SimContext::new(a, b).map_err(|e| KernelError::new(ErrorCode::AlphabetMismatch, e.to_string()))?;
    let search = Search::new(system, cx);
    let tree = match search.root(s1, s2, budget) {
        Some(t) => t,
        None => return Ok(None),
    };
    let script = ProofScript {
        system,
        left: a.name().to_string(),
        right: b.name().to_string(),
        root: (a.state_name(s1).to_string(), b.state_name(s2).to_string()),
        tree,
    };
    debug_assert!(kernel.check_script(&script).is_ok());
    Ok(Some(script))
}

// Proof search. The committed relation `l` is computed first; every proof
// seeds an invariant with the pairs its own derivation steps into, so every
// released leaf closes by Cycle. Inductive phases walk the ranks of the
// corresponding least fixpoint downwards, which guarantees termination.
struct Search<'a> {
    system: SimKind,
    cx: SimContext<'a>,
    l: PairRel,
    reach: Option<RankedLfp>,
    wait: Option<RankedLfp>,
}

// Budget tracker: `None` once exceeded.
struct Meter {
    left: usize,
}

impl Meter {
    fn take(&mut self) -> Option<()> {
        self.left = self.left.checked_sub(1)?;
        Some(())
    }
}

impl<'a> Search<'a> {
    fn new(system: SimKind, cx: SimContext<'a>) -> Self {
        let l = cx.committed(system).expect("kernel systems have outer functors");
        let reach = match system {
            SimKind::Rb | SimKind::Delay | SimKind::TwoDelay => Some(cx.reach_ranked(&l)),
            SimKind::RDelay => Some(cx.rdelay_reach_ranked(&l)),
            _ => None,
        };
        let wait = match system {
            SimKind::TwoDelay | SimKind::RDelay => Some(cx.wait_ranked(&l)),
            _ => None,
        };
        Self {
            system,
            cx,
            l,
            reach,
            wait,
        }
    }

    fn a(&self) -> &'a Automaton {
        self.cx.left()
    }

    fn b(&self) -> &'a Automaton {
        self.cx.right()
    }

    fn name_pair(&self, p: (StateId, StateId)) -> (String, String) {
        (
            self.a().state_name(p.0).to_string(),
            self.b().state_name(p.1).to_string(),
        )
    }

    // Matches for every left move into pairs accepted by `ok`, preferring
    // the smallest `score`. Ordered like the kernel's subgoals.
    fn choose(
        &self,
        p: (StateId, StateId),
        ok: impl Fn(StateId, StateId) -> Option<usize>,
    ) -> Option<Vec<(Match, (StateId, StateId))>> {
        let a = self.a();
        let b = self.b();
        let mut moves: Vec<_> = a.out_edges(p.0).collect();
        moves.sort_by(|x, y| (x.0, a.state_name(x.1)).cmp(&(y.0, a.state_name(y.1))));
        moves
            .into_iter()
            .map(|(e, t1)| {
                let t2 = b
                    .succ(p.1, e)
                    .iter()
                    .filter_map(|&t2| ok(t1, t2).map(|score| (score, t2)))
                    .min()?
                    .1;
                Some((
                    Match::new(a.event_name(e), a.state_name(t1), b.state_name(t2)),
                    (t1, t2),
                ))
            })
            .collect()
    }

    fn into_l(&self) -> impl Fn(StateId, StateId) -> Option<usize> + '_ {
        |x, y| self.l.contains(x, y).then_some(0)
    }

    fn below(rank: &RankedLfp, k: usize) -> impl Fn(StateId, StateId) -> Option<usize> + '_ {
        move |x, y| rank.rank(x, y).filter(|&r| r < k)
    }

    fn stepping(
        &self,
        rule: Rule,
        steps: Vec<(Match, (StateId, StateId))>,
        meter: &mut Meter,
        mut sub: impl FnMut(&Self, (StateId, StateId), &mut Meter) -> Option<RuleApp>,
    ) -> Option<RuleApp> {
        meter.take()?;
        let mut matches = Vec::new();
        let mut children = Vec::new();
        for (m, t) in steps {
            matches.push(m);
            children.push(sub(self, t, meter)?);
        }
        Some(RuleApp::new(rule).with_matches(matches).with_children(children))
    }

    fn leaf(&self, rule: Rule, meter: &mut Meter) -> Option<RuleApp> {
        meter.take()?;
        Some(RuleApp::new(rule))
    }

    fn wrap(&self, rule: Rule, child: RuleApp, meter: &mut Meter) -> Option<RuleApp> {
        meter.take()?;
        Some(RuleApp::new(rule).with_children(vec![child]))
    }

    // A released L leaf at `t`: recorded as a target, closed by Cycle.
    fn released(&self, t: (StateId, StateId), targets: &mut BTreeSet<(StateId, StateId)>, meter: &mut Meter) -> Option<RuleApp> {
        targets.insert(t);
        let rule = match self.system {
            SimKind::Direct | SimKind::Rb => Rule::Cycle,
            _ => Rule::LCycle,
        };
        self.leaf(rule, meter)
    }

    // Proof of a guarded L goal at `p ∈ l` whose released leaves are
    // collected in `targets`.
    fn l_body(&self, p: (StateId, StateId), targets: &mut BTreeSet<(StateId, StateId)>, meter: &mut Meter) -> Option<RuleApp> {
        let a = self.a();
        match self.system {
            SimKind::Direct => {
                let rule = if a.is_accepting(p.0) { Rule::Final } else { Rule::Step };
                let steps = self.choose(p, self.into_l())?;
                self.stepping(rule, steps, meter, |s, t, m| s.released(t, targets, m))
            }
            SimKind::Rb => self.rb_body(p, targets, meter),
            _ => {
                if !a.is_accepting(p.0) && self.cx.steps_into(p.0, p.1, &self.l) {
                    let steps = self.choose(p, self.into_l())?;
                    self.stepping(Rule::LStep, steps, meter, |s, t, m| s.released(t, targets, m))
                } else {
                    let r = self.r_body(p, targets, meter)?;
                    self.wrap(Rule::LToR, r, meter)
                }
            }
        }
    }

    fn rb_body(&self, p: (StateId, StateId), targets: &mut BTreeSet<(StateId, StateId)>, meter: &mut Meter) -> Option<RuleApp> {
        let rank = self.reach.as_ref()?;
        let k = rank.rank(p.0, p.1)?;
        if self.b().is_accepting(p.1) && self.cx.steps_into(p.0, p.1, &self.l) {
            let steps = self.choose(p, self.into_l())?;
            self.stepping(Rule::Final, steps, meter, |s, t, m| s.released(t, targets, m))
        } else {
            let steps = self.choose(p, Self::below(rank, k))?;
            self.stepping(Rule::Delay, steps, meter, |s, t, m| s.rb_body(t, targets, m))
        }
    }

    // Proof of an R goal at `p ∈ reach(l)`.
    fn r_body(&self, p: (StateId, StateId), targets: &mut BTreeSet<(StateId, StateId)>, meter: &mut Meter) -> Option<RuleApp> {
        let rank = self.reach.as_ref()?;
        let k = rank.rank(p.0, p.1)?;
        let b = self.b();
        if self.system == SimKind::RDelay {
            let wait = self.wait.as_ref()?;
            if b.is_accepting(p.1) && self.cx.steps_into(p.0, p.1, &wait.value) {
                let steps = self.choose(p, |x, y| wait.rank(x, y))?;
                return self.stepping(Rule::RFinal, steps, meter, |s, t, m| s.w_body(t, targets, m));
            }
        } else if b.is_accepting(p.1) && self.cx.steps_into(p.0, p.1, &self.l) {
            let steps = self.choose(p, self.into_l())?;
            return self.stepping(Rule::RFinal, steps, meter, |s, t, m| s.released(t, targets, m));
        }
        let steps = self.choose(p, Self::below(rank, k))?;
        self.stepping(Rule::RDelay, steps, meter, |s, t, m| s.r_body(t, targets, m))
    }

    // Proof of a W goal at `p ∈ wait(l)` under a context; commits are leaves
    // closed by L-Cycle.
    fn w_body(&self, p: (StateId, StateId), targets: &mut BTreeSet<(StateId, StateId)>, meter: &mut Meter) -> Option<RuleApp> {
        if self.l.contains(p.0, p.1) {
            let c = self.released(p, targets, meter)?;
            return self.wrap(Rule::WCommit, c, meter);
        }
        let wait = self.wait.as_ref()?;
        let k = wait.rank(p.0, p.1)?;
        let steps = self.choose(p, Self::below(wait, k))?;
        self.stepping(Rule::WWait, steps, meter, |s, t, m| s.w_body(t, targets, m))
    }

    // Smallest invariant containing `p` that is closed under the targets of
    // `l_body`.
    fn closure(&self, p: (StateId, StateId), meter: &mut Meter) -> Option<BTreeSet<(StateId, StateId)>> {
        let mut set = BTreeSet::from([p]);
        let mut todo = vec![p];
        while let Some(q) = todo.pop() {
            let mut targets = BTreeSet::new();
            // Dry run against a copy of the meter so the closure does not
            // consume budget twice.
            let mut dry = Meter { left: meter.left };
            self.l_body(q, &mut targets, &mut dry)?;
            for t in targets {
                if set.insert(t) {
                    todo.push(t);
                }
            }
        }
        Some(set)
    }

    // Guarded L goal at `p` with the given context: Invariant over the
    // closure, then one body per invariant pair.
    fn l_root(&self, p: (StateId, StateId), meter: &mut Meter) -> Option<RuleApp> {
        let set = self.closure(p, meter)?;
        let mut named: Vec<((String, String), (StateId, StateId))> =
            set.iter().map(|&q| (self.name_pair(q), q)).collect();
        named.sort();
        meter.take()?;
        let mut children = Vec::new();
        for (_, q) in &named {
            let mut targets = BTreeSet::new();
            children.push(self.l_body(*q, &mut targets, meter)?);
            debug_assert!(targets.is_subset(&set));
        }
        let rule = match self.system {
            SimKind::Direct | SimKind::Rb => Rule::Invariant,
            _ => Rule::LInvariant,
        };
        Some(
            RuleApp::new(rule)
                .with_invariant(named.into_iter().map(|(n, _)| n).collect())
                .with_children(children),
        )
    }

    // Root W goal with an empty context: wait down to commit points, then
    // guard and start an invariant there.
    fn w_root(&self, p: (StateId, StateId), meter: &mut Meter) -> Option<RuleApp> {
        if self.l.contains(p.0, p.1) {
            let inv = self.l_root(p, meter)?;
            let guarded = self.wrap(Rule::LGuard, inv, meter)?;
            return self.wrap(Rule::WCommit, guarded, meter);
        }
        let wait = self.wait.as_ref()?;
        let k = wait.rank(p.0, p.1)?;
        let steps = self.choose(p, Self::below(wait, k))?;
        self.stepping(Rule::WWait, steps, meter, |s, t, m| s.w_root(t, m))
    }

    fn root(&self, s1: StateId, s2: StateId, budget: usize) -> Option<RuleApp> {
        let mut meter = Meter { left: budget };
        let p = (s1, s2);
        match self.system {
            SimKind::TwoDelay | SimKind::RDelay => {
                if !self.wait.as_ref()?.value.contains(s1, s2) {
                    return None;
                }
                self.w_root(p, &mut meter)
            }
            _ => {
                if !self.l.contains(s1, s2) {
                    return None;
                }
                self.l_root(p, &mut meter)
            }
        }
    }
}
