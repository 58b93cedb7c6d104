//! Proof sessions: a goal forest grown by kernel rule applications.

use std::collections::BTreeMap;

use fairsim::proofkernel::{
    Guard, Kernel, KernelError, Match, Phase, ProofScript, Rule, RuleApp, RuleSchema,
};
use fairsim::proofkernel::Goal;
use fairsim::{Automaton, SimKind};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type GoalId = u64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SessionError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error("goal {0} does not exist")]
    UnknownGoal(GoalId),
    #[error("goal {0} is stale: it was closed or undone")]
    StaleGoal(GoalId),
    #[error("nothing to undo")]
    NothingToUndo,
    #[error("the proof still has {0} open goal(s)")]
    Incomplete(usize),
}

/// The head of a rule application as sent by a client.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ApplyRequest {
    pub rule: String,
    #[serde(default, rename = "match", skip_serializing_if = "Vec::is_empty")]
    pub matches: Vec<Match>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub invariant_set: Vec<(String, String)>,
}

impl ApplyRequest {
    pub fn of(app: &RuleApp) -> Self {
        Self {
            rule: app.rule.name().to_string(),
            matches: app.matches.clone(),
            invariant_set: app.invariant.clone(),
        }
    }

    fn to_app(&self) -> Result<RuleApp, KernelError> {
        let rule: Rule = self.rule.parse().map_err(|e: fairsim::proofkernel::UnknownRule| {
            KernelError {
                code: fairsim::proofkernel::ErrorCode::RuleNotInSystem,
                message: e.to_string(),
            }
        })?;
        let mut app = RuleApp::new(rule)
            .with_matches(self.matches.clone())
            .with_invariant(self.invariant_set.clone());
        app.canonicalize();
        Ok(app)
    }
}

#[derive(Debug, Clone)]
struct Node {
    goal: Goal,
    parent: Option<GoalId>,
    path: Vec<usize>,
    applied: Option<RuleApp>,
    children: Vec<GoalId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub goal: GoalId,
    pub path: Vec<usize>,
    pub app: ApplyRequest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Open,
    Proved,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoalView {
    pub id: GoalId,
    pub parent: Option<GoalId>,
    /// Child indices from the root goal.
    pub path: Vec<usize>,
    pub phase: Phase,
    pub guard: Guard,
    pub left: String,
    pub right: String,
    pub context: Vec<(String, String)>,
    pub display: String,
    pub open: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<ApplyRequest>,
    pub children: Vec<GoalId>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SessionView {
    pub id: String,
    pub system: SimKind,
    pub left: String,
    pub right: String,
    pub root: (String, String),
    pub status: Status,
    pub open_goals: Vec<GoalId>,
    pub goals: Vec<GoalView>,
    pub history: Vec<HistoryEntry>,
}

/// One interactive derivation. Goal ids are never reused, so a client
/// holding an id from before an undo gets a conflict instead of a
/// different goal.
#[derive(Debug, Clone)]
pub struct Session {
    id: String,
    kernel: Kernel,
    root: (String, String),
    nodes: BTreeMap<GoalId, Node>,
    next_goal: GoalId,
    history: Vec<(GoalId, RuleApp)>,
}

impl Session {
    pub fn new(
        id: impl Into<String>,
        system: SimKind,
        a: &Automaton,
        b: &Automaton,
        s1: &str,
        s2: &str,
    ) -> Result<Self, KernelError> {
        let kernel = Kernel::new(system, a, b)?;
        let goal = kernel.initial_goal_named(s1, s2)?;
        let mut nodes = BTreeMap::new();
        nodes.insert(
            0,
            Node {
                goal,
                parent: None,
                path: Vec::new(),
                applied: None,
                children: Vec::new(),
            },
        );
        Ok(Self {
            id: id.into(),
            kernel,
            root: (s1.to_string(), s2.to_string()),
            nodes,
            next_goal: 1,
            history: Vec::new(),
        })
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kernel(&self) -> &Kernel {
        &self.kernel
    }

    fn open_node(&self, gid: GoalId) -> Result<&Node, SessionError> {
        match self.nodes.get(&gid) {
            Some(n) if n.applied.is_none() => Ok(n),
            Some(_) => Err(SessionError::StaleGoal(gid)),
            None if gid < self.next_goal => Err(SessionError::StaleGoal(gid)),
            None => Err(SessionError::UnknownGoal(gid)),
        }
    }

    pub fn goal(&self, gid: GoalId) -> Option<&Goal> {
        self.nodes.get(&gid).map(|n| &n.goal)
    }

    pub fn rules(&self, gid: GoalId) -> Result<Vec<RuleSchema>, SessionError> {
        let node = self.open_node(gid)?;
        Ok(self.kernel.applicable_rules(&node.goal))
    }

    /// Applies a rule to an open goal; returns the ids of the new goals.
    pub fn apply(&mut self, gid: GoalId, req: &ApplyRequest) -> Result<Vec<GoalId>, SessionError> {
        let node = self.open_node(gid)?;
        let app = req.to_app()?;
        let subgoals = self.kernel.apply_rule(&node.goal, &app)?;
        let path = node.path.clone();
        let mut ids = Vec::new();
        for (i, goal) in subgoals.into_iter().enumerate() {
            let id = self.next_goal;
            self.next_goal += 1;
            let mut p = path.clone();
            p.push(i);
            self.nodes.insert(
                id,
                Node {
                    goal,
                    parent: Some(gid),
                    path: p,
                    applied: None,
                    children: Vec::new(),
                },
            );
            ids.push(id);
        }
        let node = self.nodes.get_mut(&gid).expect("checked above");
        node.applied = Some(app.clone());
        node.children = ids.clone();
        self.history.push((gid, app));
        Ok(ids)
    }

    /// Reverts the last application.
    pub fn undo(&mut self) -> Result<(), SessionError> {
        let (gid, _) = self.history.pop().ok_or(SessionError::NothingToUndo)?;
        let node = self.nodes.get_mut(&gid).expect("history refers to live goals");
        node.applied = None;
        for c in std::mem::take(&mut node.children) {
            self.nodes.remove(&c);
        }
        Ok(())
    }

    pub fn open_goals(&self) -> Vec<GoalId> {
        self.nodes
            .iter()
            .filter(|(_, n)| n.applied.is_none())
            .map(|(&id, _)| id)
            .collect()
    }

    pub fn status(&self) -> Status {
        if self.open_goals().is_empty() {
            Status::Proved
        } else {
            Status::Open
        }
    }

    fn tree(&self, gid: GoalId) -> Option<RuleApp> {
        let node = &self.nodes[&gid];
        let mut app = node.applied.clone()?;
        app.children = node
            .children
            .iter()
            .map(|&c| self.tree(c))
            .collect::<Option<_>>()?;
        Some(app)
    }

    /// The finished derivation; only available once no goal is open.
    pub fn script(&self) -> Result<ProofScript, SessionError> {
        let open = self.open_goals().len();
        let tree = self.tree(0).ok_or(SessionError::Incomplete(open))?;
        Ok(ProofScript {
            system: self.kernel.system(),
            left: self.kernel.left().name().to_string(),
            right: self.kernel.right().name().to_string(),
            root: self.root.clone(),
            tree,
        })
    }

    pub fn goal_view(&self, gid: GoalId) -> Option<GoalView> {
        let n = self.nodes.get(&gid)?;
        let (a, b) = (self.kernel.left(), self.kernel.right());
        Some(GoalView {
            id: gid,
            parent: n.parent,
            path: n.path.clone(),
            phase: n.goal.phase,
            guard: n.goal.guard,
            left: a.state_name(n.goal.left).to_string(),
            right: b.state_name(n.goal.right).to_string(),
            context: n.goal.context.named_pairs(a, b),
            display: self.kernel.describe(&n.goal),
            open: n.applied.is_none(),
            rule: n.applied.as_ref().map(ApplyRequest::of),
            children: n.children.clone(),
        })
    }

    pub fn view(&self) -> SessionView {
        SessionView {
            id: self.id.clone(),
            system: self.kernel.system(),
            left: self.kernel.left().name().to_string(),
            right: self.kernel.right().name().to_string(),
            root: self.root.clone(),
            status: self.status(),
            open_goals: self.open_goals(),
            goals: self.nodes.keys().filter_map(|&id| self.goal_view(id)).collect(),
            history: self
                .history
                .iter()
                .map(|(gid, app)| HistoryEntry {
                    goal: *gid,
                    path: self.nodes[gid].path.clone(),
                    app: ApplyRequest::of(app),
                })
                .collect(),
        }
    }
}
