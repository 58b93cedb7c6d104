//! Edge-labelled graphs with an accepting-cycle search.
//!
//! Shared by lasso membership, emptiness and the oracle products: all of
//! them reduce to "is there a reachable cycle through an accepting node".

use std::collections::VecDeque;

use petgraph::algo::tarjan_scc;
use petgraph::graph::{DiGraph, NodeIndex};

use crate::automata::EventId;

#[derive(Debug, Clone, Default)]
pub(crate) struct LabeledGraph {
    succ: Vec<Vec<(usize, EventId)>>,
}

impl LabeledGraph {
    pub(crate) fn with_nodes(n: usize) -> Self {
        Self {
            succ: vec![Vec::new(); n],
        }
    }

    pub(crate) fn add_edge(&mut self, from: usize, to: usize, label: EventId) {
        self.succ[from].push((to, label));
    }

    pub(crate) fn len(&self) -> usize {
        self.succ.len()
    }

    fn reachable(&self, initial: &[usize]) -> Vec<bool> {
        let mut seen = vec![false; self.len()];
        let mut queue: VecDeque<usize> = VecDeque::new();
        for &i in initial {
            if !seen[i] {
                seen[i] = true;
                queue.push_back(i);
            }
        }
        while let Some(n) = queue.pop_front() {
            for &(m, _) in &self.succ[n] {
                if !seen[m] {
                    seen[m] = true;
                    queue.push_back(m);
                }
            }
        }
        seen
    }

    /// Shortest labelled path from any of `sources` to `target`, restricted
    /// to nodes accepted by `allowed`. Returns the label sequence.
    fn path(
        &self,
        sources: &[usize],
        target: usize,
        allowed: impl Fn(usize) -> bool,
    ) -> Option<Vec<EventId>> {
        let mut parent: Vec<Option<(usize, EventId)>> = vec![None; self.len()];
        let mut seen = vec![false; self.len()];
        let mut queue = VecDeque::new();
        for &s in sources {
            if allowed(s) && !seen[s] {
                seen[s] = true;
                queue.push_back(s);
            }
        }
        while let Some(n) = queue.pop_front() {
            if n == target {
                let mut labels = Vec::new();
                let mut cur = n;
                while let Some((p, l)) = parent[cur] {
                    labels.push(l);
                    cur = p;
                }
                labels.reverse();
                return Some(labels);
            }
            for &(m, l) in &self.succ[n] {
                if allowed(m) && !seen[m] {
                    seen[m] = true;
                    parent[m] = Some((n, l));
                    queue.push_back(m);
                }
            }
        }
        None
    }

    /// Finds a reachable cycle through an accepting node and returns it as a
    /// (stem, loop) pair of label sequences; the loop is nonempty.
    pub(crate) fn accepting_lasso(
        &self,
        initial: &[usize],
        accepting: impl Fn(usize) -> bool,
    ) -> Option<(Vec<EventId>, Vec<EventId>)> {
        let reach = self.reachable(initial);
        let mut g: DiGraph<(), ()> = DiGraph::with_capacity(self.len(), 0);
        for _ in 0..self.len() {
            g.add_node(());
        }
        for (n, edges) in self.succ.iter().enumerate() {
            if !reach[n] {
                continue;
            }
            for &(m, _) in edges {
                g.add_edge(NodeIndex::new(n), NodeIndex::new(m), ());
            }
        }
        let mut component = vec![usize::MAX; self.len()];
        let sccs = tarjan_scc(&g);
        for (c, scc) in sccs.iter().enumerate() {
            for n in scc {
                component[n.index()] = c;
            }
        }
        let mut best: Option<usize> = None;
        for n in 0..self.len() {
            if !reach[n] || !accepting(n) {
                continue;
            }
            let c = component[n];
            let nontrivial =
                sccs[c].len() > 1 || self.succ[n].iter().any(|&(m, _)| m == n);
            if nontrivial {
                best = Some(n);
                break;
            }
        }
        let hub = best?;
        let c = component[hub];
        let stem = self.path(initial, hub, |_| true)?;
        // Close the cycle: one step out of the hub, then back inside the SCC.
        let mut cycle: Option<Vec<EventId>> = None;
        for &(m, l) in &self.succ[hub] {
            if component[m] != c {
                continue;
            }
            if let Some(rest) = self.path(&[m], hub, |x| component[x] == c) {
                let mut labels = vec![l];
                labels.extend(rest);
                if cycle.as_ref().is_none_or(|best| labels.len() < best.len()) {
                    cycle = Some(labels);
                }
            }
        }
        Some((stem, cycle?))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_loop_is_a_cycle() {
        let mut g = LabeledGraph::with_nodes(2);
        g.add_edge(0, 1, EventId(0));
        g.add_edge(1, 1, EventId(1));
        let (stem, lp) = g.accepting_lasso(&[0], |n| n == 1).unwrap();
        assert_eq!(stem, vec![EventId(0)]);
        assert_eq!(lp, vec![EventId(1)]);
    }

    #[test]
    fn acyclic_graph_has_no_lasso() {
        let mut g = LabeledGraph::with_nodes(3);
        g.add_edge(0, 1, EventId(0));
        g.add_edge(1, 2, EventId(0));
        assert!(g.accepting_lasso(&[0], |_| true).is_none());
    }

    #[test]
    fn unreachable_cycle_is_ignored() {
        let mut g = LabeledGraph::with_nodes(3);
        g.add_edge(0, 1, EventId(0));
        g.add_edge(2, 2, EventId(0));
        assert!(g.accepting_lasso(&[0], |_| true).is_none());
    }
}
