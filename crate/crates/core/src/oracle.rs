//! Exact ω-language inclusion for small automata.
//!
//! Complementation is Ramsey-based. A nonempty finite word `w` is summarised
//! by its profile: for each pair of states `(i, j)`, whether `w` can lead
//! from `i` to `j` at all (1) and whether it can do so through an accepting
//! state (2). Profiles form a finite monoid. Every infinite word lies in a
//! set `[x]·[y]^ω` with `y·y = y` and `x·y = x`, and such a set is either
//! inside the language or disjoint from it. The complement is the union of
//! the disjoint ones, recognised by guessing the split points.

use std::collections::{HashMap, HashSet, VecDeque};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::automata::{Automaton, AutomatonDef, AutomatonError, Emptiness, EventId, Lasso, StateId};

pub const DEFAULT_STATE_LIMIT: usize = 6;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("automaton `{name}` has {states} states; complementation is limited to {limit}")]
    LimitExceeded {
        name: String,
        states: usize,
        limit: usize,
    },
    #[error(transparent)]
    Automaton(#[from] AutomatonError),
    #[error("counterexample {0} failed re-validation")]
    BadWitness(Lasso),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "counterexample", rename_all = "lowercase")]
pub enum InclusionVerdict {
    Included,
    Refuted(Lasso),
}

impl InclusionVerdict {
    pub fn is_included(&self) -> bool {
        matches!(self, InclusionVerdict::Included)
    }

    pub fn counterexample(&self) -> Option<&Lasso> {
        match self {
            InclusionVerdict::Included => None,
            InclusionVerdict::Refuted(w) => Some(w),
        }
    }
}

type Profile = Vec<u8>;

struct Monoid {
    n: usize,
    profiles: Vec<Profile>,
    // mul_letter[p][e] = index of profile p·e
    mul_letter: Vec<Vec<usize>>,
    // letter[e] = index of the profile of the one-letter word e
    letter: Vec<usize>,
}

impl Monoid {
    fn build(a: &Automaton) -> Monoid {
        let n = a.num_states();
        let letter_profile = |e: EventId| -> Profile {
            let mut m = vec![0u8; n * n];
            for i in a.state_ids() {
                for &j in a.succ(i, e) {
                    let w = if a.is_accepting(i) || a.is_accepting(j) { 2 } else { 1 };
                    m[i.0 * n + j.0] = w;
                }
            }
            m
        };
        let letters: Vec<Profile> = a.event_ids().map(letter_profile).collect();
        let mut index: HashMap<Profile, usize> = HashMap::new();
        let mut profiles: Vec<Profile> = Vec::new();
        let mut queue = VecDeque::new();
        let mut intern = |p: Profile, profiles: &mut Vec<Profile>, queue: &mut VecDeque<usize>| {
            *index.entry(p.clone()).or_insert_with(|| {
                profiles.push(p);
                queue.push_back(profiles.len() - 1);
                profiles.len() - 1
            })
        };
        let letter: Vec<usize> = letters
            .iter()
            .map(|l| intern(l.clone(), &mut profiles, &mut queue))
            .collect();
        let mut mul_letter: Vec<Vec<usize>> = Vec::new();
        while let Some(p) = queue.pop_front() {
            let row: Vec<usize> = letters
                .iter()
                .map(|l| {
                    let q = compose(n, &profiles[p], l);
                    intern(q, &mut profiles, &mut queue)
                })
                .collect();
            if mul_letter.len() <= p {
                mul_letter.resize(p + 1, Vec::new());
            }
            mul_letter[p] = row;
        }
        Monoid {
            n,
            profiles,
            mul_letter,
            letter,
        }
    }

    fn mul(&self, p: usize, q: usize) -> Profile {
        compose(self.n, &self.profiles[p], &self.profiles[q])
    }
}

fn compose(n: usize, m: &[u8], k: &[u8]) -> Profile {
    let mut out = vec![0u8; n * n];
    for i in 0..n {
        for j in 0..n {
            let a = m[i * n + j];
            if a == 0 {
                continue;
            }
            for l in 0..n {
                let b = k[j * n + l];
                if b > 0 {
                    let v = a.max(b);
                    if v > out[i * n + l] {
                        out[i * n + l] = v;
                    }
                }
            }
        }
    }
    out
}

/// Complement with the default state limit.
pub fn complement(a: &Automaton) -> Result<Automaton, OracleError> {
    complement_with_limit(a, DEFAULT_STATE_LIMIT)
}

/// An automaton accepting exactly the infinite words `a` rejects.
pub fn complement_with_limit(a: &Automaton, limit: usize) -> Result<Automaton, OracleError> {
    if a.num_states() > limit {
        return Err(OracleError::LimitExceeded {
            name: a.name().to_string(),
            states: a.num_states(),
            limit,
        });
    }
    let m = Monoid::build(a);
    let n = m.n;
    let idx: HashMap<&Profile, usize> = m.profiles.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let size = m.profiles.len();
    let idempotent: Vec<bool> = (0..size).map(|y| m.mul(y, y) == m.profiles[y]).collect();
    // rejecting[x] lists every y such that (x, y) is a rejecting pair.
    let mut rejecting: Vec<Vec<usize>> = vec![Vec::new(); size];
    let mut loops = vec![false; size];
    for y in (0..size).filter(|&y| idempotent[y]) {
        let py = &m.profiles[y];
        for (x, px) in m.profiles.iter().enumerate() {
            if idx[&compose(n, px, py)] != x {
                continue;
            }
            let accepted = a.initial().iter().any(|i| {
                (0..n).any(|j| px[i.0 * n + j] > 0 && py[j * n + j] == 2)
            });
            if !accepted {
                rejecting[x].push(y);
                loops[y] = true;
            }
        }
    }

    let pre = |p: Option<usize>| match p {
        None => "pre_e".to_string(),
        Some(p) => format!("pre_{p}"),
    };
    let lp = |y: usize, p: Option<usize>| match p {
        None => format!("loop_{y}_e"),
        Some(p) => format!("loop_{y}_{p}"),
    };
    let mut states = vec![pre(None)];
    states.extend((0..size).map(|p| pre(Some(p))));
    let mut accepting = Vec::new();
    let mut transitions = Vec::new();
    let step = |p: Option<usize>, e: usize| match p {
        None => m.letter[e],
        Some(p) => m.mul_letter[p][e],
    };
    for p in std::iter::once(None).chain((0..size).map(Some)) {
        for (e, ev) in a.alphabet().iter().enumerate() {
            let q = step(p, e);
            transitions.push((pre(p), ev.clone(), pre(Some(q))));
            for &y in &rejecting[q] {
                transitions.push((pre(p), ev.clone(), lp(y, None)));
            }
        }
    }
    for y in (0..size).filter(|&y| loops[y]) {
        states.push(lp(y, None));
        accepting.push(lp(y, None));
        states.extend((0..size).map(|p| lp(y, Some(p))));
        for p in std::iter::once(None).chain((0..size).map(Some)) {
            for (e, ev) in a.alphabet().iter().enumerate() {
                let q = step(p, e);
                transitions.push((lp(y, p), ev.clone(), lp(y, Some(q))));
                if q == y {
                    transitions.push((lp(y, p), ev.clone(), lp(y, None)));
                }
            }
        }
    }
    transitions.sort();
    transitions.dedup();
    Ok(Automaton::new(AutomatonDef {
        name: format!("not_{}", a.name()),
        alphabet: a.alphabet().to_vec(),
        states,
        initial: vec![pre(None)],
        accepting,
        transitions,
    })?)
}

/// Two-phase product accepting `𝓛(a) ∩ 𝓛(b)`; only reachable states are built.
pub fn intersect(a: &Automaton, b: &Automaton) -> Result<Automaton, OracleError> {
    a.check_same_alphabet(b)?;
    let name = |p: usize, q: usize, phase: u8| format!("{}|{}|{}", a.states()[p], b.states()[q], phase);
    let mut seen: HashSet<(usize, usize, u8)> = HashSet::new();
    let mut queue = VecDeque::new();
    let mut states = Vec::new();
    let mut initial = Vec::new();
    for &p in a.initial() {
        for &q in b.initial() {
            let key = (p.0, q.0, 1);
            if seen.insert(key) {
                queue.push_back(key);
                states.push(name(key.0, key.1, key.2));
            }
            initial.push(name(p.0, q.0, 1));
        }
    }
    let mut accepting = Vec::new();
    let mut transitions = Vec::new();
    while let Some((p, q, phase)) = queue.pop_front() {
        let pid = StateId(p);
        let qid = StateId(q);
        if phase == 1 && a.is_accepting(pid) {
            accepting.push(name(p, q, phase));
        }
        let next_phase = match phase {
            1 if a.is_accepting(pid) => 2,
            2 if b.is_accepting(qid) => 1,
            other => other,
        };
        for e in a.event_ids() {
            for &p2 in a.succ(pid, e) {
                for &q2 in b.succ(qid, e) {
                    let key = (p2.0, q2.0, next_phase);
                    if seen.insert(key) {
                        queue.push_back(key);
                        states.push(name(key.0, key.1, key.2));
                    }
                    transitions.push((
                        name(p, q, phase),
                        a.event_name(e).to_string(),
                        name(key.0, key.1, key.2),
                    ));
                }
            }
        }
    }
    Ok(Automaton::new(AutomatonDef {
        name: format!("{}_and_{}", a.name(), b.name()),
        alphabet: a.alphabet().to_vec(),
        states,
        initial,
        accepting,
        transitions,
    })?)
}

/// Decides `𝓛(a) ⊆ 𝓛(b)` with the default complementation limit.
pub fn includes(a: &Automaton, b: &Automaton) -> Result<InclusionVerdict, OracleError> {
    includes_with_limit(a, b, DEFAULT_STATE_LIMIT)
}

pub fn includes_with_limit(
    a: &Automaton,
    b: &Automaton,
    limit: usize,
) -> Result<InclusionVerdict, OracleError> {
    a.check_same_alphabet(b)?;
    let product = intersect(a, &complement_with_limit(b, limit)?)?;
    match product.is_empty() {
        Emptiness::Empty => Ok(InclusionVerdict::Included),
        Emptiness::Witness(w) => {
            if !separates(a, b, &w)? {
                return Err(OracleError::BadWitness(w));
            }
            Ok(InclusionVerdict::Refuted(minimize(a, b, w)?))
        }
    }
}

fn separates(a: &Automaton, b: &Automaton, w: &Lasso) -> Result<bool, AutomatonError> {
    Ok(a.member(w)? && !b.member(w)?)
}

// Greedy: drop single letters from the stem, then from the loop, while the
// word still separates the two languages.
fn minimize(a: &Automaton, b: &Automaton, mut w: Lasso) -> Result<Lasso, AutomatonError> {
    loop {
        let mut improved = false;
        for i in 0..w.stem().len() {
            let mut stem = w.stem().to_vec();
            stem.remove(i);
            let cand = Lasso::new(stem, w.period().to_vec()).expect("loop unchanged");
            if separates(a, b, &cand)? {
                w = cand;
                improved = true;
                break;
            }
        }
        if improved {
            continue;
        }
        for i in 0..w.period().len() {
            if w.period().len() == 1 {
                break;
            }
            let mut period = w.period().to_vec();
            period.remove(i);
            let cand = Lasso::new(w.stem().to_vec(), period).expect("loop nonempty");
            if separates(a, b, &cand)? {
                w = cand;
                improved = true;
                break;
            }
        }
        if !improved {
            return Ok(w);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::automata::random_automaton;

    fn aut(states: &[&str], accepting: &[&str], edges: &[(&str, &str, &str)]) -> Automaton {
        let v = |xs: &[&str]| xs.iter().map(|s| s.to_string()).collect::<Vec<_>>();
        Automaton::new(AutomatonDef {
            name: "T".into(),
            alphabet: vec!["a".into(), "b".into()],
            states: v(states),
            initial: vec![states[0].to_string()],
            accepting: v(accepting),
            transitions: edges
                .iter()
                .map(|(a, b, c)| (a.to_string(), b.to_string(), c.to_string()))
                .collect(),
        })
        .unwrap()
    }

    #[test]
    fn complement_of_empty_language_is_everything() {
        let a = aut(&["s"], &[], &[("s", "a", "s")]);
        let c = complement(&a).unwrap();
        assert!(c.member(&Lasso::periodic(["a"]).unwrap()).unwrap());
        assert!(c.member(&Lasso::new(["b"], ["a", "b"]).unwrap()).unwrap());
    }

    #[test]
    fn complement_of_universal_is_empty() {
        let a = aut(&["s"], &["s"], &[("s", "a", "s"), ("s", "b", "s")]);
        assert!(complement(&a).unwrap().is_empty().is_empty());
    }

    #[test]
    fn limit_is_enforced() {
        let a = random_automaton(7, 1, 0.3, 0.5, 3).unwrap();
        assert!(matches!(complement(&a), Err(OracleError::LimitExceeded { .. })));
        assert!(complement_with_limit(&a, 7).is_ok());
    }

    #[test]
    fn infinitely_many_b() {
        // GF b
        let a = aut(
            &["s", "t"],
            &["t"],
            &[("s", "a", "s"), ("s", "b", "t"), ("t", "a", "s"), ("t", "b", "t")],
        );
        let c = complement(&a).unwrap();
        assert!(c.member(&"b,b;a".parse().unwrap()).unwrap());
        assert!(!c.member(&"a;a,b".parse().unwrap()).unwrap());
    }

    #[test]
    fn inclusion_is_reflexive() {
        for seed in 0..10 {
            let a = random_automaton(3, 2, 0.4, 0.5, seed).unwrap();
            assert_eq!(includes(&a, &a).unwrap(), InclusionVerdict::Included);
        }
    }
}
