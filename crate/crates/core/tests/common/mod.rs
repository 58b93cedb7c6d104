#![allow(dead_code)]

use fairsim::automata::random_automaton;
use fairsim::corpus;
use fairsim::fixrel::{gfp, lfp, FnFunctor, PairRel};
use fairsim::{Automaton, Lasso, SimContext};

pub fn aut(name: &str) -> Automaton {
    corpus::automaton(name).unwrap_or_else(|| panic!("no automaton `{name}` in the corpus"))
}

pub fn pair(cx_a: &Automaton, cx_b: &Automaton, rel: &PairRel, s1: &str, s2: &str) -> bool {
    rel.contains(
        cx_a.state_id(s1).expect("left state"),
        cx_b.state_id(s2).expect("right state"),
    )
}

/// The flattened relation `νX. μY. final_into(X) ∪ step_into(Y) ∪ lstep(X)`,
/// which is not sound for inclusion.
pub fn wrong_functor<'a>(cx: &'a SimContext<'a>) -> impl fairsim::fixrel::Functor + 'a {
    FnFunctor::new("wrong", cx.universe(), move |x: &PairRel| {
        let fixed = cx.final_into(x).union(&cx.lstep(x));
        let inner = FnFunctor::new("wrong-inner", cx.universe(), |y: &PairRel| {
            fixed.union(&cx.step_into(y))
        });
        lfp(&inner).expect("monotone")
    })
}

pub fn compute_wrong(a: &Automaton, b: &Automaton) -> PairRel {
    let cx = SimContext::new(a, b).expect("same alphabet");
    let rel = gfp(&wrong_functor(&cx)).expect("monotone");
    rel
}

/// The 200 seeded pairs used by the statistical criteria: 1 to 4 states a
/// side, one or two events.
pub fn random_pairs(n: usize) -> Vec<(Automaton, Automaton)> {
    (0..n as u64)
        .map(|i| {
            let events = if i % 5 == 0 { 1 } else { 2 };
            let n1 = 1 + (i % 4) as usize;
            let n2 = 1 + ((i / 4) % 4) as usize;
            let density = [0.3, 0.45, 0.6][(i % 3) as usize];
            let a = random_automaton(n1, events, density, 0.5, 1000 + 2 * i).unwrap();
            let b = random_automaton(n2, events, density, 0.5, 1001 + 2 * i).unwrap();
            (a, b)
        })
        .collect()
}

/// Every lasso with stem and loop lengths bounded by `max`.
pub fn lassos(alphabet: &[String], max: usize) -> Vec<Lasso> {
    let mut words: Vec<Vec<String>> = vec![Vec::new()];
    let mut all = vec![Vec::new()];
    for _ in 0..max {
        words = words
            .iter()
            .flat_map(|w| {
                alphabet.iter().map(move |e| {
                    let mut w = w.clone();
                    w.push(e.clone());
                    w
                })
            })
            .collect();
        all.extend(words.iter().cloned());
    }
    let mut out = Vec::new();
    for stem in &all {
        for period in all.iter().filter(|p| !p.is_empty()) {
            out.push(Lasso::new(stem.clone(), period.clone()).unwrap());
        }
    }
    out
}

/// A separating lasso among the short ones, if any: a bounded, independent
/// refutation search that does not touch complementation.
pub fn brute_force_refute(a: &Automaton, b: &Automaton, max: usize) -> Option<Lasso> {
    lassos(a.alphabet(), max)
        .into_iter()
        .find(|w| a.member(w).unwrap() && !b.member(w).unwrap())
}

/// Largest direct simulation by exhaustive search over all relations,
/// straight from the definition: every pair needs `s1 ∈ F1 ⇒ s2 ∈ F2` and
/// every left move matched inside the relation.
pub fn brute_force_direct(a: &Automaton, b: &Automaton) -> std::collections::BTreeSet<(String, String)> {
    let pairs: Vec<(usize, usize)> = (0..a.num_states())
        .flat_map(|x| (0..b.num_states()).map(move |y| (x, y)))
        .collect();
    assert!(pairs.len() <= 16, "exhaustive search is for tiny automata");
    let name = |(x, y): (usize, usize)| (a.states()[x].clone(), b.states()[y].clone());
    let mut best: Option<Vec<(usize, usize)>> = None;
    for mask in 0u32..(1 << pairs.len()) {
        let set: Vec<(usize, usize)> = (0..pairs.len())
            .filter(|i| mask & (1 << i) != 0)
            .map(|i| pairs[i])
            .collect();
        let postfixed = set.iter().all(|&(x, y)| {
            let (sx, sy) = name((x, y));
            let acc_ok = !a.is_accepting(a.state_id(&sx).unwrap()) || b.is_accepting(b.state_id(&sy).unwrap());
            acc_ok
                && a.alphabet().iter().all(|e| {
                    a.successors(&sx, e).unwrap().iter().all(|t1| {
                        b.successors(&sy, e).unwrap().iter().any(|t2| {
                            set.contains(&(a.state_id(t1).unwrap().0, b.state_id(t2).unwrap().0))
                        })
                    })
                })
        });
        if postfixed && best.as_ref().map_or(true, |b| set.len() > b.len()) {
            best = Some(set);
        }
    }
    best.unwrap_or_default().into_iter().map(name).collect()
}

/// Every ordered pair of corpus automata over the same alphabet.
pub fn corpus_pairs() -> Vec<(Automaton, Automaton)> {
    let all = corpus::automata();
    let mut out = Vec::new();
    for a in &all {
        for b in &all {
            if a.same_alphabet(b) {
                out.push((a.clone(), b.clone()));
            }
        }
    }
    out
}

/// `a` with its accepting set replaced by `accepting`.
pub fn with_accepting(a: &Automaton, accepting: &[&str]) -> Automaton {
    let mut d = a.to_def();
    d.accepting = accepting.iter().map(|s| s.to_string()).collect();
    Automaton::new(d).unwrap()
}
