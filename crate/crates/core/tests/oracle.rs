mod common;

use common::{aut, brute_force_refute, corpus_pairs, lassos, random_pairs};
use fairsim::automata::{counter_program, random_automaton};
use fairsim::oracle::{complement, complement_with_limit, includes, intersect, InclusionVerdict};
use fairsim::{Automaton, AutomatonDef, Lasso};
use proptest::prelude::*;

fn total_all_accepting() -> Automaton {
    Automaton::new(AutomatonDef {
        name: "Top".into(),
        alphabet: vec!["a".into(), "b".into()],
        states: vec!["s".into()],
        initial: vec!["s".into()],
        accepting: vec!["s".into()],
        transitions: vec![
            ("s".into(), "a".into(), "s".into()),
            ("s".into(), "b".into(), "s".into()),
        ],
    })
    .unwrap()
}

#[test]
fn complement_examples() {
    let aw = Lasso::periodic(["a"]).unwrap();
    assert!(complement(&aut("WrongR")).unwrap().member(&aw).unwrap());
    assert!(complement(&total_all_accepting()).unwrap().is_empty().is_empty());
    let bw = Lasso::periodic(["b"]).unwrap();
    assert!(complement(&aut("A2")).unwrap().member(&bw).unwrap());
}

#[test]
fn complement_respects_the_state_limit() {
    assert!(complement(&counter_program(5)).is_err());
    assert!(complement_with_limit(&aut("Sched"), 2).is_err());
    assert!(includes(&aut("CounterSpec"), &counter_program(5)).is_err());
}

#[test]
fn intersection_examples() {
    for seed in 0..10 {
        let a = random_automaton(3, 2, 0.5, 0.5, 300 + seed).unwrap();
        let aa = intersect(&a, &a).unwrap();
        for w in lassos(a.alphabet(), 2).iter().step_by(11).take(50) {
            assert_eq!(aa.member(w).unwrap(), a.member(w).unwrap());
        }
    }

    let empty = aut("WrongR");
    assert!(intersect(&aut("WrongL"), &empty).unwrap().is_empty().is_empty());

    let (a1, a2) = (aut("A1"), aut("A2"));
    let p = intersect(&a1, &complement(&a2).unwrap()).unwrap();
    let w = p.is_empty();
    let w = w.witness().expect("b^ω separates");
    assert!((0..w.stem().len() + 2 * w.period().len()).all(|i| w.letter(i) == "b"));
}

#[test]
fn inclusion_examples() {
    let (a1, a2) = (aut("A1"), aut("A2"));
    assert_eq!(includes(&a2, &a1).unwrap(), InclusionVerdict::Included);
    let v = includes(&a1, &a2).unwrap();
    assert_eq!(v.counterexample().unwrap().to_string(), ";b");

    let (l, r) = (aut("A1alt"), aut("A2alt"));
    assert!(includes(&l, &r).unwrap().is_included());
    assert!(includes(&r, &l).unwrap().is_included());

    for a in fairsim::corpus::automata() {
        if a.num_states() <= 6 {
            assert!(includes(&a, &a).unwrap().is_included(), "{}", a.name());
        }
    }
    assert!(includes(&aut("Sched"), &aut("GFdone")).unwrap().is_included());
}

#[test]
fn inclusion_is_reflexive_and_transitive_on_the_corpus() {
    let pairs: Vec<_> = corpus_pairs()
        .into_iter()
        .filter(|(a, b)| a.num_states() <= 4 && b.num_states() <= 4)
        .collect();
    let incl = |a: &Automaton, b: &Automaton| includes(a, b).unwrap().is_included();
    for (a, b) in &pairs {
        assert!(incl(a, a));
        if !incl(a, b) {
            continue;
        }
        for (b2, c) in &pairs {
            if b2.name() == b.name() && incl(b, c) {
                assert!(incl(a, c), "{} ⊆ {} ⊆ {}", a.name(), b.name(), c.name());
            }
        }
    }
}

#[test]
fn verdicts_agree_with_bounded_brute_force() {
    for (a, b) in random_pairs(120) {
        let v = includes(&a, &b).unwrap();
        let found = brute_force_refute(&a, &b, 3);
        match &v {
            InclusionVerdict::Included => assert!(found.is_none(), "{} vs {}", a.name(), b.name()),
            InclusionVerdict::Refuted(w) => {
                assert!(a.member(w).unwrap() && !b.member(w).unwrap());
            }
        }
        if found.is_some() {
            assert!(!v.is_included());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn complement_flips_membership(seed in 0u64..100_000, n in 1usize..5, events in 1usize..3) {
        let a = random_automaton(n, events, 0.45, 0.5, seed).unwrap();
        let c = complement(&a).unwrap();
        for w in lassos(a.alphabet(), 2) {
            prop_assert_eq!(c.member(&w).unwrap(), !a.member(&w).unwrap());
        }
    }
}
