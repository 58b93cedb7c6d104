mod common;

use common::{aut, brute_force_direct, compute_wrong, corpus_pairs, lassos, pair, random_pairs, with_accepting};
use fairsim::automata::{counter_program, counter_state, random_automaton};
use fairsim::fixrel::{check_postfixed, gfp, PairRel};
use fairsim::oracle::includes;
use fairsim::simulations::{
    check_certificate, compute, compute_2delay, compute_delay, compute_delay_reach, compute_direct,
    compute_rb, compute_rdelay, compute_sim, functor_sim,
};
use fairsim::{Automaton, SimContext, SimError, SimKind};

fn named(a: &Automaton, b: &Automaton, pairs: &[(&str, &str)]) -> PairRel {
    let u = SimContext::new(a, b).unwrap().universe();
    PairRel::from_pairs(
        u,
        pairs
            .iter()
            .map(|(x, y)| (a.state_id(x).unwrap(), b.state_id(y).unwrap())),
    )
}

#[test]
fn standard_simulation_examples() {
    let (a, b) = (aut("Ex23L"), aut("Ex23R"));
    assert!(pair(&a, &b, &compute_sim(&a, &b).unwrap(), "q0", "r0"));

    let r = aut("RInvL");
    let sim = compute_sim(&r, &r).unwrap();
    for s in r.state_ids() {
        assert!(sim.contains(s, s));
    }

    // A1's q1 has no b moves but an a loop; drop the loop to get a deadlock
    let mut d = aut("A1").to_def();
    d.transitions.retain(|(s, _, _)| s != "q1");
    let dead = Automaton::new(d).unwrap();
    let b = aut("A2");
    let sim = compute_sim(&dead, &b).unwrap();
    for s2 in b.state_ids() {
        assert!(sim.contains(dead.state_id("q1").unwrap(), s2));
    }
}

#[test]
fn direct_examples() {
    let (a1, a2) = (aut("A1"), aut("A2"));
    let d = compute_direct(&a2, &a1).unwrap();
    assert!(pair(&a2, &a1, &d, "r0", "q0"));
    assert!(!pair(&a1, &a2, &compute_direct(&a1, &a2).unwrap(), "q0", "r0"));

    let a = aut("Sched").with_all_accepting();
    let id = compute_direct(&a, &a).unwrap();
    for s in a.state_ids() {
        assert!(id.contains(s, s));
    }
}

#[test]
fn direct_matches_exhaustive_search() {
    let mut checked = 0;
    for (a, b) in corpus_pairs().into_iter().chain(random_pairs(200)) {
        if a.num_states() * b.num_states() > 16 {
            continue;
        }
        let got: std::collections::BTreeSet<_> =
            compute_direct(&a, &b).unwrap().named_pairs(&a, &b).into_iter().collect();
        assert_eq!(got, brute_force_direct(&a, &b), "{} vs {}", a.name(), b.name());
        checked += 1;
    }
    assert!(checked > 200);
}

#[test]
fn alternating_direct_relation_by_definition() {
    // Straight from the definition, (q1,r1) fails: q1 -a-> q0 can only be
    // answered by r1 -a-> r0, and q0 ∈ F1 while r0 ∉ F2.
    let (a, b) = (aut("A1alt"), aut("A2alt"));
    let d = compute_direct(&a, &b).unwrap();
    assert_eq!(d, named(&a, &b, &[("q0", "r1"), ("q1", "r0")]));
    assert!(!pair(&a, &b, &d, "q0", "r0"));
}

#[test]
fn delay_examples() {
    let (a, b) = (aut("A1alt"), aut("A2alt"));
    assert!(pair(&a, &b, &compute_delay(&a, &b).unwrap(), "q0", "r0"));

    let (s, once) = (aut("Sched"), aut("DoneOnce"));
    let d = compute_delay(&s, &once).unwrap();
    assert!(!pair(&s, &once, &d, "q0", "r0"));
    assert!(pair(&s, &once, &d, "q2", "r0"));
}

#[test]
fn delay_reach_examples() {
    for (a, b) in corpus_pairs() {
        let d = compute_delay(&a, &b).unwrap();
        assert!(compute_delay_reach(&a, &b, &d).unwrap().is_subset(&d));
    }

    let (a, b) = (aut("SpuriousL"), aut("SpuriousR"));
    let u = SimContext::new(&a, &b).unwrap().universe();
    assert!(compute_delay_reach(&a, &b, &PairRel::empty(u)).unwrap().is_empty());

    let (s, once) = (aut("Sched"), aut("DoneOnce"));
    let full = PairRel::full(SimContext::new(&s, &once).unwrap().universe());
    let r = compute_delay_reach(&s, &once, &full).unwrap();
    assert!(!pair(&s, &once, &r, "q1", "r0"));
    assert!(!pair(&s, &once, &r, "q2", "r0"));
    assert!(pair(&s, &once, &r, "q0", "r1"));
}

#[test]
fn rb_examples() {
    let spec = aut("CounterSpec");
    for n in [0, 5] {
        let c = counter_program(n);
        let rb = compute_rb(&c, &spec).unwrap();
        assert!(pair(&c, &spec, &rb, &counter_state(1, 0), "q0"), "bound {n}");
    }

    let (s, gf) = (aut("Sched"), aut("GFdone"));
    assert!(!pair(&s, &gf, &compute_rb(&s, &gf).unwrap(), "q0", "r0"));

    for (a, b) in random_pairs(60) {
        let b = b.with_all_accepting();
        assert_eq!(compute_rb(&a, &b).unwrap(), compute_sim(&a, &b).unwrap());
    }
}

#[test]
fn double_delay_examples() {
    let (s, once, gf) = (aut("Sched"), aut("DoneOnce"), aut("GFdone"));
    assert!(pair(&s, &once, &compute_2delay(&s, &once).unwrap(), "q0", "r0"));
    assert!(!pair(&s, &gf, &compute_2delay(&s, &gf).unwrap(), "q0", "r0"));
    for (a, b) in corpus_pairs() {
        assert!(compute_delay(&a, &b).unwrap().is_subset(&compute_2delay(&a, &b).unwrap()));
    }
}

#[test]
fn repeated_delay_examples() {
    let (s, gf) = (aut("Sched"), aut("GFdone"));
    assert!(pair(&s, &gf, &compute_rdelay(&s, &gf).unwrap(), "q0", "r0"));
    for (a, b) in corpus_pairs() {
        assert!(compute_2delay(&a, &b).unwrap().is_subset(&compute_rdelay(&a, &b).unwrap()));
    }
    // with no left acceptance every kind of delay collapses to simulation
    for (a, b) in random_pairs(60) {
        let a = with_accepting(&a, &[]);
        let sim = compute_sim(&a, &b).unwrap();
        assert_eq!(compute_rdelay(&a, &b).unwrap(), sim);
        assert_eq!(compute_delay(&a, &b).unwrap(), sim);
    }
}

#[test]
fn wrong_examples() {
    let (l, r) = (aut("WrongL"), aut("WrongR"));
    let w = compute_wrong(&l, &r);
    assert!(pair(&l, &r, &w, "q0", "r0"));
    assert!(pair(&l, &r, &w, "q1", "r0"));
    assert!(!includes(&l, &r).unwrap().is_included());
    for kind in SimKind::PRODUCTION {
        assert!(!pair(&l, &r, &compute(kind, &l, &r).unwrap(), "q0", "r0"), "{kind}");
    }

    for (a, b) in random_pairs(60) {
        let a = a.with_all_accepting();
        assert_eq!(compute_wrong(&a, &b), compute_rb(&a, &b).unwrap());
    }
    for (a, b) in corpus_pairs() {
        assert!(compute_delay(&a, &b).unwrap().is_subset(&compute_wrong(&a, &b)));
    }
}

#[test]
fn wrong_is_refused_by_production_entry_points() {
    let (l, r) = (aut("WrongL"), aut("WrongR"));
    assert!(matches!(compute(SimKind::Wrong, &l, &r), Err(SimError::Unsupported(_))));
    let u = SimContext::new(&l, &r).unwrap().universe();
    assert!(check_certificate(SimKind::Wrong, &l, &r, &PairRel::full(u)).is_err());
}

#[test]
fn certificate_examples() {
    let (a1, a2) = (aut("A1"), aut("A2"));
    let r = named(&a2, &a1, &[("r0", "q0"), ("r1", "q1"), ("r2", "q2")]);
    assert!(check_certificate(SimKind::Direct, &a2, &a1, &r).unwrap());

    let (s, once) = (aut("Sched"), aut("DoneOnce"));
    let r = named(&s, &once, &[("q2", "r0"), ("q0", "r1"), ("q1", "r1"), ("q2", "r1")]);
    assert!(check_certificate(SimKind::Delay, &s, &once, &r).unwrap());

    let (a, b) = (aut("A1alt"), aut("A2alt"));
    let r = named(&a, &b, &[("q0", "r0")]);
    assert!(!check_certificate(SimKind::Direct, &a, &b, &r).unwrap());

    let (l, r) = (aut("WrongL"), aut("WrongR"));
    let h = named(&l, &r, &[("q0", "r0"), ("q1", "r0")]);
    for kind in SimKind::PRODUCTION {
        assert!(!check_certificate(kind, &l, &r, &h).unwrap(), "{kind}");
    }
}

#[test]
fn computed_relations_are_their_own_certificates() {
    for (a, b) in corpus_pairs().into_iter().chain(random_pairs(50)) {
        let cx = SimContext::new(&a, &b).unwrap();
        for kind in SimKind::PRODUCTION {
            let committed = cx.committed(kind).unwrap();
            assert!(check_certificate(kind, &a, &b, &committed).unwrap());
        }
    }
}

#[test]
fn inclusion_chain_on_the_corpus() {
    for (a, b) in corpus_pairs() {
        let rels: Vec<PairRel> = [
            SimKind::Direct,
            SimKind::Delay,
            SimKind::TwoDelay,
            SimKind::RDelay,
            SimKind::Standard,
        ]
        .iter()
        .map(|&k| compute(k, &a, &b).unwrap())
        .collect();
        for w in rels.windows(2) {
            assert!(w[0].is_subset(&w[1]), "{} vs {}", a.name(), b.name());
        }
        assert!(compute_rb(&a, &b).unwrap().is_subset(&rels[4]));
    }
}

#[test]
fn delay_is_postfixed_for_simulation() {
    for (a, b) in corpus_pairs() {
        let cx = SimContext::new(&a, &b).unwrap();
        let d = compute_delay(&a, &b).unwrap();
        assert!(check_postfixed(&functor_sim(&cx), &d).unwrap());
        assert!(d.is_subset(&gfp(&functor_sim(&cx)).unwrap()));
    }
}

#[test]
fn direct_is_reflexive() {
    for seed in 0..100 {
        let a = random_automaton(1 + (seed % 5) as usize, 2, 0.4, 0.5, 9000 + seed).unwrap();
        let d = compute_direct(&a, &a).unwrap();
        for s in a.state_ids() {
            assert!(d.contains(s, s), "seed {seed}");
        }
    }
}

#[test]
fn production_kinds_are_sound_on_the_corpus() {
    for (a, b) in corpus_pairs() {
        if a.num_states() > 4 || b.num_states() > 4 {
            continue;
        }
        for kind in [SimKind::Direct, SimKind::Delay, SimKind::TwoDelay, SimKind::RDelay] {
            let r = compute(kind, &a, &b).unwrap();
            for (s1, s2) in r.iter() {
                let v = includes(&a.rooted_at(s1), &b.rooted_at(s2)).unwrap();
                assert!(v.is_included(), "{kind} {} vs {}", a.name(), b.name());
            }
        }
    }
}

#[test]
fn rb_certifies_traces_into_the_language() {
    for (a, b) in random_pairs(80) {
        let rb = compute_rb(&a, &b).unwrap();
        let words = lassos(a.alphabet(), 3);
        for (s1, s2) in rb.iter() {
            let (l, r) = (a.rooted_at(s1), b.rooted_at(s2));
            for w in &words {
                if l.member_trace(w).unwrap() {
                    assert!(r.member(w).unwrap(), "{} {} {w}", a.name(), b.name());
                }
            }
        }
    }
}

#[test]
fn alphabet_mismatch_is_an_error() {
    assert!(compute_direct(&aut("A1"), &aut("Sched")).is_err());
}
