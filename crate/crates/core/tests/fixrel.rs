mod common;

use common::{aut, pair, random_pairs};
use fairsim::fixrel::{check_postfixed, gfp, lfp, lfp_ranked, pgfp, FnFunctor, Functor, PairRel};
use fairsim::simulations::functor_sim;
use fairsim::{PairUniverse, SimContext, SimKind, StateId};
use proptest::prelude::*;

fn rel(u: PairUniverse, pairs: &[(usize, usize)]) -> PairRel {
    PairRel::from_pairs(u, pairs.iter().map(|&(x, y)| (StateId(x), StateId(y))))
}

fn random_rel(u: PairUniverse, bits: u64) -> PairRel {
    let mut i = 0;
    PairRel::from_fn(u, |_, _| {
        i += 1;
        bits & (1 << (i % 64)) != 0
    })
}

#[test]
fn trivial_fixpoints() {
    let u = PairUniverse::new(3, 2);
    let id = FnFunctor::new("id", u, |x: &PairRel| x.clone());
    let none = FnFunctor::new("none", u, |_: &PairRel| PairRel::empty(u));
    let all = FnFunctor::new("all", u, |_: &PairRel| PairRel::full(u));
    assert_eq!(gfp(&id).unwrap(), PairRel::full(u));
    assert_eq!(lfp(&id).unwrap(), PairRel::empty(u));
    assert_eq!(gfp(&none).unwrap(), PairRel::empty(u));
    assert_eq!(lfp(&all).unwrap(), PairRel::full(u));
    assert!(check_postfixed(&none, &PairRel::empty(u)).unwrap());
}

#[test]
fn simulation_example_lts() {
    let (a, b) = (aut("Ex23L"), aut("Ex23R"));
    let cx = SimContext::new(&a, &b).unwrap();
    let f = functor_sim(&cx);
    let sim = gfp(&f).unwrap();
    assert!(pair(&a, &b, &sim, "q0", "r0"));
    assert!(pair(&a, &b, &sim, "q1", "r1"));

    let u = cx.universe();
    let r = rel(u, &[(0, 0), (1, 1)]);
    assert!(check_postfixed(&f, &r).unwrap());
    assert!(!check_postfixed(&f, &rel(u, &[(0, 0)])).unwrap());

    let g = pgfp(&f, &rel(u, &[(0, 0)])).unwrap();
    assert!(pair(&a, &b, &g, "q1", "r1"));
    assert_eq!(pgfp(&f, &PairRel::empty(u)).unwrap(), sim);
}

#[test]
fn reach_at_full_leaves_the_stuck_pair_out() {
    let (a, b) = (aut("Sched"), aut("DoneOnce"));
    let cx = SimContext::new(&a, &b).unwrap();
    let full = PairRel::full(cx.universe());
    let fin = cx.final_into(&full);
    let f = FnFunctor::new("reach", cx.universe(), |y: &PairRel| fin.union(&cx.step_into(y)));
    let r = lfp(&f).unwrap();
    assert!(!pair(&a, &b, &r, "q2", "r0"));
    assert_eq!(r, cx.reach(&full));
}

#[test]
fn ranks_count_rounds() {
    let u = PairUniverse::new(4, 1);
    // y ↦ {0} ∪ {i+1 | i ∈ y}
    let f = FnFunctor::new("chain", u, move |y: &PairRel| {
        let mut out = rel(u, &[(0, 0)]);
        for (s, t) in y.iter() {
            if s.0 + 1 < 4 {
                out.insert(StateId(s.0 + 1), t);
            }
        }
        out
    });
    let r = lfp_ranked(&f).unwrap();
    for i in 0..4 {
        assert_eq!(r.rank(StateId(i), StateId(0)), Some(i + 1));
    }
    assert_eq!(r.below(3), rel(u, &[(0, 0), (1, 0)]));
    assert_eq!(r.value, PairRel::full(u));
}

#[test]
fn non_monotone_functors_are_detected() {
    let u = PairUniverse::new(1, 1);
    let flip = FnFunctor::new("flip", u, |x: &PairRel| x.complement());
    assert!(gfp(&flip).is_err());
    assert!(lfp(&flip).is_err());
}

#[test]
fn universe_mismatch_is_an_error() {
    let u = PairUniverse::new(2, 2);
    let id = FnFunctor::new("id", u, |x: &PairRel| x.clone());
    assert!(check_postfixed(&id, &PairRel::full(PairUniverse::new(1, 2))).is_err());
}

fn kinds() -> [SimKind; 5] {
    [
        SimKind::Standard,
        SimKind::Direct,
        SimKind::Delay,
        SimKind::Rb,
        SimKind::RDelay,
    ]
}

#[test]
fn fixpoints_are_fixed_and_postfixed_points_lie_below() {
    for (a, b) in random_pairs(40) {
        let cx = SimContext::new(&a, &b).unwrap();
        for kind in kinds() {
            let f = cx.outer_functor(kind).unwrap();
            let g = gfp(&*f).unwrap();
            assert_eq!(f.apply(&g), g, "{kind}");
            assert!(check_postfixed(&*f, &g).unwrap());
            let l = lfp(&*f).unwrap();
            assert_eq!(f.apply(&l), l, "{kind}");
            assert!(l.is_subset(&g));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn postfixed_relations_are_below_the_gfp(i in 0usize..200, bits in any::<u64>(), k in 0usize..5) {
        let (a, b) = random_pairs(200).swap_remove(i);
        let cx = SimContext::new(&a, &b).unwrap();
        let f = cx.outer_functor(kinds()[k]).unwrap();
        // shrink a random relation to the largest postfixed point inside it
        let mut r = random_rel(cx.universe(), bits);
        loop {
            let next = r.intersection(&f.apply(&r));
            if next == r {
                break;
            }
            r = next;
        }
        prop_assert!(check_postfixed(&*f, &r).unwrap());
        prop_assert!(r.is_subset(&gfp(&*f).unwrap()));
    }

    #[test]
    fn accumulate_law(i in 0usize..200, xb in any::<u64>(), hb in any::<u64>(), k in 0usize..5) {
        let (a, b) = random_pairs(200).swap_remove(i);
        let cx = SimContext::new(&a, &b).unwrap();
        let f = cx.outer_functor(kinds()[k]).unwrap();
        let x = random_rel(cx.universe(), xb);
        let h = random_rel(cx.universe(), hb);
        if x.is_subset(&pgfp(&*f, &h.union(&x)).unwrap()) {
            prop_assert!(x.is_subset(&pgfp(&*f, &h).unwrap()));
        }
    }

    #[test]
    fn pgfp_is_monotone_in_the_parameter(i in 0usize..200, hb in any::<u64>(), k in 0usize..5) {
        let (a, b) = random_pairs(200).swap_remove(i);
        let cx = SimContext::new(&a, &b).unwrap();
        let f = cx.outer_functor(kinds()[k]).unwrap();
        let h = random_rel(cx.universe(), hb);
        let base = pgfp(&*f, &PairRel::empty(cx.universe())).unwrap();
        prop_assert_eq!(&base, &gfp(&*f).unwrap());
        prop_assert!(base.is_subset(&pgfp(&*f, &h).unwrap()));
    }
}
