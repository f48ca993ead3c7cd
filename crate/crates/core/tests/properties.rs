use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use symblicit::lattice::ProductNatLattice;
use symblicit::lumping::{is_stable, lump};
use symblicit::mdp::pre_sigma_tau;
use symblicit::strategy::{initial_proper_strategy, proper_states};
use symblicit::strips::{gen_random, MssMdp, MssProblem};
use symblicit::{Antichain, CondSet, Lattice, MonotonicMdp, NatVec, PseudoAntichain};

const BOUND: u32 = 4;

fn point() -> impl Strategy<Value = NatVec> {
    (0..=BOUND, 0..=BOUND).prop_map(|(a, b)| NatVec::new([a, b]))
}

fn pa() -> impl Strategy<Value = PseudoAntichain<NatVec>> {
    prop::collection::vec((point(), prop::collection::vec(point(), 0..3)), 0..4)
        .prop_map(|pairs| PseudoAntichain::from_pairs(pairs.into_iter().map(|(x, a)| (x, Antichain::maximal(a)))))
}

fn members(a: &PseudoAntichain<NatVec>) -> Vec<NatVec> {
    a.enumerate(&ProductNatLattice::new(2, BOUND)).unwrap()
}

fn cond_pa(n: usize) -> impl Strategy<Value = PseudoAntichain<CondSet>> {
    let set = move || (0..1u128 << n).prop_map(CondSet);
    prop::collection::vec((set(), prop::collection::vec(set(), 0..3)), 0..3)
        .prop_map(|pairs| PseudoAntichain::from_pairs(pairs.into_iter().map(|(x, a)| (x, Antichain::maximal(a)))))
}

proptest! {
    #[test]
    fn union_and_intersection_are_commutative(a in pa(), b in pa()) {
        prop_assert!(a.union(&b).set_eq(&b.union(&a)));
        prop_assert!(a.intersect(&b).set_eq(&b.intersect(&a)));
    }

    #[test]
    fn de_morgan_within_the_lattice(a in pa(), b in pa()) {
        let top = PseudoAntichain::closed(&Antichain::singleton(NatVec::new([BOUND, BOUND])));
        let lhs = top.difference(&a.union(&b));
        let rhs = top.difference(&a).intersect(&top.difference(&b));
        prop_assert!(lhs.set_eq(&rhs));
    }

    #[test]
    fn difference_partitions(a in pa(), b in pa()) {
        let inside = a.intersect(&b);
        let outside = a.difference(&b);
        prop_assert!(inside.is_disjoint(&outside));
        prop_assert!(inside.union(&outside).set_eq(&a));
    }

    #[test]
    fn distributive(a in pa(), b in pa(), c in pa()) {
        let lhs = a.intersect(&b.union(&c));
        let rhs = a.intersect(&b).union(&a.intersect(&c));
        prop_assert!(lhs.set_eq(&rhs));
    }

    #[test]
    fn stored_form_stays_simplified(a in pa(), b in pa()) {
        for r in [a.union(&b), a.intersect(&b), a.difference(&b)] {
            let tops: Vec<_> = r.elems().iter().map(|pe| pe.top().clone()).collect();
            let mut distinct = tops.clone();
            distinct.sort();
            distinct.dedup();
            prop_assert_eq!(tops.len(), distinct.len());
            for pe in r.elems() {
                prop_assert!(pe.alpha().elems().iter().all(|x| Lattice::lt(x, pe.top())));
            }
        }
    }

    #[test]
    fn subset_matches_members(a in pa(), b in pa()) {
        let (ma, mb) = (members(&a), members(&b));
        prop_assert_eq!(a.is_subset(&b), ma.iter().all(|s| mb.contains(s)));
    }

    #[test]
    fn pre_commutes_with_set_operations(seed in 0u64..1000, a in cond_pa(5), b in cond_pa(5)) {
        let mdp = MssMdp::new(gen_random(5, &mut ChaCha8Rng::seed_from_u64(seed)));
        for o in 0..mdp.num_actions() {
            for t in 0..mdp.num_effects(o) {
                let pre = |x: &PseudoAntichain<CondSet>| pre_sigma_tau(&mdp, x, o, t);
                prop_assert!(pre(&a.union(&b)).set_eq(&pre(&a).union(&pre(&b))));
                prop_assert!(pre(&a.intersect(&b)).set_eq(&pre(&a).intersect(&pre(&b))));
                prop_assert!(pre(&a.difference(&b)).set_eq(&pre(&a).difference(&pre(&b))));
            }
        }
    }

    #[test]
    fn strips_successors_are_monotone(seed in 0u64..1000, s in 0u128..64, extra in 0u128..64) {
        let mdp = MssMdp::new(gen_random(6, &mut ChaCha8Rng::seed_from_u64(seed)));
        let small = CondSet(s);
        let big = CondSet(s | extra);
        // Reverse inclusion: the superset is the smaller state.
        prop_assert!(big.leq(&small));
        for o in 0..mdp.num_actions() {
            if !mdp.is_enabled(&small, o) {
                continue;
            }
            prop_assert!(mdp.is_enabled(&big, o));
            for t in 0..mdp.num_effects(o) {
                prop_assert!(mdp.successor(&big, o, t).leq(&mdp.successor(&small, o, t)));
            }
        }
    }

    #[test]
    fn text_format_round_trips(seed in 0u64..1000, n in 1usize..12) {
        let p = gen_random(n, &mut ChaCha8Rng::seed_from_u64(seed));
        let text = p.to_text();
        let back = MssProblem::parse(&text).unwrap();
        prop_assert_eq!(&back, &p);
        prop_assert_eq!(back.to_text(), text);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn lumped_partition_is_stable(seed in 0u64..10_000, n in 3usize..8) {
        let mdp = MssMdp::new(gen_random(n, &mut ChaCha8Rng::seed_from_u64(seed)));
        let ps = proper_states(&mdp).unwrap();
        prop_assume!(!ps.region.is_empty());
        let lambda = initial_proper_strategy(&mdp, &ps);
        let goal = mdp.goal().unwrap();
        let res = lump(&mdp, &lambda, Some(&goal));
        prop_assert!(is_stable(&mdp, &lambda, Some(&goal), &res));
        let mut covered = PseudoAntichain::empty();
        for b in &res.blocks {
            prop_assert!(covered.is_disjoint(&b.region));
            covered = covered.union(&b.region);
        }
        prop_assert!(covered.set_eq(&lambda.domain()));
    }
}
