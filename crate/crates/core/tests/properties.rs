mod common;

use std::collections::BTreeSet;

use common::*;
use magnn_core::explain::{build_concept, explain};
use magnn_core::forward::apply;
use magnn_core::fuzz::{fuzz_soundness, random_model, shrink_counterexample, FuzzConfig};
use magnn_core::linkpred::lp_encode;
use magnn_core::logic::matching::max_matching;
use magnn_core::logic::{immediate_consequences, parse_concept, parse_rule, print_concept, satisfies, Rule};
use magnn_core::soundness::{check_restricted, reduce_eluq, restricted_candidates};
use magnn_core::{decode, encode, Dataset, Direction, Fact, RestrictedRule};
use proptest::prelude::*;

fn rename(c: &str) -> String {
    format!("r_{c}_x")
}

fn model_for(seed: u64, layers: usize, direction: Direction) -> magnn_core::MagnnModel {
    let mut m = random_model(&small_signature(), layers, 3, seed, true);
    m.direction = direction;
    m
}

fn arb_direction() -> impl Strategy<Value = Direction> {
    prop_oneof![Just(Direction::Out), Just(Direction::In)]
}

proptest! {
    #[test]
    fn graph_encoding_round_trips(d in arb_dataset(5, 14)) {
        let sig = small_signature();
        let g = encode(&d, &sig).unwrap();
        prop_assert_eq!(decode(&g, &sig).unwrap(), d);
    }

    #[test]
    fn predictions_are_equivariant_under_renaming(d in arb_dataset(5, 14), seed in 0u64..1000, dir in arb_direction()) {
        let m = model_for(seed, 2, dir);
        let renamed = apply(&m, &d.rename(rename)).unwrap();
        prop_assert_eq!(renamed, apply(&m, &d).unwrap().rename(rename));
    }

    #[test]
    fn forward_matches_reference(d in arb_dataset(5, 14), seed in 0u64..1000, dir in arb_direction(), layers in 1usize..=3) {
        let m = model_for(seed, layers, dir);
        let out = apply(&m, &d).unwrap();
        let (yes, no) = naive_decisions(&m, &d, 1e-9);
        prop_assert!(yes.is_subset(&out));
        prop_assert!(no.iter().all(|f| !out.contains(f)));
    }

    #[test]
    fn neighbourhoods_are_subsets_and_grow(d in arb_dataset(5, 14), hops in 0usize..4, dir in arb_direction()) {
        for c in d.constants() {
            let small = d.khop_neighborhood(c, hops, dir).unwrap();
            let large = d.khop_neighborhood(c, hops + 1, dir).unwrap();
            prop_assert!(small.is_subset(&d));
            prop_assert!(small.is_subset(&large));
        }
    }

    #[test]
    fn predictions_depend_only_on_the_neighbourhood(d in arb_dataset(5, 14), seed in 0u64..1000, dir in arb_direction(), layers in 1usize..=3) {
        let m = model_for(seed, layers, dir);
        let full = apply(&m, &d).unwrap();
        for c in d.constants() {
            let local = d.khop_neighborhood(c, layers, dir).unwrap();
            if !local.mentions(c) {
                continue;
            }
            let near = apply(&m, &local).unwrap();
            for a in UNARY {
                let f = Fact::unary(a, c);
                prop_assert_eq!(full.contains(&f), near.contains(&f), "{} on {}", f, local);
            }
        }
    }

    #[test]
    fn labels_only_add_predictions(d in arb_dataset(4, 12), extra in arb_dataset(4, 6), seed in 0u64..1000, dir in arb_direction()) {
        // Extra edges can lower a mean, extra labels cannot.
        let extra: Dataset = extra.iter().filter(|f| f.is_unary() && d.mentions(f.constants().next().unwrap())).cloned().collect();
        let m = model_for(seed, 2, dir);
        let before = apply(&m, &d).unwrap();
        let after = apply(&m, &d.union(&extra)).unwrap();
        prop_assert!(before.is_subset(&after));
    }

    #[test]
    fn evaluation_is_deterministic(d in arb_dataset(5, 14), seed in 0u64..1000) {
        let m = model_for(seed, 2, Direction::Out);
        prop_assert_eq!(apply(&m, &d).unwrap(), apply(&m, &d).unwrap());
    }

    #[test]
    fn satisfaction_matches_reference(d in arb_dataset(4, 12), c in arb_any_concept()) {
        for x in d.constants() {
            prop_assert_eq!(satisfies(&d, x, &c).unwrap(), naive_holds(&d, x, &c), "{} at {}", c, x);
        }
    }

    #[test]
    fn satisfaction_is_invariant_under_renaming(d in arb_dataset(4, 12), c in arb_any_concept()) {
        let renamed = d.rename(rename);
        for x in d.constants() {
            prop_assert_eq!(satisfies(&d, x, &c).unwrap(), satisfies(&renamed, &rename(x), &c).unwrap());
        }
    }

    #[test]
    fn matching_agrees_with_injective_search(left in 0usize..5, right in 0usize..6, bits in any::<u32>()) {
        let adj = |i: usize, j: usize| bits >> ((i * 6 + j) % 32) & 1 == 1;
        // Largest matching by trying every partial injection.
        fn best(i: usize, left: usize, right: usize, used: &mut Vec<bool>, adj: &dyn Fn(usize, usize) -> bool) -> usize {
            if i == left {
                return 0;
            }
            let mut top = best(i + 1, left, right, used, adj);
            for j in 0..right {
                if !used[j] && adj(i, j) {
                    used[j] = true;
                    top = top.max(1 + best(i + 1, left, right, used, adj));
                    used[j] = false;
                }
            }
            top
        }
        prop_assert_eq!(max_matching(left, right, adj), best(0, left, right, &mut vec![false; right], &adj));
    }

    #[test]
    fn concepts_round_trip_through_text(c in arb_any_concept()) {
        let text = print_concept(&c);
        prop_assert_eq!(parse_concept(&text).unwrap(), c);
    }

    #[test]
    fn rules_round_trip_through_text(r in arb_eluq_rule()) {
        prop_assert_eq!(parse_rule(&r.to_text()).unwrap(), r);
    }

    #[test]
    fn reduction_covers_the_rule(r in arb_eluq_rule(), d in arb_dataset(4, 12)) {
        let reduced = reduce_eluq(&r).unwrap();
        let mut covered = Dataset::new();
        for rr in &reduced {
            covered = covered.union(&immediate_consequences(&rr.to_rule(), &d));
        }
        prop_assert!(immediate_consequences(&r, &d).is_subset(&covered));
        prop_assert!(naive_consequences(&r, &d).is_subset(&covered));
    }

    #[test]
    fn subsumption_implies_containment(d in arb_dataset(4, 12), a in 0usize..96, b in 0usize..96) {
        let all = restricted_candidates(&small_signature(), Direction::Out);
        let (r1, r2) = (&all[a], &all[b]);
        if r1.subsumes(r2) {
            let t1 = immediate_consequences(&r1.to_rule(), &d);
            let t2 = immediate_consequences(&r2.to_rule(), &d);
            prop_assert!(t2.is_subset(&t1));
        }
    }

    #[test]
    fn lemma_five(d in arb_dataset(5, 14), level in 0usize..=4, dir in arb_direction()) {
        for c in d.constants() {
            let concept = build_concept(&d, c, level, dir).unwrap();
            prop_assert!(satisfies(&d, c, &concept).unwrap(), "{} at {}", concept, c);
            prop_assert!(concept.depth() <= level);
        }
    }

    #[test]
    fn pair_encoding_is_equivariant(pairs in prop::collection::vec((0usize..2, 0usize..4, 0usize..4), 0..8)) {
        let d: Dataset = pairs.iter().map(|(p, a, b)| Fact::binary(BINARY[*p], format!("k{a}"), format!("k{b}"))).collect();
        let plain = lp_encode(&d, None, false).unwrap();
        let renamed = lp_encode(&d.rename(rename), None, false).unwrap();
        let expected = plain.dataset.rename(|pair| {
            let (a, b) = &plain.pairs[pair];
            format!("{}|{}", rename(a), rename(b))
        });
        prop_assert_eq!(renamed.dataset, expected);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn sound_restricted_rules_survive_fuzzing(seed in 0u64..10_000, dir in arb_direction()) {
        let m = model_for(seed, 2, dir);
        let cfg = FuzzConfig { trials: 100, seed, max_constants: 4, ..FuzzConfig::default() };
        for r in restricted_candidates(&m.signature, dir).into_iter().step_by(7) {
            if check_restricted(&m, &r).unwrap().sound {
                let report = fuzz_soundness(&m, &r.to_rule(), &cfg).unwrap();
                prop_assert_eq!(report.violation_count, 0, "{}", r);
            }
        }
    }

    #[test]
    fn shrunk_counterexamples_still_violate(seed in 0u64..10_000) {
        let m = model_for(seed, 2, Direction::Out);
        let cfg = FuzzConfig { trials: 60, seed, max_constants: 4, keep: 2, ..FuzzConfig::default() };
        let rule = Rule::new(magnn_core::Concept::Top, "A1");
        let report = fuzz_soundness(&m, &rule, &cfg).unwrap();
        for v in &report.violations {
            let (d, f) = v.shrunk.clone().unwrap();
            prop_assert!(immediate_consequences(&rule, &d).contains(&f));
            prop_assert!(!apply(&m, &d).unwrap().contains(&f));
            prop_assert!(d.len() <= v.dataset.len());
            // Local minimality: no single fact can go.
            for g in d.iter() {
                let mut smaller = d.clone();
                smaller.remove(g);
                let still = immediate_consequences(&rule, &smaller).contains(&f) && !apply(&m, &smaller).unwrap().contains(&f);
                prop_assert!(!still);
            }
            prop_assert_eq!(shrink_counterexample(&m, &rule, &d, &f).unwrap().0, d);
        }
    }

    #[test]
    fn explanations_derive_their_fact(d in arb_dataset(5, 14), seed in 0u64..1000, dir in arb_direction()) {
        let m = model_for(seed, 2, dir);
        let out = apply(&m, &d).unwrap();
        for f in out.iter().take(4) {
            let e = explain(&m, &d, f).unwrap();
            prop_assert!(immediate_consequences(&e.rule, &d).contains(f));
            prop_assert!(naive_consequences(&e.rule, &d).contains(f));
            prop_assert!(e.rule.body.depth() <= m.depth());
        }
    }

    #[test]
    fn restricted_verdicts_match_direct_definition(seed in 0u64..10_000, d in arb_dataset(4, 12)) {
        // A sound rule never fires where the model is silent.
        let m = model_for(seed, 1, Direction::Out);
        let out = apply(&m, &d).unwrap();
        for r in restricted_candidates(&m.signature, Direction::Out) {
            if !check_restricted(&m, &r).unwrap().sound {
                continue;
            }
            let RestrictedRule { head, unary, exist } = &r;
            let exist: BTreeSet<_> = exist.clone();
            for x in d.constants() {
                if restricted_body_holds(&d, x, unary, &exist) {
                    prop_assert!(out.contains(&Fact::unary(head.clone(), x)), "{} at {}", r, x);
                }
            }
        }
    }
}
