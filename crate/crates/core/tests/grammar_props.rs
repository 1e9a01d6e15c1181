mod common;

use proptest::prelude::*;
use srf_core::alphabet::Mark;
use srf_core::grammar::{
    expand, prune_dead, rule_universe, universe_index, universe_size, validate_srf, ExpansionMode, Rule, RuleSet,
};
use srf_core::parser::{Recognizer, Word};

use common::{all_words, grammar_from_indices};

/// Candidate rules by exhaustive shape enumeration, filtered by validity.
fn universe_by_filter(k: usize) -> Vec<Rule> {
    let k32 = k as u32;
    let mut out = Vec::new();
    for a in 0..k32 {
        for b in 0..k32 {
            for c in 0..k32 {
                out.push(Rule::pair_split(a, b, c));
            }
            out.push(Rule::bond(a, b));
            out.push(Rule::chain(a, b));
        }
        out.push(Rule::unpaired(a));
    }
    out.into_iter().filter(|r| validate_srf(k, [*r]).is_ok()).collect()
}

#[test]
fn universe_size_matches_shape_count() {
    for k in 1..=12 {
        let expected = k * k * k + k + k * k + k * (k - 1) / 2;
        assert_eq!(universe_size(k), expected, "k = {k}");
        let u = rule_universe(k);
        assert_eq!(u.len(), expected);
        let mut filtered = universe_by_filter(k);
        filtered.sort();
        let mut sorted = u.clone();
        sorted.sort();
        assert_eq!(sorted, filtered);
        for (i, r) in u.iter().enumerate() {
            assert_eq!(universe_index(k, r), i);
        }
    }
    assert_eq!([1, 2, 3].map(universe_size), [3, 15, 42]);
}

#[test]
fn whole_universe_is_a_valid_grammar() {
    for k in 1..=8 {
        let g = validate_srf(k, rule_universe(k)).unwrap();
        assert_eq!(g.len(), universe_size(k));
    }
}

fn accepts_structure(rec: &Recognizer, w: &[Mark]) -> bool {
    rec.accepts(&Word::structure(w))
}

fn arb_grammar() -> impl Strategy<Value = srf_core::grammar::SrfGrammar> {
    (1usize..=3)
        .prop_flat_map(|k| (Just(k), proptest::collection::vec(0..universe_size(k), 1..=8)))
        .prop_map(|(k, idx)| grammar_from_indices(k, idx))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn universe_indices_roundtrip(g in arb_grammar()) {
        let idx = g.universe_indices();
        prop_assert_eq!(srf_core::grammar::SrfGrammar::from_universe_indices(g.nts(), &idx).unwrap(), g);
    }

    #[test]
    fn expansion_projects_back_to_the_grammar(g in arb_grammar(), all16 in any::<bool>()) {
        let mode = if all16 { ExpansionMode::All16 } else { ExpansionMode::Canonical6 };
        let e = expand(&g, mode);
        prop_assert_eq!(e.nts(), g.nts());
        let per_bond = if all16 { 16 } else { 6 };
        let expected: usize = g
            .rules()
            .iter()
            .map(|r| match r.body {
                srf_core::grammar::RuleBody::Unpaired => 4,
                srf_core::grammar::RuleBody::Bond(_) => per_bond,
                _ => 1,
            })
            .sum();
        prop_assert_eq!(e.rule_count(), expected);
        // the structure language does not change
        let a = Recognizer::new(&g);
        let b = Recognizer::new(&e);
        for w in all_words(6) {
            prop_assert_eq!(accepts_structure(&a, &w), accepts_structure(&b, &w));
        }
    }

    #[test]
    fn pruning_is_idempotent_and_keeps_the_language(g in arb_grammar()) {
        match prune_dead(&g) {
            Ok(p) => {
                prop_assert!(p.nts() <= g.nts());
                prop_assert!(p.len() <= g.len());
                prop_assert_eq!(prune_dead(&p).unwrap(), p.clone());
                let a = Recognizer::new(&g);
                let b = Recognizer::new(&p);
                for w in all_words(8) {
                    prop_assert_eq!(accepts_structure(&a, &w), accepts_structure(&b, &w));
                }
            }
            Err(_) => {
                let a = Recognizer::new(&g);
                prop_assert!(all_words(8).iter().all(|w| !accepts_structure(&a, w)));
            }
        }
    }
}
