use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use srf_core::codec::{AdaptiveScope, Codec, ModelSpec};
use srf_core::data::synth::{stem_loop, uniform_records};
use srf_core::data::{load_dataset, pair_table, parse_dataset, save_dataset, structure_from_pairs, write_dataset, LoadOptions};
use srf_core::grammar::{expand, fixtures, ExpansionMode};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn written_datasets_reload_identically(seed in any::<u64>(), n in 1usize..12, len in 1usize..90) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let recs = uniform_records(n, len, &mut rng);
        let text = write_dataset(&recs);
        let ds = parse_dataset(&text, LoadOptions::default()).unwrap();
        prop_assert_eq!(&ds.records, &recs);
        prop_assert_eq!(write_dataset(&ds.records), text);
        for r in &recs {
            prop_assert_eq!(structure_from_pairs(&pair_table(&r.structure).unwrap()), r.structure.clone());
        }
    }

    #[test]
    fn synthetic_records_parse_under_the_trivial_grammar(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut recs = uniform_records(5, 50, &mut rng);
        recs.extend((0..5).map(|i| stem_loop(&format!("s{i}"), 20, 120, &mut rng)));
        let e = expand(&fixtures::grammar_1nt(), ExpansionMode::Canonical6);
        let codec = Codec::new(&e, ModelSpec::Adaptive(AdaptiveScope::Record)).unwrap();
        for r in &recs {
            prop_assert!(r.non_canonical_pair().is_none());
            prop_assert!(codec.derivation(r).is_ok(), "{}", r.id);
        }
    }
}

#[test]
fn save_and_load_through_a_file() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let recs = uniform_records(7, 33, &mut rng);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("set.fa");
    save_dataset(&path, &recs).unwrap();
    let ds = load_dataset(&path, LoadOptions::default()).unwrap();
    assert_eq!(ds.records, recs);
    assert!(ds.skipped.is_empty());
}
