//! Grammars bundled from `grammars/` at the repository root.

use super::{parse_grammar, SrfGrammar};

/// `(name, file contents)` for every bundled grammar.
pub const ALL: &[(&str, &str)] = &[
    ("grammar_1nt", include_str!("../../../../grammars/grammar_1nt.txt")),
    ("g_liu", include_str!("../../../../grammars/g_liu.txt")),
    ("g_star_2_5", include_str!("../../../../grammars/g_star_2_5.txt")),
    ("g_star_2_6", include_str!("../../../../grammars/g_star_2_6.txt")),
    ("g5_dowell_eddy", include_str!("../../../../grammars/g5_dowell_eddy.txt")),
    ("g_star_3_6", include_str!("../../../../grammars/g_star_3_6.txt")),
    ("g_star_3_7", include_str!("../../../../grammars/g_star_3_7.txt")),
    ("g_dagger_6_10", include_str!("../../../../grammars/g_dagger_6_10.txt")),
    ("g_dagger_6_10_pruned", include_str!("../../../../grammars/g_dagger_6_10_pruned.txt")),
];

/// Loads a bundled grammar by file stem. Panics on unknown names.
pub fn load(name: &str) -> SrfGrammar {
    let (_, src) = ALL
        .iter()
        .find(|(n, _)| *n == name)
        .unwrap_or_else(|| panic!("no bundled grammar named {name}"));
    parse_grammar(src).unwrap_or_else(|e| panic!("bundled grammar {name} is invalid: {e}"))
}

pub fn all() -> Vec<(&'static str, SrfGrammar)> {
    ALL.iter().map(|(n, _)| (*n, load(n))).collect()
}

pub fn grammar_1nt() -> SrfGrammar {
    load("grammar_1nt")
}
