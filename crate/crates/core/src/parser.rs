//! CYK-style parsing for SRF grammars.
//!
//! Subproblems `V_A(w[i..j))` are filled bottom-up by span length and, within
//! a span, by ascending nonterminal, which makes chain rules (always to a
//! lower nonterminal) read only finished cells. Log-probabilities are in
//! base 2.

use thiserror::Error;

use crate::alphabet::{Base, BasePair, Mark, Terminal};
use crate::grammar::{ExpandedGrammar, Nt, Rhs, RuleSet};

#[derive(Debug, Error, PartialEq)]
pub enum ParserError {
    #[error("rule probabilities: {0}")]
    ProbabilityInvalid(String),
    #[error("malformed derivation at step {step}: {msg}")]
    MalformedDerivation { step: usize, msg: String },
    #[error("no derivation exists for the input")]
    Unparseable,
}

/// How word symbols are compared with rule terminals.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum MatchMode {
    /// Dot-bracket symbols only.
    Structure,
    /// Base and dot-bracket symbol.
    Joint,
    /// Bases only; the structure is left to the parser.
    Sequence,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Symbol {
    pub base: Option<Base>,
    pub mark: Option<Mark>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Word {
    mode: MatchMode,
    symbols: Vec<Symbol>,
}

impl Word {
    pub fn structure(marks: &[Mark]) -> Word {
        Word {
            mode: MatchMode::Structure,
            symbols: marks.iter().map(|&m| Symbol { base: None, mark: Some(m) }).collect(),
        }
    }

    pub fn joint(sequence: &[Base], structure: &[Mark]) -> Word {
        assert_eq!(sequence.len(), structure.len(), "sequence and structure lengths differ");
        Word {
            mode: MatchMode::Joint,
            symbols: sequence
                .iter()
                .zip(structure)
                .map(|(&b, &m)| Symbol { base: Some(b), mark: Some(m) })
                .collect(),
        }
    }

    pub fn sequence(sequence: &[Base]) -> Word {
        Word {
            mode: MatchMode::Sequence,
            symbols: sequence.iter().map(|&b| Symbol { base: Some(b), mark: None }).collect(),
        }
    }

    pub fn mode(&self) -> MatchMode {
        self.mode
    }

    pub fn symbols(&self) -> &[Symbol] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }
}

/// Leftmost derivation as a sequence of rule ids.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Default)]
pub struct Derivation {
    pub rule_ids: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ViterbiResult {
    pub derivation: Derivation,
    pub log2_prob: f64,
}

/// One probability per rule id.
#[derive(Clone, Debug, PartialEq)]
pub struct RuleProbs(Vec<f64>);

impl RuleProbs {
    /// Uniform over the rules sharing each left-hand side.
    pub fn uniform(g: &impl RuleSet) -> RuleProbs {
        let mut p = vec![0.0; g.rule_count()];
        for group in g.rules_by_lhs() {
            for &id in &group {
                p[id] = 1.0 / group.len() as f64;
            }
        }
        RuleProbs(p)
    }

    /// Checks that each left-hand side's rules form a distribution.
    pub fn new(g: &impl RuleSet, probs: Vec<f64>) -> Result<RuleProbs, ParserError> {
        if probs.len() != g.rule_count() {
            return Err(ParserError::ProbabilityInvalid(format!(
                "{} probabilities for {} rules",
                probs.len(),
                g.rule_count()
            )));
        }
        if let Some(i) = probs.iter().position(|p| !p.is_finite() || *p < 0.0 || *p > 1.0) {
            return Err(ParserError::ProbabilityInvalid(format!("rule {i} has probability {}", probs[i])));
        }
        for (lhs, group) in g.rules_by_lhs().iter().enumerate() {
            if group.is_empty() {
                continue;
            }
            let sum: f64 = group.iter().map(|&i| probs[i]).sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(ParserError::ProbabilityInvalid(format!("rules of A{lhs} sum to {sum}")));
            }
        }
        Ok(RuleProbs(probs))
    }

    /// Trusted constructor for distributions built from counts.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> RuleProbs {
        RuleProbs(probs)
    }

    pub fn get(&self, id: usize) -> f64 {
        self.0[id]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Sum of log2 probabilities along a derivation.
    pub fn log2_prob(&self, d: &Derivation) -> f64 {
        d.rule_ids.iter().map(|&r| self.0[r].log2()).sum()
    }
}

const NONE: u32 = u32::MAX;

#[derive(Copy, Clone)]
struct Cand {
    value: f64,
    rule: u32,
    split: u32,
}

impl Cand {
    const EMPTY: Cand = Cand { value: f64::NEG_INFINITY, rule: NONE, split: 0 };

    /// Keeps the better of `self` and the candidate; near-equal values go to
    /// the smaller `(rule, split)`.
    #[inline]
    fn offer(&mut self, value: f64, rule: u32, split: u32) {
        if value == f64::NEG_INFINITY {
            return;
        }
        let tol = 1e-11 * (1.0 + self.value.abs());
        if self.rule == NONE
            || value > self.value + tol
            || (value >= self.value - tol && (rule, split) < (self.rule, self.split))
        {
            *self = Cand { value, rule, split };
        }
    }
}

struct SplitEntry {
    rule: u32,
    lhs: u32,
    left: u32,
    right: u32,
    logp: f64,
}

struct TermEntry {
    rule: u32,
    lhs: u32,
    inner: u32,
    base: Option<Base>,
    pair: Option<BasePair>,
    logp: f64,
}

struct ChainEntry {
    rule: u32,
    lhs: u32,
    target: u32,
    logp: f64,
}

/// A grammar with fixed rule probabilities, prepared for Viterbi parsing.
/// Rules with probability zero are dropped.
pub struct ViterbiParser {
    k: usize,
    start: Nt,
    splits: Vec<SplitEntry>,
    unpaired: Vec<TermEntry>,
    bonds: Vec<TermEntry>,
    chains: Vec<ChainEntry>,
    rhs: Vec<Rhs>,
}

fn mark_ok(sym: &Symbol, want: Mark) -> bool {
    sym.mark.is_none_or(|m| m == want)
}

fn base_ok(sym: Option<Base>, rule: Option<Base>) -> bool {
    match (sym, rule) {
        (Some(a), Some(b)) => a == b,
        _ => true,
    }
}

impl ViterbiParser {
    pub fn new(g: &impl RuleSet, probs: &RuleProbs) -> ViterbiParser {
        let mut p = ViterbiParser {
            k: g.nts(),
            start: g.start(),
            splits: Vec::new(),
            unpaired: Vec::new(),
            bonds: Vec::new(),
            chains: Vec::new(),
            rhs: Vec::with_capacity(g.rule_count()),
        };
        for id in 0..g.rule_count() {
            let prod = g.production(id);
            p.rhs.push(prod.rhs);
            let pr = probs.get(id);
            if pr <= 0.0 {
                continue;
            }
            let logp = pr.log2();
            let (rule, lhs) = (id as u32, prod.lhs.0);
            match prod.rhs {
                Rhs::Split(l, r) => p.splits.push(SplitEntry { rule, lhs, left: l.0, right: r.0, logp }),
                Rhs::Unpaired(base) => {
                    p.unpaired.push(TermEntry { rule, lhs, inner: 0, base, pair: None, logp })
                }
                Rhs::Bond(inner, pair) => {
                    p.bonds.push(TermEntry { rule, lhs, inner: inner.0, base: None, pair, logp })
                }
                Rhs::Chain(t) => p.chains.push(ChainEntry { rule, lhs, target: t.0, logp }),
            }
        }
        p.chains.sort_by_key(|c| (c.lhs, c.rule));
        p
    }

    /// Most probable leftmost derivation of `word`, or `None`.
    pub fn parse(&self, word: &Word) -> Option<ViterbiResult> {
        let n = word.len();
        if n == 0 {
            return None;
        }
        let k = self.k;
        let sym = word.symbols();
        let stride = n + 1;
        let cell = |i: usize, j: usize| (i * stride + j) * k;
        let mut table = vec![Cand::EMPTY; n * stride * k];
        #[cfg(debug_assertions)]
        let mut finalized = vec![0usize; n * stride];

        let mut best = vec![Cand::EMPTY; k];
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                best.fill(Cand::EMPTY);
                if len == 1 {
                    for u in &self.unpaired {
                        if mark_ok(&sym[i], Mark::Dot) && base_ok(sym[i].base, u.base) {
                            best[u.lhs as usize].offer(u.logp, u.rule, 0);
                        }
                    }
                } else {
                    for m in i + 1..j {
                        #[cfg(debug_assertions)]
                        debug_assert!(finalized[i * stride + m] == k && finalized[m * stride + j] == k);
                        let left = &table[cell(i, m)..cell(i, m) + k];
                        let right = &table[cell(m, j)..cell(m, j) + k];
                        for s in &self.splits {
                            let (l, r) = (left[s.left as usize].value, right[s.right as usize].value);
                            if l == f64::NEG_INFINITY || r == f64::NEG_INFINITY {
                                continue;
                            }
                            best[s.lhs as usize].offer(s.logp + l + r, s.rule, m as u32);
                        }
                    }
                    if len >= 3 && mark_ok(&sym[i], Mark::Open) && mark_ok(&sym[j - 1], Mark::Close) {
                        #[cfg(debug_assertions)]
                        debug_assert!(finalized[(i + 1) * stride + j - 1] == k);
                        let inner = cell(i + 1, j - 1);
                        for b in &self.bonds {
                            if let Some(pair) = b.pair {
                                if !base_ok(sym[i].base, Some(pair.0)) || !base_ok(sym[j - 1].base, Some(pair.1)) {
                                    continue;
                                }
                            }
                            let v = table[inner + b.inner as usize].value;
                            if v != f64::NEG_INFINITY {
                                best[b.lhs as usize].offer(b.logp + v, b.rule, 0);
                            }
                        }
                    }
                }
                let here = cell(i, j);
                // Chains are sorted by lhs, so every target is final before it is read.
                let mut next_chain = 0;
                for a in 0..k {
                    while next_chain < self.chains.len() && self.chains[next_chain].lhs as usize == a {
                        let c = &self.chains[next_chain];
                        #[cfg(debug_assertions)]
                        debug_assert!((c.target as usize) < finalized[i * stride + j]);
                        let v = table[here + c.target as usize].value;
                        if v != f64::NEG_INFINITY {
                            best[a].offer(c.logp + v, c.rule, 0);
                        }
                        next_chain += 1;
                    }
                    table[here + a] = best[a];
                    #[cfg(debug_assertions)]
                    {
                        finalized[i * stride + j] = a + 1;
                    }
                }
            }
        }

        let root = table[cell(0, n) + self.start.index()];
        if root.rule == NONE {
            return None;
        }
        let mut rule_ids = Vec::new();
        let mut stack = vec![(self.start.0, 0usize, n)];
        while let Some((a, i, j)) = stack.pop() {
            let c = table[cell(i, j) + a as usize];
            debug_assert!(c.rule != NONE);
            rule_ids.push(c.rule as usize);
            match self.rhs[c.rule as usize] {
                Rhs::Split(l, r) => {
                    let m = c.split as usize;
                    stack.push((r.0, m, j));
                    stack.push((l.0, i, m));
                }
                Rhs::Bond(inner, _) => stack.push((inner.0, i + 1, j - 1)),
                Rhs::Chain(t) => stack.push((t.0, i, j)),
                Rhs::Unpaired(_) => {}
            }
        }
        Some(ViterbiResult { derivation: Derivation { rule_ids }, log2_prob: root.value })
    }
}

pub fn viterbi_parse(g: &impl RuleSet, word: &Word, probs: &RuleProbs) -> Option<ViterbiResult> {
    ViterbiParser::new(g, probs).parse(word)
}

/// Boolean-semiring recognizer over the same recursion, one bit per
/// nonterminal.
pub struct Recognizer {
    k: usize,
    words: usize,
    start: Nt,
    splits: Vec<(usize, usize, usize)>,
    unpaired: Vec<(usize, Option<Base>)>,
    bonds: Vec<(usize, usize, Option<BasePair>)>,
    chains: Vec<(usize, usize)>,
}

impl Recognizer {
    pub fn new(g: &impl RuleSet) -> Recognizer {
        let mut r = Recognizer {
            k: g.nts(),
            words: g.nts().div_ceil(64),
            start: g.start(),
            splits: Vec::new(),
            unpaired: Vec::new(),
            bonds: Vec::new(),
            chains: Vec::new(),
        };
        for id in 0..g.rule_count() {
            let p = g.production(id);
            let a = p.lhs.index();
            match p.rhs {
                Rhs::Split(l, rr) => r.splits.push((a, l.index(), rr.index())),
                Rhs::Unpaired(b) => r.unpaired.push((a, b)),
                Rhs::Bond(inner, pair) => r.bonds.push((a, inner.index(), pair)),
                Rhs::Chain(t) => r.chains.push((a, t.index())),
            }
        }
        r.chains.sort();
        r
    }

    pub fn accepts(&self, word: &Word) -> bool {
        let n = word.len();
        if n == 0 {
            return false;
        }
        let (w, stride) = (self.words, n + 1);
        let sym = word.symbols();
        let cell = |i: usize, j: usize| (i * stride + j) * w;
        let mut table = vec![0u64; n * stride * w];
        let has = |t: &[u64], c: usize, a: usize| t[c + a / 64] >> (a % 64) & 1 == 1;
        let set = |t: &mut [u64], c: usize, a: usize| t[c + a / 64] |= 1 << (a % 64);
        for len in 1..=n {
            for i in 0..=n - len {
                let j = i + len;
                let here = cell(i, j);
                if len == 1 {
                    if mark_ok(&sym[i], Mark::Dot) {
                        for &(a, b) in &self.unpaired {
                            if base_ok(sym[i].base, b) {
                                set(&mut table, here, a);
                            }
                        }
                    }
                } else {
                    for m in i + 1..j {
                        let (lc, rc) = (cell(i, m), cell(m, j));
                        if table[lc..lc + w].iter().all(|&x| x == 0) || table[rc..rc + w].iter().all(|&x| x == 0) {
                            continue;
                        }
                        for &(a, l, r) in &self.splits {
                            if has(&table, lc, l) && has(&table, rc, r) {
                                set(&mut table, here, a);
                            }
                        }
                    }
                    if len >= 3 && mark_ok(&sym[i], Mark::Open) && mark_ok(&sym[j - 1], Mark::Close) {
                        let inner = cell(i + 1, j - 1);
                        for &(a, b, pair) in &self.bonds {
                            let pair_ok = pair.is_none_or(|p| {
                                base_ok(sym[i].base, Some(p.0)) && base_ok(sym[j - 1].base, Some(p.1))
                            });
                            if pair_ok && has(&table, inner, b) {
                                set(&mut table, here, a);
                            }
                        }
                    }
                }
                for &(a, t) in &self.chains {
                    if has(&table, here, t) {
                        set(&mut table, here, a);
                    }
                }
            }
        }
        debug_assert!(self.start.index() < self.k);
        has(&table, cell(0, n), self.start.index())
    }
}

/// Whether `g` derives `word`.
pub fn parseable(g: &impl RuleSet, word: &Word) -> bool {
    Recognizer::new(g).accepts(word)
}

enum Item {
    Nt(Nt),
    T(Terminal),
}

/// Applies a derivation leftmost from the start symbol.
pub fn replay(g: &impl RuleSet, d: &Derivation) -> Result<Vec<Terminal>, ParserError> {
    let mut out = Vec::new();
    let mut stack = vec![Item::Nt(g.start())];
    let malformed = |step: usize, msg: String| ParserError::MalformedDerivation { step, msg };
    for (step, &id) in d.rule_ids.iter().enumerate() {
        if id >= g.rule_count() {
            return Err(malformed(step, format!("unknown rule id {id}")));
        }
        let leftmost = loop {
            match stack.pop() {
                Some(Item::T(t)) => out.push(t),
                Some(Item::Nt(a)) => break a,
                None => return Err(malformed(step, "no nonterminal left to rewrite".into())),
            }
        };
        let prod = g.production(id);
        if prod.lhs != leftmost {
            return Err(malformed(step, format!("rule {id} rewrites {} but leftmost is {leftmost}", prod.lhs)));
        }
        match prod.rhs {
            Rhs::Split(l, r) => {
                stack.push(Item::Nt(r));
                stack.push(Item::Nt(l));
            }
            Rhs::Unpaired(base) => stack.push(Item::T(Terminal { base, mark: Mark::Dot })),
            Rhs::Bond(inner, pair) => {
                stack.push(Item::T(Terminal { base: pair.map(|p| p.1), mark: Mark::Close }));
                stack.push(Item::Nt(inner));
                stack.push(Item::T(Terminal { base: pair.map(|p| p.0), mark: Mark::Open }));
            }
            Rhs::Chain(t) => stack.push(Item::Nt(t)),
        }
    }
    while let Some(item) = stack.pop() {
        match item {
            Item::T(t) => out.push(t),
            Item::Nt(a) => {
                return Err(malformed(d.rule_ids.len(), format!("derivation ends with {a} unexpanded")))
            }
        }
    }
    Ok(out)
}

/// Most likely structure for a sequence under a prediction grammar.
pub fn predict(g: &ExpandedGrammar, probs: &RuleProbs, sequence: &[Base]) -> Result<Vec<Mark>, ParserError> {
    let res = viterbi_parse(g, &Word::sequence(sequence), probs).ok_or(ParserError::Unparseable)?;
    Ok(replay(g, &res.derivation)?.into_iter().map(|t| t.mark).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::alphabet::parse_marks;
    use crate::grammar::{expand, fixtures, ExpansionMode};

    fn sword(s: &str) -> Word {
        Word::structure(&parse_marks(s).unwrap())
    }

    #[test]
    fn single_dot() {
        let g = fixtures::grammar_1nt();
        let r = viterbi_parse(&g, &sword("."), &RuleProbs::uniform(&g)).unwrap();
        assert_eq!(r.derivation.rule_ids, [1]);
        assert!((r.log2_prob + 3f64.log2()).abs() < 1e-12);
        assert!(parseable(&g, &sword(".")));
    }

    #[test]
    fn hairpin_and_pair_of_dots() {
        let g = fixtures::grammar_1nt();
        let p = RuleProbs::uniform(&g);
        let r = viterbi_parse(&g, &sword("(.)"), &p).unwrap();
        assert_eq!(r.derivation.rule_ids, [2, 1]);
        assert!((r.log2_prob + 2.0 * 3f64.log2()).abs() < 1e-12);
        let r = viterbi_parse(&g, &sword(".."), &p).unwrap();
        assert_eq!(r.derivation.rule_ids, [0, 1, 1]);
        assert!((r.log2_prob + 3.0 * 3f64.log2()).abs() < 1e-12);
    }

    #[test]
    fn empty_hairpin_never_parses() {
        for (_, g) in fixtures::all() {
            assert!(viterbi_parse(&g, &sword("()"), &RuleProbs::uniform(&g)).is_none());
            assert!(!parseable(&g, &sword("()")));
        }
    }

    #[test]
    fn tie_break_prefers_smallest_split() {
        let g = fixtures::grammar_1nt();
        let r = viterbi_parse(&g, &sword("..."), &RuleProbs::uniform(&g)).unwrap();
        // A -> A A at split 1 first: . (..)
        assert_eq!(r.derivation.rule_ids, [0, 1, 0, 1, 1]);
    }

    #[test]
    fn zero_probability_rule_is_unusable() {
        let g = fixtures::grammar_1nt();
        let p = RuleProbs::new(&g, vec![0.5, 0.5, 0.0]).unwrap();
        assert!(viterbi_parse(&g, &sword("(.)"), &p).is_none());
        assert!(viterbi_parse(&g, &sword(".."), &p).is_some());
    }

    #[test]
    fn invalid_probabilities() {
        let g = fixtures::grammar_1nt();
        assert!(matches!(RuleProbs::new(&g, vec![0.5, 0.5, 0.5]), Err(ParserError::ProbabilityInvalid(_))));
        assert!(matches!(RuleProbs::new(&g, vec![0.5, 0.5]), Err(ParserError::ProbabilityInvalid(_))));
        assert!(matches!(RuleProbs::new(&g, vec![1.5, -0.5, 0.0]), Err(ParserError::ProbabilityInvalid(_))));
    }

    #[test]
    fn replay_examples() {
        let g = fixtures::grammar_1nt();
        let w = replay(&g, &Derivation { rule_ids: vec![2, 1] }).unwrap();
        let marks: Vec<Mark> = w.iter().map(|t| t.mark).collect();
        assert_eq!(marks, parse_marks("(.)").unwrap());
        assert!(matches!(
            replay(&g, &Derivation { rule_ids: vec![1, 1] }),
            Err(ParserError::MalformedDerivation { step: 1, .. })
        ));
        assert!(matches!(
            replay(&g, &Derivation { rule_ids: vec![0, 1] }),
            Err(ParserError::MalformedDerivation { step: 2, .. })
        ));
        assert!(matches!(
            replay(&g, &Derivation { rule_ids: vec![7] }),
            Err(ParserError::MalformedDerivation { step: 0, .. })
        ));
    }

    #[test]
    fn dagger_roundtrip() {
        let g = fixtures::load("g_dagger_6_10_pruned");
        let w = sword("(.)");
        let r = viterbi_parse(&g, &w, &RuleProbs::uniform(&g)).unwrap();
        let marks: Vec<Mark> = replay(&g, &r.derivation).unwrap().iter().map(|t| t.mark).collect();
        assert_eq!(marks, parse_marks("(.)").unwrap());
    }

    #[test]
    fn joint_mode_checks_bases() {
        let e = expand(&fixtures::grammar_1nt(), ExpansionMode::Canonical6);
        let p = RuleProbs::uniform(&e);
        let marks = parse_marks("(.)").unwrap();
        assert!(viterbi_parse(&e, &Word::joint(&[Base::G, Base::A, Base::C], &marks), &p).is_some());
        assert!(viterbi_parse(&e, &Word::joint(&[Base::A, Base::A, Base::C], &marks), &p).is_none());
        let all = expand(&fixtures::grammar_1nt(), ExpansionMode::All16);
        assert!(viterbi_parse(&all, &Word::joint(&[Base::A, Base::A, Base::C], &marks), &RuleProbs::uniform(&all))
            .is_some());
    }

    #[test]
    fn predict_short_sequences() {
        let e = expand(&fixtures::grammar_1nt(), ExpansionMode::Canonical6);
        let p = RuleProbs::uniform(&e);
        assert_eq!(predict(&e, &p, &[Base::A]).unwrap(), [Mark::Dot]);
        assert_eq!(predict(&e, &p, &[Base::A, Base::U]).unwrap(), [Mark::Dot, Mark::Dot]);
        assert_eq!(predict(&e, &p, &[]), Err(ParserError::Unparseable));
    }
}
