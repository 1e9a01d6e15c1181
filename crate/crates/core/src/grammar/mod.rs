//! Grammars in Stochastic RNA Form (SRF).
//!
//! An SRF grammar over nonterminals `A0 < A1 < … < A(k-1)` has start symbol
//! `A(k-1)` and only four rule shapes:
//!
//! * pair-split `Ai -> Aj Al`
//! * unpaired `Ai -> .`
//! * bond `Ai -> ( Aj )`
//! * chain `Ai -> Aj` with `j < i`
//!
//! Rules are kept in a canonical order: every pair-split sorted by
//! `(lhs, left, right)`, then unpaired by `lhs`, then bonds by `(lhs, inner)`,
//! then chains by `(lhs, target)`. The same order lays out
//! [`rule_universe`], so a grammar's rules map to a strictly increasing
//! sequence of universe indices.

mod expand;
pub mod fixtures;
mod text;

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::fmt;

use thiserror::Error;

use crate::alphabet::{Base, BasePair};

pub use expand::{expand, ExpandedBody, ExpandedGrammar, ExpandedRule, ExpansionMode};
pub use text::{format_grammar, parse_grammar};

/// Nonterminal `A<index>`.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Nt(pub u32);

impl Nt {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

impl fmt::Display for Nt {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "A{}", self.0)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub enum RuleBody {
    PairSplit(Nt, Nt),
    Unpaired,
    Bond(Nt),
    Chain(Nt),
}

impl RuleBody {
    fn kind_rank(&self) -> u8 {
        match self {
            RuleBody::PairSplit(..) => 0,
            RuleBody::Unpaired => 1,
            RuleBody::Bond(_) => 2,
            RuleBody::Chain(_) => 3,
        }
    }

    fn operands(&self) -> (u32, u32) {
        match *self {
            RuleBody::PairSplit(l, r) => (l.0, r.0),
            RuleBody::Unpaired => (0, 0),
            RuleBody::Bond(n) | RuleBody::Chain(n) => (n.0, 0),
        }
    }

    /// Nonterminals on the right-hand side, left to right.
    pub fn nonterminals(&self) -> impl Iterator<Item = Nt> {
        let (a, b) = match *self {
            RuleBody::PairSplit(l, r) => (Some(l), Some(r)),
            RuleBody::Unpaired => (None, None),
            RuleBody::Bond(n) | RuleBody::Chain(n) => (Some(n), None),
        };
        a.into_iter().chain(b)
    }
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Hash)]
pub struct Rule {
    pub lhs: Nt,
    pub body: RuleBody,
}

impl Rule {
    pub fn pair_split(lhs: u32, left: u32, right: u32) -> Rule {
        Rule { lhs: Nt(lhs), body: RuleBody::PairSplit(Nt(left), Nt(right)) }
    }

    pub fn unpaired(lhs: u32) -> Rule {
        Rule { lhs: Nt(lhs), body: RuleBody::Unpaired }
    }

    pub fn bond(lhs: u32, inner: u32) -> Rule {
        Rule { lhs: Nt(lhs), body: RuleBody::Bond(Nt(inner)) }
    }

    pub fn chain(lhs: u32, target: u32) -> Rule {
        Rule { lhs: Nt(lhs), body: RuleBody::Chain(Nt(target)) }
    }

    fn sort_key(&self) -> (u8, u32, u32, u32) {
        let (a, b) = self.body.operands();
        (self.body.kind_rank(), self.lhs.0, a, b)
    }

    fn max_index(&self) -> u32 {
        self.body.nonterminals().map(|n| n.0).fold(self.lhs.0, u32::max)
    }
}

impl Ord for Rule {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sort_key().cmp(&other.sort_key())
    }
}

impl PartialOrd for Rule {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.body {
            RuleBody::PairSplit(l, r) => write!(f, "{} -> {} {}", self.lhs, l, r),
            RuleBody::Unpaired => write!(f, "{} -> u", self.lhs),
            RuleBody::Bond(n) => write!(f, "{} -> ( {} )", self.lhs, n),
            RuleBody::Chain(n) => write!(f, "{} -> {}", self.lhs, n),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GrammarError {
    #[error("a grammar needs at least one nonterminal")]
    NoNonterminals,
    #[error("rule `{rule}` uses a nonterminal outside A0..A{}", .k - 1)]
    IndexOutOfRange { rule: Rule, k: usize },
    #[error("chain rule `{0}` must go to a lower nonterminal")]
    ChainNotDescending(Rule),
    #[error("duplicate rule `{0}`")]
    DuplicateRule(Rule),
    #[error("start symbol generates no terminal word")]
    StartSymbolDead,
    #[error("rule index {index} outside a universe of {size} rules")]
    UniverseIndex { index: usize, size: usize },
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
}

/// A validated SRF grammar: `k` nonterminals, canonical deduplicated rules,
/// start symbol `A(k-1)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SrfGrammar {
    k: usize,
    rules: Vec<Rule>,
}

/// Checks `rules` against the SRF shapes for `k` nonterminals and returns
/// them in canonical order.
pub fn validate_srf(k: usize, rules: impl IntoIterator<Item = Rule>) -> Result<SrfGrammar, GrammarError> {
    if k == 0 {
        return Err(GrammarError::NoNonterminals);
    }
    let mut set = BTreeSet::new();
    for rule in rules {
        if rule.max_index() as usize >= k {
            return Err(GrammarError::IndexOutOfRange { rule, k });
        }
        if let RuleBody::Chain(t) = rule.body {
            if t >= rule.lhs {
                return Err(GrammarError::ChainNotDescending(rule));
            }
        }
        if !set.insert(rule) {
            return Err(GrammarError::DuplicateRule(rule));
        }
    }
    Ok(SrfGrammar { k, rules: set.into_iter().collect() })
}

impl SrfGrammar {
    /// Number of nonterminals.
    pub fn nts(&self) -> usize {
        self.k
    }

    pub fn start(&self) -> Nt {
        Nt(self.k as u32 - 1)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn len(&self) -> usize {
        self.rules.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rules.is_empty()
    }

    /// Positions of this grammar's rules inside `rule_universe(k)`,
    /// strictly increasing.
    pub fn universe_indices(&self) -> Vec<usize> {
        self.rules.iter().map(|r| universe_index(self.k, r)).collect()
    }

    /// Builds the grammar whose rules are the given positions of
    /// `rule_universe(k)`.
    pub fn from_universe_indices(k: usize, indices: &[usize]) -> Result<SrfGrammar, GrammarError> {
        let mut rules = Vec::with_capacity(indices.len());
        for &i in indices {
            match universe_rule(k, i) {
                Some(r) => rules.push(r),
                None => return Err(GrammarError::UniverseIndex { index: i, size: universe_size(k) }),
            }
        }
        validate_srf(k, rules)
    }
}

impl fmt::Display for SrfGrammar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_grammar(self))
    }
}

/// `k³ + k + k² + k(k-1)/2`.
pub fn universe_size(k: usize) -> usize {
    k * k * k + k + k * k + k * (k.saturating_sub(1)) / 2
}

/// Position of `rule` in `rule_universe(k)`; the rule must be valid for `k`.
pub fn universe_index(k: usize, rule: &Rule) -> usize {
    let lhs = rule.lhs.index();
    match rule.body {
        RuleBody::PairSplit(l, r) => (lhs * k + l.index()) * k + r.index(),
        RuleBody::Unpaired => k * k * k + lhs,
        RuleBody::Bond(n) => k * k * k + k + lhs * k + n.index(),
        RuleBody::Chain(t) => k * k * k + k + k * k + lhs * (lhs - 1) / 2 + t.index(),
    }
}

/// Inverse of [`universe_index`].
pub fn universe_rule(k: usize, index: usize) -> Option<Rule> {
    let cube = k * k * k;
    let u32_of = |x: usize| x as u32;
    if index < cube {
        return Some(Rule::pair_split(u32_of(index / (k * k)), u32_of(index / k % k), u32_of(index % k)));
    }
    let i = index - cube;
    if i < k {
        return Some(Rule::unpaired(u32_of(i)));
    }
    let i = i - k;
    if i < k * k {
        return Some(Rule::bond(u32_of(i / k), u32_of(i % k)));
    }
    let mut i = i - k * k;
    for lhs in 1..k {
        if i < lhs {
            return Some(Rule::chain(u32_of(lhs), u32_of(i)));
        }
        i -= lhs;
    }
    None
}

/// Every SRF rule over `k` nonterminals, in canonical order.
pub fn rule_universe(k: usize) -> Vec<Rule> {
    let k32 = k as u32;
    let mut out = Vec::with_capacity(universe_size(k));
    for a in 0..k32 {
        for b in 0..k32 {
            for c in 0..k32 {
                out.push(Rule::pair_split(a, b, c));
            }
        }
    }
    out.extend((0..k32).map(Rule::unpaired));
    for a in 0..k32 {
        out.extend((0..k32).map(|b| Rule::bond(a, b)));
    }
    for a in 0..k32 {
        out.extend((0..a).map(|b| Rule::chain(a, b)));
    }
    out
}

/// Removes non-productive and unreachable nonterminals, renumbering the
/// survivors in their original relative order.
pub fn prune_dead(g: &SrfGrammar) -> Result<SrfGrammar, GrammarError> {
    let k = g.nts();
    let mut productive = vec![false; k];
    loop {
        let mut changed = false;
        for rule in g.rules() {
            if productive[rule.lhs.index()] {
                continue;
            }
            if rule.body.nonterminals().all(|n| productive[n.index()]) {
                productive[rule.lhs.index()] = true;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    if !productive[g.start().index()] {
        return Err(GrammarError::StartSymbolDead);
    }
    let live: Vec<&Rule> = g
        .rules()
        .iter()
        .filter(|r| productive[r.lhs.index()] && r.body.nonterminals().all(|n| productive[n.index()]))
        .collect();

    let mut reachable = vec![false; k];
    reachable[g.start().index()] = true;
    let mut stack = vec![g.start()];
    while let Some(a) = stack.pop() {
        for rule in live.iter().filter(|r| r.lhs == a) {
            for n in rule.body.nonterminals() {
                if !reachable[n.index()] {
                    reachable[n.index()] = true;
                    stack.push(n);
                }
            }
        }
    }

    let mut renumber = vec![None; k];
    let mut next = 0u32;
    for i in 0..k {
        if reachable[i] {
            renumber[i] = Some(Nt(next));
            next += 1;
        }
    }
    let map = |n: Nt| renumber[n.index()].expect("reachable through a live rule");
    let rules = live.iter().filter(|r| reachable[r.lhs.index()]).map(|r| Rule {
        lhs: map(r.lhs),
        body: match r.body {
            RuleBody::PairSplit(l, rr) => RuleBody::PairSplit(map(l), map(rr)),
            RuleBody::Unpaired => RuleBody::Unpaired,
            RuleBody::Bond(n) => RuleBody::Bond(map(n)),
            RuleBody::Chain(t) => RuleBody::Chain(map(t)),
        },
    });
    validate_srf(next as usize, rules)
}

/// Right-hand side seen by the parser. Base annotations are absent for
/// plain structure grammars and present after expansion.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum Rhs {
    Split(Nt, Nt),
    Unpaired(Option<Base>),
    Bond(Nt, Option<BasePair>),
    Chain(Nt),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: Nt,
    pub rhs: Rhs,
}

/// A rule list indexed by rule id, shared by structure and expanded grammars.
pub trait RuleSet {
    fn nts(&self) -> usize;
    fn rule_count(&self) -> usize;
    fn production(&self, id: usize) -> Production;

    fn start(&self) -> Nt {
        Nt(self.nts() as u32 - 1)
    }

    /// Rule ids grouped by left-hand side, ascending within each group.
    fn rules_by_lhs(&self) -> Vec<Vec<usize>> {
        let mut groups = vec![Vec::new(); self.nts()];
        for id in 0..self.rule_count() {
            groups[self.production(id).lhs.index()].push(id);
        }
        groups
    }
}

impl RuleSet for SrfGrammar {
    fn nts(&self) -> usize {
        self.k
    }

    fn rule_count(&self) -> usize {
        self.rules.len()
    }

    fn production(&self, id: usize) -> Production {
        let r = self.rules[id];
        let rhs = match r.body {
            RuleBody::PairSplit(l, rr) => Rhs::Split(l, rr),
            RuleBody::Unpaired => Rhs::Unpaired(None),
            RuleBody::Bond(n) => Rhs::Bond(n, None),
            RuleBody::Chain(t) => Rhs::Chain(t),
        };
        Production { lhs: r.lhs, rhs }
    }
}
