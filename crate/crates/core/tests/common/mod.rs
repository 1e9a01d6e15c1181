// Shared helpers for the integration tests. Included with `mod common;`.
#![allow(dead_code)]

use srf_core::alphabet::Mark;
use srf_core::grammar::{universe_rule, universe_size, Rule, RuleBody, SrfGrammar};

/// Every string over `( ) .` of length `1..=max_len`.
pub fn all_words(max_len: usize) -> Vec<Vec<Mark>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<Mark>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for w in &layer {
            for m in [Mark::Open, Mark::Close, Mark::Dot] {
                let mut v = w.clone();
                v.push(m);
                next.push(v);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Words without an empty hairpin `()`.
pub fn words_without_empty_hairpin(max_len: usize) -> Vec<Vec<Mark>> {
    all_words(max_len)
        .into_iter()
        .filter(|w| !w.windows(2).any(|p| p[0] == Mark::Open && p[1] == Mark::Close))
        .collect()
}

pub fn grammar_from_indices(k: usize, mut idx: Vec<usize>) -> SrfGrammar {
    idx.sort_unstable();
    idx.dedup();
    SrfGrammar::from_universe_indices(k, &idx).unwrap()
}

pub fn universe(k: usize) -> Vec<Rule> {
    (0..universe_size(k)).map(|i| universe_rule(k, i).unwrap()).collect()
}

/// Language membership by brute-force leftmost derivation: the best
/// log2-probability of a derivation of `w` with `prob(rule)`, or `None`.
pub fn brute_force_best(g: &SrfGrammar, w: &[Mark], prob: &dyn Fn(&Rule) -> f64) -> Option<f64> {
    #[derive(Clone, Copy)]
    enum Item {
        Nt(usize),
        Close,
    }
    fn go(
        g: &SrfGrammar,
        w: &[Mark],
        prob: &dyn Fn(&Rule) -> f64,
        pos: usize,
        stack: &mut Vec<Item>,
        acc: f64,
        best: &mut Option<f64>,
    ) {
        // each pending item yields at least one symbol
        if stack.len() > w.len() - pos {
            return;
        }
        let Some(top) = stack.pop() else {
            if pos == w.len() && best.is_none_or(|b| acc > b) {
                *best = Some(acc);
            }
            return;
        };
        match top {
            Item::Close => {
                if w.get(pos) == Some(&Mark::Close) {
                    go(g, w, prob, pos + 1, stack, acc, best);
                }
            }
            Item::Nt(a) => {
                for rule in g.rules().iter().filter(|r| r.lhs.index() == a) {
                    let lp = acc + prob(rule).log2();
                    match rule.body {
                        RuleBody::PairSplit(l, r) => {
                            stack.push(Item::Nt(r.index()));
                            stack.push(Item::Nt(l.index()));
                            go(g, w, prob, pos, stack, lp, best);
                            stack.pop();
                            stack.pop();
                        }
                        RuleBody::Unpaired => {
                            if w.get(pos) == Some(&Mark::Dot) {
                                go(g, w, prob, pos + 1, stack, lp, best);
                            }
                        }
                        RuleBody::Bond(b) => {
                            if w.get(pos) == Some(&Mark::Open) {
                                stack.push(Item::Close);
                                stack.push(Item::Nt(b.index()));
                                go(g, w, prob, pos + 1, stack, lp, best);
                                stack.pop();
                                stack.pop();
                            }
                        }
                        RuleBody::Chain(b) => {
                            stack.push(Item::Nt(b.index()));
                            go(g, w, prob, pos, stack, lp, best);
                            stack.pop();
                        }
                    }
                }
            }
        }
        stack.push(top);
    }
    let mut best = None;
    let mut stack = vec![Item::Nt(g.nts() - 1)];
    go(g, w, prob, 0, &mut stack, 0.0, &mut best);
    best
}

/// Uniform probability over the rules sharing a left-hand side.
pub fn uniform_prob(g: &SrfGrammar) -> impl Fn(&Rule) -> f64 + '_ {
    move |rule: &Rule| 1.0 / g.rules().iter().filter(|r| r.lhs == rule.lhs).count() as f64
}
