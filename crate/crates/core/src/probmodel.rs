//! Rule-probability models conditioned on the left-hand side.
//!
//! Both models are integer counts; a rule's probability is its count over
//! the summed counts of the rules sharing its left-hand side.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use thiserror::Error;

use crate::data::RnaRecord;
use crate::grammar::{ExpandedGrammar, RuleSet};
use crate::parser::{RuleProbs, ViterbiParser};

#[derive(Debug, Error)]
pub enum ProbModelError {
    #[error("record {id} cannot be parsed by the grammar")]
    UnparseableRecord { id: String },
    #[error("unknown rule id {0}")]
    UnknownRule(usize),
    #[error("model has {found} rules, grammar has {expected}")]
    RuleCountMismatch { expected: usize, found: usize },
    #[error("rule {0} has count zero")]
    ZeroCount(usize),
    #[error("model file line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

/// Per-rule counts with cached per-lhs totals.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Counts {
    counts: Vec<u64>,
    lhs_of: Vec<usize>,
    totals: Vec<u64>,
}

impl Counts {
    fn new(g: &impl RuleSet, counts: Vec<u64>) -> Counts {
        assert_eq!(counts.len(), g.rule_count());
        let lhs_of: Vec<usize> = (0..g.rule_count()).map(|id| g.production(id).lhs.index()).collect();
        let mut totals = vec![0; g.nts()];
        for (id, &c) in counts.iter().enumerate() {
            totals[lhs_of[id]] += c;
        }
        Counts { counts, lhs_of, totals }
    }

    fn prob(&self, id: usize) -> f64 {
        self.counts[id] as f64 / self.totals[self.lhs_of[id]] as f64
    }

    fn probs(&self) -> Vec<f64> {
        (0..self.counts.len()).map(|id| self.prob(id)).collect()
    }
}

/// Counts the coder reads. Updating is a no-op for fixed models.
pub trait CodingModel {
    fn count(&self, id: usize) -> u64;
    fn lhs_total(&self, lhs: usize) -> u64;
    fn observe(&mut self, id: usize);
}

/// Fixed probabilities from smoothed rule counts on a training set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StaticModel {
    c: Counts,
}

impl StaticModel {
    /// Every count must be positive.
    pub fn from_counts(g: &ExpandedGrammar, counts: Vec<u64>) -> Result<StaticModel, ProbModelError> {
        if counts.len() != g.rule_count() {
            return Err(ProbModelError::RuleCountMismatch { expected: g.rule_count(), found: counts.len() });
        }
        if let Some(id) = counts.iter().position(|&c| c == 0) {
            return Err(ProbModelError::ZeroCount(id));
        }
        Ok(StaticModel { c: Counts::new(g, counts) })
    }

    pub fn counts(&self) -> &[u64] {
        &self.c.counts
    }

    pub fn prob(&self, id: usize) -> f64 {
        self.c.prob(id)
    }

    pub fn rule_probs(&self) -> RuleProbs {
        RuleProbs::from_normalized(self.c.probs())
    }

    /// Text form: a header, then one `<rule-id> <count>` line per rule.
    pub fn to_text(&self, grammar_name: &str, g: &ExpandedGrammar) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# srf-forge static model");
        let _ = writeln!(out, "grammar {grammar_name}");
        let _ = writeln!(out, "mode {}", g.mode());
        let _ = writeln!(out, "rules {}", self.c.counts.len());
        for (id, c) in self.c.counts.iter().enumerate() {
            let _ = writeln!(out, "{id} {c}");
        }
        out
    }

    pub fn from_text(text: &str, g: &ExpandedGrammar) -> Result<StaticModel, ProbModelError> {
        let mut declared = None;
        let mut counts = vec![None; g.rule_count()];
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            let fail = |msg: String| ProbModelError::Format { line: i + 1, msg };
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let mut toks = line.split_whitespace();
            let head = toks.next().unwrap_or("");
            let rest = toks.next();
            match head {
                "grammar" => {}
                "mode" => {
                    let mode = rest.unwrap_or("");
                    if mode.parse().ok() != Some(g.mode()) {
                        return Err(fail(format!("model was trained with mode {mode}, grammar uses {}", g.mode())));
                    }
                }
                "rules" => {
                    let n: usize = rest.and_then(|s| s.parse().ok()).ok_or_else(|| fail("bad rule count".into()))?;
                    if n != g.rule_count() {
                        return Err(ProbModelError::RuleCountMismatch { expected: g.rule_count(), found: n });
                    }
                    declared = Some(n);
                }
                _ => {
                    let id: usize = head.parse().map_err(|_| fail(format!("bad rule id `{head}`")))?;
                    let c: u64 = rest.and_then(|s| s.parse().ok()).ok_or_else(|| fail("bad count".into()))?;
                    let slot = counts.get_mut(id).ok_or(ProbModelError::UnknownRule(id))?;
                    if slot.replace(c).is_some() {
                        return Err(fail(format!("rule {id} listed twice")));
                    }
                }
            }
        }
        if declared.is_none() {
            return Err(ProbModelError::Format { line: 0, msg: "missing `rules` header".into() });
        }
        let found = counts.iter().filter(|c| c.is_some()).count();
        let counts: Option<Vec<u64>> = counts.into_iter().collect();
        let counts = counts.ok_or(ProbModelError::RuleCountMismatch { expected: g.rule_count(), found })?;
        StaticModel::from_counts(g, counts)
    }

    pub fn save(&self, path: impl AsRef<Path>, grammar_name: &str, g: &ExpandedGrammar) -> Result<(), ProbModelError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_text(grammar_name, g))
            .map_err(|source| ProbModelError::Io { path: path.to_path_buf(), source })
    }

    pub fn load(path: impl AsRef<Path>, g: &ExpandedGrammar) -> Result<StaticModel, ProbModelError> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|source| ProbModelError::Io { path: path.to_path_buf(), source })?;
        StaticModel::from_text(&text, g)
    }
}

impl CodingModel for StaticModel {
    fn count(&self, id: usize) -> u64 {
        self.c.counts[id]
    }

    fn lhs_total(&self, lhs: usize) -> u64 {
        self.c.totals[lhs]
    }

    fn observe(&mut self, _id: usize) {}
}

impl CodingModel for &StaticModel {
    fn count(&self, id: usize) -> u64 {
        self.c.counts[id]
    }

    fn lhs_total(&self, lhs: usize) -> u64 {
        self.c.totals[lhs]
    }

    fn observe(&mut self, _id: usize) {}
}

/// Rule counts of the uniform-probability Viterbi derivation of every
/// record, plus one per rule.
pub fn train_static(g: &ExpandedGrammar, records: &[RnaRecord]) -> Result<StaticModel, ProbModelError> {
    let parser = ViterbiParser::new(g, &RuleProbs::uniform(g));
    let n = g.rule_count();
    let observed = records
        .par_iter()
        .map(|r| {
            let res = parser
                .parse(&r.joint_word())
                .ok_or_else(|| ProbModelError::UnparseableRecord { id: r.id.clone() })?;
            let mut c = vec![0u64; n];
            for &id in &res.derivation.rule_ids {
                c[id] += 1;
            }
            Ok(c)
        })
        .collect::<Result<Vec<_>, ProbModelError>>()?;
    let mut counts = vec![1u64; n];
    for c in observed {
        for (acc, x) in counts.iter_mut().zip(c) {
            *acc += x;
        }
    }
    StaticModel::from_counts(g, counts)
}

/// Running counts starting at one for every rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AdaptiveModel {
    c: Counts,
}

impl AdaptiveModel {
    pub fn new(g: &impl RuleSet) -> AdaptiveModel {
        AdaptiveModel { c: Counts::new(g, vec![1; g.rule_count()]) }
    }

    pub fn prob(&self, id: usize) -> f64 {
        self.c.prob(id)
    }

    /// Probabilities of all rules with left-hand side `lhs`, in rule-id order.
    pub fn distribution(&self, lhs: usize) -> Vec<(usize, f64)> {
        (0..self.c.counts.len()).filter(|&id| self.c.lhs_of[id] == lhs).map(|id| (id, self.prob(id))).collect()
    }

    pub fn counts(&self) -> &[u64] {
        &self.c.counts
    }

    pub fn update(&mut self, id: usize) -> Result<(), ProbModelError> {
        if id >= self.c.counts.len() {
            return Err(ProbModelError::UnknownRule(id));
        }
        self.c.counts[id] += 1;
        self.c.totals[self.c.lhs_of[id]] += 1;
        Ok(())
    }
}

impl CodingModel for AdaptiveModel {
    fn count(&self, id: usize) -> u64 {
        self.c.counts[id]
    }

    fn lhs_total(&self, lhs: usize) -> u64 {
        self.c.totals[lhs]
    }

    fn observe(&mut self, id: usize) {
        self.c.counts[id] += 1;
        self.c.totals[self.c.lhs_of[id]] += 1;
    }
}
