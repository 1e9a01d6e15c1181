//! Joint sequence and structure compression by arithmetic coding of
//! leftmost derivations.
//!
//! The left-hand side of every step is the leftmost pending nonterminal, so
//! each rule is coded against the distribution of that nonterminal only.
//! Streams are self-delimiting: decoding stops when no nonterminal remains.

pub mod arith;
pub mod archive;

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use thiserror::Error;

use crate::bits::Bitstream;
use crate::data::RnaRecord;
use crate::grammar::{ExpandedGrammar, Nt, Rhs, RuleSet};
use crate::parser::{replay, Derivation, ParserError, RuleProbs, ViterbiParser};
use crate::probmodel::{AdaptiveModel, CodingModel, StaticModel};

pub use archive::{read_archive, write_archive, Archive, ArchiveFlags};

#[derive(Debug, Error, PartialEq)]
pub enum CodecError {
    #[error("rule {0} has probability zero")]
    ZeroProbabilityRule(usize),
    #[error("A{lhs} has {count} rules, more than the coder supports")]
    TooManyRules { lhs: usize, count: usize },
    #[error("corrupt stream: {0}")]
    CorruptStream(String),
    #[error("record {id} cannot be parsed by the grammar")]
    UnparseableRecord { id: String },
    #[error(transparent)]
    Parser(#[from] ParserError),
    #[error("static model does not match the grammar")]
    ModelMismatch,
    #[error("archive: {0}")]
    Archive(String),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum ModelKind {
    #[default]
    Adaptive,
    Static,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Adaptive => "adaptive",
            ModelKind::Static => "static",
        })
    }
}

impl FromStr for ModelKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "adaptive" => Ok(ModelKind::Adaptive),
            "static" => Ok(ModelKind::Static),
            _ => Err(format!("unknown model `{s}` (expected adaptive or static)")),
        }
    }
}

/// Whether adaptive counts restart for every record or carry over.
#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum AdaptiveScope {
    #[default]
    Record,
    Dataset,
}

impl fmt::Display for AdaptiveScope {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AdaptiveScope::Record => "record",
            AdaptiveScope::Dataset => "dataset",
        })
    }
}

impl FromStr for AdaptiveScope {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "record" => Ok(AdaptiveScope::Record),
            "dataset" => Ok(AdaptiveScope::Dataset),
            _ => Err(format!("unknown adaptive scope `{s}` (expected record or dataset)")),
        }
    }
}

/// Model choice for a coding session.
#[derive(Clone, Debug, PartialEq)]
pub enum ModelSpec {
    Adaptive(AdaptiveScope),
    Static(StaticModel),
}

impl ModelSpec {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelSpec::Adaptive(_) => ModelKind::Adaptive,
            ModelSpec::Static(_) => ModelKind::Static,
        }
    }

    pub fn scope(&self) -> AdaptiveScope {
        match self {
            ModelSpec::Adaptive(s) => *s,
            ModelSpec::Static(_) => AdaptiveScope::Record,
        }
    }
}

/// Mutable model state of one coding session.
pub enum ModelState<'m> {
    Adaptive(AdaptiveModel),
    Static(&'m StaticModel),
}

impl CodingModel for ModelState<'_> {
    fn count(&self, id: usize) -> u64 {
        match self {
            ModelState::Adaptive(m) => m.count(id),
            ModelState::Static(m) => m.count(id),
        }
    }

    fn lhs_total(&self, lhs: usize) -> u64 {
        match self {
            ModelState::Adaptive(m) => m.lhs_total(lhs),
            ModelState::Static(m) => m.lhs_total(lhs),
        }
    }

    fn observe(&mut self, id: usize) {
        if let ModelState::Adaptive(m) = self {
            m.observe(id)
        }
    }
}

/// Rules per left-hand side plus each rule's position in its group.
struct Groups {
    by_lhs: Vec<Vec<usize>>,
    slot: Vec<usize>,
    children: Vec<(Option<Nt>, Option<Nt>)>,
}

impl Groups {
    fn new(g: &impl RuleSet) -> Result<Groups, CodecError> {
        let by_lhs = g.rules_by_lhs();
        let limit = (arith::MAX_TOTAL - arith::FREQ_SCALE) as usize;
        if let Some((lhs, grp)) = by_lhs.iter().enumerate().find(|(_, grp)| grp.len() > limit) {
            return Err(CodecError::TooManyRules { lhs, count: grp.len() });
        }
        let mut slot = vec![0; g.rule_count()];
        for grp in &by_lhs {
            for (i, &id) in grp.iter().enumerate() {
                slot[id] = i;
            }
        }
        let children = (0..g.rule_count())
            .map(|id| match g.production(id).rhs {
                Rhs::Split(l, r) => (Some(l), Some(r)),
                Rhs::Bond(inner, _) | Rhs::Chain(inner) => (Some(inner), None),
                Rhs::Unpaired(_) => (None, None),
            })
            .collect();
        Ok(Groups { by_lhs, slot, children })
    }

    /// Quantized cumulative frequencies for the rules of `lhs`.
    fn table(&self, lhs: usize, model: &impl CodingModel) -> Vec<u64> {
        let counts: Vec<u64> = self.by_lhs[lhs].iter().map(|&id| model.count(id)).collect();
        arith::cumulative(&arith::quantize(&counts))
    }

    fn push_children(&self, id: usize, stack: &mut Vec<Nt>) {
        let (first, second) = self.children[id];
        if let Some(s) = second {
            stack.push(s);
        }
        if let Some(f) = first {
            stack.push(f);
        }
    }
}

/// An encoded derivation with its information content under the model.
#[derive(Clone, Debug, PartialEq)]
pub struct EncodedDerivation {
    pub bits: Bitstream,
    /// `sum(-log2 p)` with the exact model probabilities at each step.
    pub ideal_bits: f64,
}

fn encode_with(
    groups: &Groups,
    start: Nt,
    d: &Derivation,
    model: &mut impl CodingModel,
) -> Result<EncodedDerivation, CodecError> {
    let mut enc = arith::Encoder::new();
    let mut ideal = 0.0;
    let mut stack = vec![start];
    for (step, &id) in d.rule_ids.iter().enumerate() {
        let malformed = |msg: String| CodecError::Parser(ParserError::MalformedDerivation { step, msg });
        let lhs = stack.pop().ok_or_else(|| malformed("no nonterminal left".into()))?;
        let grp = groups.by_lhs.get(lhs.index()).ok_or_else(|| malformed(format!("no rules for {lhs}")))?;
        if grp.get(groups.slot.get(id).copied().unwrap_or(usize::MAX)) != Some(&id) {
            return Err(malformed(format!("rule {id} does not rewrite {lhs}")));
        }
        let count = model.count(id);
        if count == 0 {
            return Err(CodecError::ZeroProbabilityRule(id));
        }
        ideal -= (count as f64 / model.lhs_total(lhs.index()) as f64).log2();
        let cum = groups.table(lhs.index(), model);
        let s = groups.slot[id];
        enc.encode(cum[s], cum[s + 1], *cum.last().unwrap());
        model.observe(id);
        groups.push_children(id, &mut stack);
    }
    if let Some(a) = stack.pop() {
        return Err(CodecError::Parser(ParserError::MalformedDerivation {
            step: d.rule_ids.len(),
            msg: format!("derivation ends with {a} unexpanded"),
        }));
    }
    Ok(EncodedDerivation { bits: enc.finish(), ideal_bits: ideal })
}

/// Caps on work spent decoding untrusted input.
const MAX_STEPS: usize = 1 << 26;
const MAX_PENDING: usize = 1 << 22;

fn decode_with(
    groups: &Groups,
    start: Nt,
    bits: &Bitstream,
    model: &mut impl CodingModel,
) -> Result<Derivation, CodecError> {
    let mut dec = arith::Decoder::new(bits);
    let mut rule_ids = Vec::new();
    let mut stack = vec![start];
    while let Some(lhs) = stack.pop() {
        let grp = &groups.by_lhs[lhs.index()];
        if grp.is_empty() {
            return Err(CodecError::CorruptStream(format!("{lhs} has no rules")));
        }
        if rule_ids.len() >= MAX_STEPS || stack.len() >= MAX_PENDING {
            return Err(CodecError::CorruptStream("derivation does not terminate".into()));
        }
        let cum = groups.table(lhs.index(), model);
        let total = *cum.last().unwrap();
        let s = arith::find_symbol(&cum, dec.target(total));
        let id = *grp
            .get(s)
            .ok_or_else(|| CodecError::CorruptStream(format!("symbol {s} outside the rules of {lhs}")))?;
        if !dec.consume(cum[s], cum[s + 1], total) {
            return Err(CodecError::CorruptStream(format!("read past the end after {} rules", rule_ids.len())));
        }
        model.observe(id);
        rule_ids.push(id);
        groups.push_children(id, &mut stack);
    }
    Ok(Derivation { rule_ids })
}

/// Arithmetic-codes `d`, updating `model` after every rule.
pub fn encode_derivation(
    g: &impl RuleSet,
    d: &Derivation,
    model: &mut impl CodingModel,
) -> Result<EncodedDerivation, CodecError> {
    encode_with(&Groups::new(g)?, g.start(), d, model)
}

/// Inverse of [`encode_derivation`] given a model in the same initial state.
pub fn decode_derivation(
    g: &impl RuleSet,
    bits: &Bitstream,
    model: &mut impl CodingModel,
) -> Result<Derivation, CodecError> {
    decode_with(&Groups::new(g)?, g.start(), bits, model)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressedRecord {
    pub id: String,
    pub bits: Bitstream,
    pub ideal_bits: f64,
    pub bases: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RecordReport {
    pub id: String,
    pub bits: u64,
    pub bases: u64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompressionReport {
    pub total_bits: u64,
    pub total_bases: u64,
    pub ideal_bits: f64,
    pub per_record: Vec<RecordReport>,
    /// Ids of records left out because the grammar cannot parse them.
    pub skipped: Vec<String>,
}

impl CompressionReport {
    pub fn bits_per_base(&self) -> f64 {
        self.total_bits as f64 / self.total_bases as f64
    }
}

/// A grammar and model ready to code records.
pub struct Codec<'g> {
    grammar: &'g ExpandedGrammar,
    spec: ModelSpec,
    parser: ViterbiParser,
    groups: Groups,
}

impl<'g> Codec<'g> {
    /// Adaptive coding parses under uniform probabilities; static coding
    /// under the model's own.
    pub fn new(grammar: &'g ExpandedGrammar, spec: ModelSpec) -> Result<Codec<'g>, CodecError> {
        let probs = match &spec {
            ModelSpec::Adaptive(_) => RuleProbs::uniform(grammar),
            ModelSpec::Static(m) => {
                if m.counts().len() != grammar.rule_count() {
                    return Err(CodecError::ModelMismatch);
                }
                m.rule_probs()
            }
        };
        Ok(Codec { grammar, parser: ViterbiParser::new(grammar, &probs), groups: Groups::new(grammar)?, spec })
    }

    pub fn grammar(&self) -> &ExpandedGrammar {
        self.grammar
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    /// A model state at the beginning of a session.
    pub fn fresh_state(&self) -> ModelState<'_> {
        match &self.spec {
            ModelSpec::Adaptive(_) => ModelState::Adaptive(AdaptiveModel::new(self.grammar)),
            ModelSpec::Static(m) => ModelState::Static(m),
        }
    }

    pub fn derivation(&self, rec: &RnaRecord) -> Result<Derivation, CodecError> {
        self.parser
            .parse(&rec.joint_word())
            .map(|r| r.derivation)
            .ok_or_else(|| CodecError::UnparseableRecord { id: rec.id.clone() })
    }

    pub fn compress_with(&self, rec: &RnaRecord, state: &mut ModelState<'_>) -> Result<CompressedRecord, CodecError> {
        let d = self.derivation(rec)?;
        let e = encode_with(&self.groups, self.grammar.start(), &d, state)?;
        Ok(CompressedRecord { id: rec.id.clone(), bits: e.bits, ideal_bits: e.ideal_bits, bases: rec.len() })
    }

    pub fn decompress_with(
        &self,
        id: &str,
        bits: &Bitstream,
        state: &mut ModelState<'_>,
    ) -> Result<RnaRecord, CodecError> {
        let d = decode_with(&self.groups, self.grammar.start(), bits, state)?;
        let terminals = replay(self.grammar, &d)?;
        let mut sequence = Vec::with_capacity(terminals.len());
        for t in &terminals {
            sequence.push(t.base.ok_or_else(|| CodecError::CorruptStream("terminal without a base".into()))?);
        }
        let structure = terminals.iter().map(|t| t.mark).collect();
        RnaRecord::new(id, sequence, structure)
            .map_err(|reason| CodecError::CorruptStream(format!("decoded record is invalid: {reason}")))
    }

    /// Compresses one record with a fresh model state.
    pub fn compress_record(&self, rec: &RnaRecord) -> Result<CompressedRecord, CodecError> {
        self.compress_with(rec, &mut self.fresh_state())
    }

    pub fn decompress_record(&self, id: &str, bits: &Bitstream) -> Result<RnaRecord, CodecError> {
        self.decompress_with(id, bits, &mut self.fresh_state())
    }

    /// Compresses records in order. Records are independent unless counts
    /// carry across the dataset, in which case coding is sequential.
    pub fn compress_all(&self, records: &[RnaRecord]) -> Result<Vec<CompressedRecord>, CodecError> {
        if self.spec.scope() == AdaptiveScope::Dataset {
            let mut state = self.fresh_state();
            records.iter().map(|r| self.compress_with(r, &mut state)).collect()
        } else {
            records.par_iter().map(|r| self.compress_record(r)).collect()
        }
    }

    pub fn decompress_all(&self, items: &[(String, Bitstream)]) -> Result<Vec<RnaRecord>, CodecError> {
        if self.spec.scope() == AdaptiveScope::Dataset {
            let mut state = self.fresh_state();
            items.iter().map(|(id, b)| self.decompress_with(id, b, &mut state)).collect()
        } else {
            items.par_iter().map(|(id, b)| self.decompress_record(id, b)).collect()
        }
    }

    /// Bits per base over a dataset from actual stream lengths. With
    /// `skip_unparseable`, records the grammar rejects are listed and left
    /// out; otherwise they are an error.
    pub fn evaluate(&self, records: &[RnaRecord], skip_unparseable: bool) -> Result<CompressionReport, CodecError> {
        let results: Vec<Result<CompressedRecord, CodecError>> = if self.spec.scope() == AdaptiveScope::Dataset {
            let mut state = self.fresh_state();
            records.iter().map(|r| self.compress_with(r, &mut state)).collect()
        } else {
            records.par_iter().map(|r| self.compress_record(r)).collect()
        };
        let mut report = CompressionReport {
            total_bits: 0,
            total_bases: 0,
            ideal_bits: 0.0,
            per_record: Vec::with_capacity(records.len()),
            skipped: Vec::new(),
        };
        for res in results {
            match res {
                Ok(c) => {
                    report.total_bits += c.bits.len() as u64;
                    report.total_bases += c.bases as u64;
                    report.ideal_bits += c.ideal_bits;
                    report.per_record.push(RecordReport { id: c.id, bits: c.bits.len() as u64, bases: c.bases as u64 });
                }
                Err(CodecError::UnparseableRecord { id }) if skip_unparseable => report.skipped.push(id),
                Err(e) => return Err(e),
            }
        }
        Ok(report)
    }

    /// Sequential total `(bits, bases)` for scoring; `None` if any record is
    /// unparseable.
    pub fn score(&self, records: &[RnaRecord]) -> Option<(u64, u64)> {
        let mut state = self.fresh_state();
        let (mut bits, mut bases) = (0u64, 0u64);
        for r in records {
            if self.spec.scope() == AdaptiveScope::Record {
                state = self.fresh_state();
            }
            let c = self.compress_with(r, &mut state).ok()?;
            bits += c.bits.len() as u64;
            bases += r.len() as u64;
        }
        Some((bits, bases))
    }
}

/// Compresses one record with a fresh model.
pub fn compress_record(rec: &RnaRecord, g: &ExpandedGrammar, spec: ModelSpec) -> Result<CompressedRecord, CodecError> {
    Codec::new(g, spec)?.compress_record(rec)
}

pub fn evaluate(records: &[RnaRecord], g: &ExpandedGrammar, spec: ModelSpec) -> Result<CompressionReport, CodecError> {
    Codec::new(g, spec)?.evaluate(records, false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::example_record;
    use crate::grammar::{expand, fixtures, ExpansionMode};
    use crate::probmodel::train_static;

    fn trivial() -> ExpandedGrammar {
        expand(&fixtures::grammar_1nt(), ExpansionMode::Canonical6)
    }

    #[test]
    fn single_base_costs_log2_11() {
        let g = trivial();
        let rec = RnaRecord::from_strs("a", "A", ".").unwrap();
        let c = compress_record(&rec, &g, ModelSpec::Adaptive(AdaptiveScope::Record)).unwrap();
        assert!((c.ideal_bits - 11f64.log2()).abs() < 1e-12);
        assert!(c.bits.len() >= 4 && c.bits.len() as f64 <= c.ideal_bits + 2.0, "{}", c.bits.len());
        let codec = Codec::new(&g, ModelSpec::Adaptive(AdaptiveScope::Record)).unwrap();
        assert_eq!(codec.decompress_record("a", &c.bits).unwrap(), rec);
    }

    #[test]
    fn example_record_roundtrips() {
        let rec = example_record();
        for (name, base) in fixtures::all() {
            let g = expand(&base, ExpansionMode::Canonical6);
            for spec in [ModelSpec::Adaptive(AdaptiveScope::Record), ModelSpec::Static(train_static(&g, &[]).unwrap())]
            {
                let codec = Codec::new(&g, spec).unwrap();
                match codec.compress_record(&rec) {
                    Ok(c) => {
                        assert_eq!(codec.decompress_record(&rec.id, &c.bits).unwrap(), rec, "{name}");
                        assert!(c.bits.len() as f64 <= c.ideal_bits + 4.0);
                    }
                    Err(CodecError::UnparseableRecord { .. }) => {}
                    Err(e) => panic!("{name}: {e}"),
                }
            }
        }
    }

    #[test]
    fn derivation_coding_keeps_model_in_step() {
        let g = trivial();
        let rec = example_record();
        let codec = Codec::new(&g, ModelSpec::Adaptive(AdaptiveScope::Record)).unwrap();
        let d = codec.derivation(&rec).unwrap();
        let mut enc_model = AdaptiveModel::new(&g);
        let e = encode_derivation(&g, &d, &mut enc_model).unwrap();
        let mut dec_model = AdaptiveModel::new(&g);
        assert_eq!(decode_derivation(&g, &e.bits, &mut dec_model).unwrap(), d);
        assert_eq!(enc_model, dec_model);
    }

    #[test]
    fn truncated_stream_is_rejected() {
        let g = trivial();
        let rec = example_record();
        let codec = Codec::new(&g, ModelSpec::Adaptive(AdaptiveScope::Record)).unwrap();
        let c = codec.compress_record(&rec).unwrap();
        let cut = Bitstream::from_parts(c.bits.as_bytes().to_vec(), c.bits.len() / 2);
        match codec.decompress_record(&rec.id, &cut) {
            Ok(r) => assert_ne!(r, rec),
            Err(CodecError::CorruptStream(_)) | Err(CodecError::Parser(_)) => {}
            Err(e) => panic!("unexpected error {e}"),
        }
    }

    #[test]
    fn malformed_derivation_is_rejected() {
        let g = trivial();
        let mut m = AdaptiveModel::new(&g);
        let d = Derivation { rule_ids: vec![1, 1] };
        assert!(matches!(encode_derivation(&g, &d, &mut m), Err(CodecError::Parser(_))));
        let d = Derivation { rule_ids: vec![0, 1] };
        assert!(matches!(encode_derivation(&g, &d, &mut m), Err(CodecError::Parser(_))));
    }

    #[test]
    fn non_canonical_pair_is_unparseable() {
        let g = trivial();
        let rec = RnaRecord::from_strs("nc", "AAAAA", "(...)").unwrap();
        assert!(matches!(
            compress_record(&rec, &g, ModelSpec::Adaptive(AdaptiveScope::Record)),
            Err(CodecError::UnparseableRecord { .. })
        ));
    }

    #[test]
    fn dataset_scope_carries_counts() {
        let g = trivial();
        let recs: Vec<RnaRecord> = (0..5).map(|i| RnaRecord::from_strs(&format!("r{i}"), "GGGAAACCC", "(((...)))").unwrap()).collect();
        let per = Codec::new(&g, ModelSpec::Adaptive(AdaptiveScope::Record)).unwrap();
        let whole = Codec::new(&g, ModelSpec::Adaptive(AdaptiveScope::Dataset)).unwrap();
        let a = per.evaluate(&recs, false).unwrap();
        let b = whole.evaluate(&recs, false).unwrap();
        assert!(b.total_bits < a.total_bits);
        assert_eq!(per.score(&recs), Some((a.total_bits, a.total_bases)));
        assert_eq!(whole.score(&recs), Some((b.total_bits, b.total_bases)));
        let packed = whole.compress_all(&recs).unwrap();
        let items: Vec<(String, Bitstream)> = packed.into_iter().map(|c| (c.id, c.bits)).collect();
        assert_eq!(whole.decompress_all(&items).unwrap(), recs);
    }
}
