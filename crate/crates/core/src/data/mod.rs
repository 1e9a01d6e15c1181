//! RNA records (sequence plus dot-bracket structure) and datasets.
//!
//! Files are FASTA-like:
//!
//! ```text
//! >id
//! GCCCUGAUAG...
//! .(((((.(((...
//! ```
//!
//! Sequence and structure may each span several lines. Records without a
//! `>` header are accepted too: a sequence line following a structure line
//! starts a new record. Only the first whitespace-separated token of a
//! structure line is read, so trailing energy annotations are ignored.

pub mod synth;

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::alphabet::{bases_to_string, marks_to_string, parse_marks, Base, BasePair, Mark};
use crate::grammar::ExpansionMode;
use crate::parser::Word;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("record {id}: {reason}")]
    InvalidRecord { id: String, reason: SkipReason },
    #[error("unbalanced structure at position {pos}")]
    Unbalanced { pos: usize },
}

/// Why a record was rejected.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum SkipReason {
    Empty,
    LengthMismatch { sequence: usize, structure: usize },
    NonAcgu(char),
    BadStructureChar(char),
    Unbalanced,
    EmptyHairpin,
    NonCanonicalPair { left: usize, right: usize, pair: BasePair },
}

impl fmt::Display for SkipReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SkipReason::Empty => write!(f, "Empty"),
            SkipReason::LengthMismatch { sequence, structure } => {
                write!(f, "LengthMismatch (sequence {sequence}, structure {structure})")
            }
            SkipReason::NonAcgu(c) => write!(f, "NonACGU ({c})"),
            SkipReason::BadStructureChar(c) => write!(f, "BadStructureChar ({c})"),
            SkipReason::Unbalanced => write!(f, "Unbalanced"),
            SkipReason::EmptyHairpin => write!(f, "EmptyHairpin"),
            SkipReason::NonCanonicalPair { left, right, pair } => {
                write!(f, "NonCanonicalPair ({pair} at {left}/{right})")
            }
        }
    }
}

impl std::error::Error for SkipReason {}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct RnaRecord {
    pub id: String,
    pub sequence: Vec<Base>,
    pub structure: Vec<Mark>,
}

impl RnaRecord {
    /// Checks length agreement, balance and the absence of `()`.
    pub fn new(id: impl Into<String>, sequence: Vec<Base>, structure: Vec<Mark>) -> Result<RnaRecord, SkipReason> {
        if sequence.is_empty() {
            return Err(SkipReason::Empty);
        }
        if sequence.len() != structure.len() {
            return Err(SkipReason::LengthMismatch { sequence: sequence.len(), structure: structure.len() });
        }
        pair_table(&structure).map_err(|_| SkipReason::Unbalanced)?;
        if has_empty_hairpin(&structure) {
            return Err(SkipReason::EmptyHairpin);
        }
        Ok(RnaRecord { id: id.into(), sequence, structure })
    }

    pub fn from_strs(id: &str, sequence: &str, structure: &str) -> Result<RnaRecord, SkipReason> {
        let seq = parse_sequence(sequence)?;
        let st = parse_structure(structure)?;
        RnaRecord::new(id, seq, st)
    }

    pub fn len(&self) -> usize {
        self.sequence.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sequence.is_empty()
    }

    pub fn joint_word(&self) -> Word {
        Word::joint(&self.sequence, &self.structure)
    }

    pub fn structure_word(&self) -> Word {
        Word::structure(&self.structure)
    }

    pub fn sequence_string(&self) -> String {
        bases_to_string(&self.sequence)
    }

    pub fn structure_string(&self) -> String {
        marks_to_string(&self.structure)
    }

    /// Base pairs as `(left, right)` positions.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        let table = pair_table(&self.structure).expect("records are balanced");
        table.iter().enumerate().filter_map(|(i, p)| p.filter(|&j| j > i).map(|j| (i, j))).collect()
    }

    /// First pair not in the canonical six, if any.
    pub fn non_canonical_pair(&self) -> Option<SkipReason> {
        self.pairs().into_iter().find_map(|(i, j)| {
            let pair = BasePair(self.sequence[i], self.sequence[j]);
            (!pair.is_canonical()).then_some(SkipReason::NonCanonicalPair { left: i, right: j, pair })
        })
    }
}

fn parse_sequence(s: &str) -> Result<Vec<Base>, SkipReason> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| Base::from_char(c).ok_or(SkipReason::NonAcgu(c)))
        .collect()
}

fn parse_structure(s: &str) -> Result<Vec<Mark>, SkipReason> {
    s.chars()
        .filter(|c| !c.is_whitespace())
        .map(|c| Mark::from_char(c).ok_or(SkipReason::BadStructureChar(c)))
        .collect()
}

pub fn has_empty_hairpin(structure: &[Mark]) -> bool {
    structure.windows(2).any(|w| w == [Mark::Open, Mark::Close])
}

/// Partner of every position, `None` for unpaired ones.
pub fn pair_table(structure: &[Mark]) -> Result<Vec<Option<usize>>, DataError> {
    let mut table = vec![None; structure.len()];
    let mut stack = Vec::new();
    for (i, m) in structure.iter().enumerate() {
        match m {
            Mark::Open => stack.push(i),
            Mark::Close => {
                let j = stack.pop().ok_or(DataError::Unbalanced { pos: i })?;
                table[i] = Some(j);
                table[j] = Some(i);
            }
            Mark::Dot => {}
        }
    }
    match stack.pop() {
        Some(pos) => Err(DataError::Unbalanced { pos }),
        None => Ok(table),
    }
}

/// Dot-bracket string of a pair table.
pub fn structure_from_pairs(table: &[Option<usize>]) -> Vec<Mark> {
    table
        .iter()
        .enumerate()
        .map(|(i, p)| match p {
            None => Mark::Dot,
            Some(j) if *j > i => Mark::Open,
            Some(_) => Mark::Close,
        })
        .collect()
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub enum OnInvalid {
    #[default]
    Skip,
    Fail,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, Default)]
pub struct LoadOptions {
    pub pairing: ExpansionMode,
    pub on_invalid: OnInvalid,
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Dataset {
    pub records: Vec<RnaRecord>,
    pub source: Option<PathBuf>,
    /// Rejected record ids with the reason.
    pub skipped: Vec<(String, SkipReason)>,
}

impl Dataset {
    pub fn from_records(records: Vec<RnaRecord>) -> Dataset {
        Dataset { records, source: None, skipped: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn total_bases(&self) -> usize {
        self.records.iter().map(RnaRecord::len).sum()
    }
}

#[derive(Default)]
struct Pending {
    id: Option<String>,
    sequence: String,
    structure: String,
}

impl Pending {
    fn is_blank(&self) -> bool {
        self.id.is_none() && self.sequence.is_empty() && self.structure.is_empty()
    }
}

fn is_structure_token(tok: &str) -> bool {
    !tok.is_empty() && tok.chars().all(|c| matches!(c, '.' | '(' | ')'))
}

/// Parses the record format from a string.
pub fn parse_dataset(text: &str, options: LoadOptions) -> Result<Dataset, DataError> {
    let mut ds = Dataset::default();
    let mut pending = Pending::default();
    let mut anonymous = 0usize;

    let finish = |p: Pending, ds: &mut Dataset, anonymous: &mut usize| -> Result<(), DataError> {
        if p.is_blank() {
            return Ok(());
        }
        let id = p.id.unwrap_or_else(|| {
            *anonymous += 1;
            format!("record_{anonymous}")
        });
        let checked = RnaRecord::from_strs(&id, &p.sequence, &p.structure).and_then(|r| {
            match (options.pairing, r.non_canonical_pair()) {
                (ExpansionMode::Canonical6, Some(reason)) => Err(reason),
                _ => Ok(r),
            }
        });
        match (checked, options.on_invalid) {
            (Ok(r), _) => ds.records.push(r),
            (Err(reason), OnInvalid::Skip) => ds.skipped.push((id, reason)),
            (Err(reason), OnInvalid::Fail) => return Err(DataError::InvalidRecord { id, reason }),
        }
        Ok(())
    };

    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim_end_matches('\r').trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(header) = line.strip_prefix('>') {
            finish(std::mem::take(&mut pending), &mut ds, &mut anonymous)?;
            let id = header.split_whitespace().next().unwrap_or("").to_string();
            if id.is_empty() {
                return Err(DataError::Parse { line: line_no, msg: "empty record id".into() });
            }
            pending = Pending { id: Some(id), ..Pending::default() };
            continue;
        }
        let first = line.split_whitespace().next().unwrap_or("");
        if is_structure_token(first) {
            if pending.sequence.is_empty() {
                return Err(DataError::Parse { line: line_no, msg: "structure line before any sequence".into() });
            }
            pending.structure.push_str(first);
        } else {
            if !pending.structure.is_empty() {
                finish(std::mem::take(&mut pending), &mut ds, &mut anonymous)?;
            }
            pending.sequence.extend(line.chars().filter(|c| !c.is_whitespace()));
        }
    }
    finish(pending, &mut ds, &mut anonymous)?;
    Ok(ds)
}

pub fn load_dataset(path: impl AsRef<Path>, options: LoadOptions) -> Result<Dataset, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    let mut ds = parse_dataset(&text, options)?;
    ds.source = Some(path.to_path_buf());
    Ok(ds)
}

/// One `>id` / sequence / structure triple per record.
pub fn write_dataset(records: &[RnaRecord]) -> String {
    let mut out = String::new();
    for r in records {
        out.push('>');
        out.push_str(&r.id);
        out.push('\n');
        out.push_str(&r.sequence_string());
        out.push('\n');
        out.push_str(&r.structure_string());
        out.push('\n');
    }
    out
}

pub fn save_dataset(path: impl AsRef<Path>, records: &[RnaRecord]) -> Result<(), DataError> {
    let path = path.as_ref();
    fs::write(path, write_dataset(records)).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Sidecar text listing skipped records.
pub fn filter_log(ds: &Dataset) -> String {
    let mut out = String::new();
    if let Some(src) = &ds.source {
        out.push_str(&format!("# source: {}\n", src.display()));
    }
    out.push_str(&format!("# kept {} skipped {}\n", ds.records.len(), ds.skipped.len()));
    for (id, reason) in &ds.skipped {
        out.push_str(&format!("{id}\t{reason}\n"));
    }
    out
}

/// Reads bare dot-bracket structures, one per line. Record files are also
/// accepted, in which case their structures are taken.
pub fn parse_structures(text: &str) -> Result<Vec<Vec<Mark>>, DataError> {
    if text.lines().any(|l| l.trim_start().starts_with('>')) {
        let ds = parse_dataset(text, LoadOptions { pairing: ExpansionMode::All16, on_invalid: OnInvalid::Fail })?;
        return Ok(ds.records.into_iter().map(|r| r.structure).collect());
    }
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tok = line.split_whitespace().next().unwrap_or("");
        let marks = parse_marks(tok)
            .ok_or_else(|| DataError::Parse { line: i + 1, msg: format!("not a dot-bracket string: `{tok}`") })?;
        pair_table(&marks).map_err(|_| DataError::Parse { line: i + 1, msg: "unbalanced structure".into() })?;
        out.push(marks);
    }
    Ok(out)
}

pub fn load_structures(path: impl AsRef<Path>) -> Result<Vec<Vec<Mark>>, DataError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })?;
    parse_structures(&text)
}

/// Distinct balanced substrings of the dataset's structures with length at
/// most `max_len` and no `()`, shortest first then lexicographic, capped at
/// `cap` entries.
pub fn parsable_set(ds: &Dataset, max_len: usize, cap: usize) -> Vec<Vec<Mark>> {
    let mut found = std::collections::BTreeSet::new();
    for r in &ds.records {
        let s = &r.structure;
        for i in 0..s.len() {
            let mut depth = 0i64;
            for j in i..s.len().min(i + max_len) {
                depth += match s[j] {
                    Mark::Open => 1,
                    Mark::Close => -1,
                    Mark::Dot => 0,
                };
                if depth < 0 {
                    break;
                }
                if depth == 0 && !has_empty_hairpin(&s[i..=j]) {
                    found.insert((j + 1 - i, marks_to_string(&s[i..=j])));
                }
            }
        }
    }
    found.into_iter().take(cap).map(|(_, s)| parse_marks(&s).expect("built from marks")).collect()
}

/// `⌈fraction · n⌉` records drawn without replacement, in original order.
pub fn subsample(ds: &Dataset, fraction: f64, seed: u64) -> Dataset {
    assert!(fraction > 0.0 && fraction <= 1.0, "fraction must lie in (0, 1]");
    let n = ds.records.len();
    let want = ((fraction * n as f64).ceil() as usize).min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = sample(&mut rng, n, want).into_vec();
    idx.sort_unstable();
    Dataset {
        records: idx.into_iter().map(|i| ds.records[i].clone()).collect(),
        source: ds.source.clone(),
        skipped: Vec::new(),
    }
}

/// The example record drawn in the documentation figure: 62 bases, 18 pairs.
pub fn example_record() -> RnaRecord {
    RnaRecord::from_strs(
        "fig1",
        "GCCCUGAUAGCGUAGUUACUAGCGAGUCUGUAUUCUAAGAAGAUCACUGAGGGUUCGCGGGG",
        ".(((((.((((...))))..((..(((....)))))...((..((.....)).))..)))))",
    )
    .expect("example record is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_table_examples() {
        assert_eq!(pair_table(&parse_marks("(.)").unwrap()).unwrap(), [Some(2), None, Some(0)]);
        assert_eq!(pair_table(&parse_marks("..").unwrap()).unwrap(), [None, None]);
        assert!(matches!(pair_table(&parse_marks("(()").unwrap()), Err(DataError::Unbalanced { pos: 0 })));
        assert!(matches!(pair_table(&parse_marks(")(").unwrap()), Err(DataError::Unbalanced { pos: 0 })));
    }

    #[test]
    fn example_record_pairs() {
        let r = example_record();
        assert_eq!(r.len(), 62);
        let pairs = r.pairs();
        assert_eq!(pairs.len(), 18);
        assert!(pairs.contains(&(1, 61)));
        assert!(pairs.contains(&(44, 50)));
        assert!(r.non_canonical_pair().is_none());
        let table = pair_table(&r.structure).unwrap();
        assert_eq!(structure_from_pairs(&table), r.structure);
    }

    #[test]
    fn loader_skips_and_fails() {
        let text = ">ok\nGCAAAGC\n((...))\n>hairpin\nGAC\n(.)\n>empty\nGC\n()\n>iupac\nGNC\n...\n>wobble\nGAAAU\n(...)\n>nc\nAAAAA\n(...)\n";
        let ds = parse_dataset(text, LoadOptions::default()).unwrap();
        let ids: Vec<_> = ds.records.iter().map(|r| r.id.as_str()).collect();
        assert_eq!(ids, ["ok", "hairpin", "wobble"]);
        assert_eq!(ds.skipped[0], ("empty".to_string(), SkipReason::EmptyHairpin));
        assert_eq!(ds.skipped[1], ("iupac".to_string(), SkipReason::NonAcgu('N')));
        assert!(matches!(ds.skipped[2].1, SkipReason::NonCanonicalPair { .. }));

        let all = parse_dataset(text, LoadOptions { pairing: ExpansionMode::All16, on_invalid: OnInvalid::Skip }).unwrap();
        assert_eq!(all.records.len(), 4);

        let strict = parse_dataset(text, LoadOptions { on_invalid: OnInvalid::Fail, ..LoadOptions::default() });
        assert!(matches!(strict, Err(DataError::InvalidRecord { ref id, .. }) if id == "empty"));
    }

    #[test]
    fn loader_formats() {
        let text = "ggaa\r\naacc\r\n((..\r\n..)) -1.2\r\nGAUC\n(.).\n";
        let ds = parse_dataset(text, LoadOptions::default()).unwrap();
        assert_eq!(ds.records.len(), 2);
        assert_eq!(ds.records[0].id, "record_1");
        assert_eq!(ds.records[0].sequence_string(), "GGAAAACC");
        assert_eq!(ds.records[0].structure_string(), "((....))");
        assert_eq!(ds.records[1].id, "record_2");
        assert!(matches!(parse_dataset("..((\n", LoadOptions::default()), Err(DataError::Parse { line: 1, .. })));
        let mismatch = parse_dataset(">x\nACGU\n...\n", LoadOptions::default()).unwrap();
        assert!(matches!(mismatch.skipped[0].1, SkipReason::LengthMismatch { sequence: 4, structure: 3 }));
    }

    #[test]
    fn write_and_reload_is_identity() {
        let text = ">a b c\nGCAAAGC\n((...))\n>b\nA\n.\n";
        let ds = parse_dataset(text, LoadOptions::default()).unwrap();
        let again = parse_dataset(&write_dataset(&ds.records), LoadOptions::default()).unwrap();
        assert_eq!(again.records, ds.records);
        assert_eq!(write_dataset(&again.records), write_dataset(&ds.records));
    }

    #[test]
    fn subsample_sizes() {
        let recs: Vec<RnaRecord> = (0..346)
            .map(|i| RnaRecord::from_strs(&format!("r{i}"), "A", ".").unwrap())
            .collect();
        let ds = Dataset::from_records(recs);
        assert_eq!(subsample(&ds, 1.0, 7).records, ds.records);
        let s = subsample(&ds, 0.1, 7);
        assert_eq!(s.len(), 35);
        assert_eq!(subsample(&ds, 0.1, 7), s);
    }

    #[test]
    fn parsable_set_from_example() {
        let ds = Dataset::from_records(vec![example_record()]);
        let set = parsable_set(&ds, 10, 30);
        assert!(!set.is_empty() && set.len() <= 30);
        assert_eq!(set[0], [Mark::Dot]);
        for s in &set {
            assert!(s.len() <= 10 && !has_empty_hairpin(s));
            pair_table(s).unwrap();
        }
    }
}
