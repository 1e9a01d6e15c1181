//! Plain-text search checkpoints.
//!
//! ```text
//! # srf-forge search checkpoint
//! config <fingerprint>
//! shard <index> <k> <r> <next>
//! counters <generated> <duplicates> <parse_filtered> <small_filtered> <benchmarked>
//! entry <k> <r> <rank> <small_bits> <small_bases> <bench_bits> <bench_bases>
//! ```
//!
//! Deleting the file restarts the search.

use std::fmt::Write as _;
use std::path::Path;

use num_bigint::BigUint;

use super::{grammar_at, Counters, Entry, Score, SearchConfig, SearchError, SearchResult, SearchState, TopList};

pub struct Checkpoint;

impl Checkpoint {
    pub fn to_text(cfg: &SearchConfig, state: &SearchState) -> String {
        let mut out = String::from("# srf-forge search checkpoint\n");
        let _ = writeln!(out, "config {}", cfg.fingerprint());
        let (k, r) = cfg.shards().get(state.shard).copied().unwrap_or((0, 0));
        let _ = writeln!(out, "shard {} {} {} {}", state.shard, k, r, state.position);
        let c = state.result.counters;
        let _ = writeln!(
            out,
            "counters {} {} {} {} {}",
            c.generated, c.duplicates, c.parse_filtered, c.small_filtered, c.benchmarked
        );
        for e in state.result.top.entries() {
            let _ = writeln!(
                out,
                "entry {} {} {} {} {} {} {}",
                e.k, e.r, e.rank, e.small.bits, e.small.bases, e.benchmark.bits, e.benchmark.bases
            );
        }
        out
    }

    pub fn from_text(cfg: &SearchConfig, text: &str) -> Result<SearchState, SearchError> {
        let mut state = SearchState::new(cfg);
        let mut seen_config = false;
        let mut top = TopList::new(cfg.top);
        for (i, raw) in text.lines().enumerate() {
            let fail = |msg: &str| SearchError::Checkpoint { line: i + 1, msg: msg.into() };
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (head, rest) = line.split_once(' ').unwrap_or((line, ""));
            let nums = || -> Result<Vec<BigUint>, SearchError> {
                rest.split_whitespace().map(|t| t.parse::<BigUint>().map_err(|_| fail("bad number"))).collect()
            };
            let small = |v: &BigUint| -> Result<u64, SearchError> {
                u64::try_from(v).map_err(|_| fail("number out of range"))
            };
            match head {
                "config" => {
                    if rest != cfg.fingerprint() {
                        return Err(fail("checkpoint was written by a search with different settings"));
                    }
                    seen_config = true;
                }
                "shard" => {
                    let v = nums()?;
                    let [idx, k, r, next] = v.as_slice() else { return Err(fail("expected 4 fields")) };
                    state.shard = small(idx)? as usize;
                    let expect = cfg.shards().get(state.shard).copied().unwrap_or((0, 0));
                    if (small(k)? as usize, small(r)? as usize) != expect {
                        return Err(fail("shard does not match the configuration"));
                    }
                    state.position = next.clone();
                }
                "counters" => {
                    let v = nums()?;
                    let [g, d, p, s, b] = v.as_slice() else { return Err(fail("expected 5 fields")) };
                    state.result.counters = Counters {
                        generated: small(g)?,
                        duplicates: small(d)?,
                        parse_filtered: small(p)?,
                        small_filtered: small(s)?,
                        benchmarked: small(b)?,
                    };
                }
                "entry" => {
                    let v = nums()?;
                    let [k, r, rank, sb, sn, bb, bn] = v.as_slice() else { return Err(fail("expected 7 fields")) };
                    let (k, r) = (small(k)? as usize, small(r)? as usize);
                    let grammar = grammar_at(k, r, rank).ok_or_else(|| fail("no grammar with this rank"))?;
                    top.offer(Entry {
                        k,
                        r,
                        rank: rank.clone(),
                        grammar,
                        small: Score { bits: small(sb)?, bases: small(sn)? },
                        benchmark: Score { bits: small(bb)?, bases: small(bn)? },
                    });
                }
                _ => return Err(fail("unknown line")),
            }
        }
        if !seen_config {
            return Err(SearchError::Checkpoint { line: 0, msg: "missing config line".into() });
        }
        state.result = SearchResult { top, counters: state.result.counters };
        Ok(state)
    }

    /// Writes atomically through a temporary sibling file.
    pub fn save(path: &Path, cfg: &SearchConfig, state: &SearchState) -> Result<(), SearchError> {
        let io = |source| SearchError::Io { path: path.to_path_buf(), source };
        let tmp = path.with_extension("tmp");
        std::fs::write(&tmp, Checkpoint::to_text(cfg, state)).map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }

    /// `None` when the file does not exist.
    pub fn load(path: &Path, cfg: &SearchConfig) -> Result<Option<SearchState>, SearchError> {
        match std::fs::read_to_string(path) {
            Ok(text) => Checkpoint::from_text(cfg, &text).map(Some),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(source) => Err(SearchError::Io { path: path.to_path_buf(), source }),
        }
    }
}
