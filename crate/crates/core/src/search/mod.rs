//! Exhaustive and random search over SRF grammars.
//!
//! Each candidate goes through three stages:
//!
//! 1. it must parse every structure of the parsable set;
//! 2. it is scored on the small dataset and dropped if that score is worse
//!    than the small score of the worst member of a full top list;
//! 3. it is scored on the benchmark dataset and offered to the top list.
//!
//! Candidates are processed in fixed batches. The stage-2 threshold is
//! taken at the start of a batch, the batch is evaluated in parallel and the
//! results are merged in candidate order, so the outcome does not depend on
//! the thread count.

pub mod checkpoint;
pub mod enumerate;

use std::cmp::Ordering;
use std::collections::HashSet;
use std::fmt::Write as _;

use num_bigint::BigUint;
use num_traits::{ToPrimitive, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::alphabet::Mark;
use crate::codec::{AdaptiveScope, Codec, ModelKind, ModelSpec};
use crate::data::RnaRecord;
use crate::grammar::{expand, universe_size, ExpansionMode, SrfGrammar};
use crate::parser::{Recognizer, Word};
use crate::probmodel::train_static;
use crate::sizecode::{serialize_grammar, subset_rank, subset_unrank};

pub use checkpoint::Checkpoint;
pub use enumerate::{enumerate_exhaustive, grammar_count, random_grammar, Combinations};

#[derive(Debug, Error)]
pub enum SearchError {
    #[error("invalid search configuration: {0}")]
    InvalidConfig(String),
    #[error("checkpoint line {line}: {msg}")]
    Checkpoint { line: usize, msg: String },
    #[error("checkpoint {path}: {source}")]
    Io { path: std::path::PathBuf, source: std::io::Error },
}

#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub enum SearchMode {
    Exhaustive,
    Random,
}

pub const DEFAULT_BATCH: usize = 512;

#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub mode: SearchMode,
    /// Inclusive nonterminal range.
    pub nts: (usize, usize),
    /// Inclusive rule-count range; sizes above a universe are skipped.
    pub rules: (usize, usize),
    pub top: usize,
    /// Random mode: total draws, split evenly over the `(k, r)` shards.
    /// Exhaustive mode: optional cap on candidates per shard.
    pub budget: Option<u64>,
    pub seed: u64,
    pub model: ModelKind,
    pub scope: AdaptiveScope,
    pub expansion: ExpansionMode,
    /// Stage-2 threshold; disabling it benchmarks every parsing grammar.
    pub prune_stage2: bool,
    pub batch: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            mode: SearchMode::Exhaustive,
            nts: (1, 1),
            rules: (3, 3),
            top: 10,
            budget: None,
            seed: 0,
            model: ModelKind::Adaptive,
            scope: AdaptiveScope::Record,
            expansion: ExpansionMode::Canonical6,
            prune_stage2: true,
            batch: DEFAULT_BATCH,
        }
    }
}

impl SearchConfig {
    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |m: &str| Err(SearchError::InvalidConfig(m.into()));
        if self.top == 0 {
            return bad("top list size must be at least 1");
        }
        if self.nts.0 == 0 || self.nts.0 > self.nts.1 {
            return bad("nonterminal range must be nonempty and start at 1 or more");
        }
        if self.rules.0 == 0 || self.rules.0 > self.rules.1 {
            return bad("rule range must be nonempty and start at 1 or more");
        }
        if self.batch == 0 {
            return bad("batch size must be positive");
        }
        if self.mode == SearchMode::Random && self.budget.is_none_or(|b| b == 0) {
            return bad("random mode needs a positive budget");
        }
        if self.shards().is_empty() {
            return bad("no (nonterminals, rules) combination is feasible");
        }
        Ok(())
    }

    /// Feasible `(k, r)` pairs in ascending order.
    pub fn shards(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for k in self.nts.0..=self.nts.1 {
            for r in self.rules.0..=self.rules.1.min(universe_size(k)) {
                out.push((k, r));
            }
        }
        out
    }

    /// Draw budget of shard `i` in random mode.
    pub fn shard_budget(&self, i: usize) -> Option<u64> {
        let b = self.budget?;
        match self.mode {
            SearchMode::Exhaustive => Some(b),
            SearchMode::Random => {
                let n = self.shards().len() as u64;
                Some(b / n + u64::from((i as u64) < b % n))
            }
        }
    }

    /// Text identifying everything that influences results.
    pub fn fingerprint(&self) -> String {
        format!(
            "mode={:?} nts={}..{} rules={}..{} top={} budget={:?} seed={} model={} scope={} expansion={} prune={} batch={}",
            self.mode,
            self.nts.0,
            self.nts.1,
            self.rules.0,
            self.rules.1,
            self.top,
            self.budget,
            self.seed,
            self.model,
            self.scope,
            self.expansion,
            self.prune_stage2,
            self.batch
        )
    }
}

/// Datasets of the three stages.
#[derive(Clone, Debug, Default)]
pub struct SearchData {
    pub parsable: Vec<Vec<Mark>>,
    pub small: Vec<RnaRecord>,
    pub benchmark: Vec<RnaRecord>,
}

/// Exact bits-per-base as a ratio.
#[derive(Copy, Clone, Debug, PartialEq, Eq)]
pub struct Score {
    pub bits: u64,
    pub bases: u64,
}

impl Score {
    pub fn bpb(self) -> f64 {
        self.bits as f64 / self.bases as f64
    }

    pub fn cmp_ratio(self, other: Score) -> Ordering {
        (self.bits as u128 * other.bases as u128).cmp(&(other.bits as u128 * self.bases as u128))
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Entry {
    pub k: usize,
    pub r: usize,
    pub rank: BigUint,
    pub grammar: SrfGrammar,
    pub small: Score,
    pub benchmark: Score,
}

impl Entry {
    /// Benchmark score, then `(k, r, rank)`.
    pub fn cmp_rank(&self, other: &Entry) -> Ordering {
        self.benchmark
            .cmp_ratio(other.benchmark)
            .then(self.k.cmp(&other.k))
            .then(self.r.cmp(&other.r))
            .then_with(|| self.rank.cmp(&other.rank))
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub generated: u64,
    pub duplicates: u64,
    pub parse_filtered: u64,
    pub small_filtered: u64,
    pub benchmarked: u64,
}

impl Counters {
    /// Every generated candidate lands in exactly one bucket.
    pub fn reconciles(&self) -> bool {
        self.generated == self.duplicates + self.parse_filtered + self.small_filtered + self.benchmarked
    }
}

/// Best grammars by benchmark score, at most `capacity` of them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopList {
    capacity: usize,
    entries: Vec<Entry>,
}

impl TopList {
    pub fn new(capacity: usize) -> TopList {
        TopList { capacity, entries: Vec::new() }
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn is_full(&self) -> bool {
        self.entries.len() >= self.capacity
    }

    /// Small score of the worst member of a full list.
    pub fn threshold(&self) -> Option<Score> {
        self.is_full().then(|| self.entries.last().expect("capacity is positive").small)
    }

    pub fn offer(&mut self, e: Entry) {
        let pos = self.entries.partition_point(|x| x.cmp_rank(&e) == Ordering::Less);
        if pos < self.capacity {
            self.entries.insert(pos, e);
            self.entries.truncate(self.capacity);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SearchResult {
    pub top: TopList,
    pub counters: Counters,
}

/// Resume position of one shard.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ShardState {
    pub k: usize,
    pub r: usize,
    /// Exhaustive: next colex rank. Random: draws already made.
    pub next: BigUint,
}

enum Outcome {
    ParseFiltered,
    SmallFiltered,
    Benchmarked(Entry),
}

/// Total score of `g` on `records`; `None` if some record does not parse.
pub fn score_grammar(
    g: &SrfGrammar,
    records: &[RnaRecord],
    model: ModelKind,
    scope: AdaptiveScope,
    expansion: ExpansionMode,
) -> Option<Score> {
    let eg = expand(g, expansion);
    let spec = match model {
        ModelKind::Adaptive => ModelSpec::Adaptive(scope),
        ModelKind::Static => ModelSpec::Static(train_static(&eg, records).ok()?),
    };
    let (bits, bases) = Codec::new(&eg, spec).ok()?.score(records)?;
    Some(Score { bits, bases })
}

fn parses_all(g: &SrfGrammar, structures: &[Vec<Mark>]) -> bool {
    let rec = Recognizer::new(g);
    structures.iter().all(|s| rec.accepts(&Word::structure(s)))
}

fn evaluate(
    cfg: &SearchConfig,
    data: &SearchData,
    k: usize,
    r: usize,
    rank: BigUint,
    g: SrfGrammar,
    threshold: Option<Score>,
) -> Outcome {
    if !parses_all(&g, &data.parsable) {
        return Outcome::ParseFiltered;
    }
    let Some(small) = score_grammar(&g, &data.small, cfg.model, cfg.scope, cfg.expansion) else {
        return Outcome::ParseFiltered;
    };
    if threshold.is_some_and(|t| small.cmp_ratio(t) == Ordering::Greater) {
        return Outcome::SmallFiltered;
    }
    let Some(benchmark) = score_grammar(&g, &data.benchmark, cfg.model, cfg.scope, cfg.expansion) else {
        return Outcome::ParseFiltered;
    };
    Outcome::Benchmarked(Entry { k, r, rank, grammar: g, small, benchmark })
}

/// Seed of the random stream of shard `(k, r)`.
pub fn shard_seed(seed: u64, k: usize, r: usize) -> u64 {
    // splitmix64 finalizer over the combined inputs
    let mut z = seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15) ^ (r as u64).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Candidate source for one shard.
enum Source {
    Exhaustive { k: usize, r: usize, iter: Combinations, next: BigUint, remaining: Option<u64> },
    Random { k: usize, r: usize, rng: Box<ChaCha8Rng>, seen: HashSet<BigUint>, drawn: u64, budget: u64 },
}

/// `(rank, grammar)` for a new candidate or `None` for a repeated draw.
type Candidate = Option<(BigUint, SrfGrammar)>;

impl Source {
    fn new(cfg: &SearchConfig, shard: usize, state: &ShardState) -> Source {
        let (k, r) = (state.k, state.r);
        match cfg.mode {
            SearchMode::Exhaustive => {
                let done = state.next.to_u64();
                let remaining = cfg.shard_budget(shard).map(|b| b.saturating_sub(done.unwrap_or(u64::MAX)));
                Source::Exhaustive {
                    k,
                    r,
                    iter: Combinations::from_rank(universe_size(k), r, &state.next),
                    next: state.next.clone(),
                    remaining,
                }
            }
            SearchMode::Random => {
                let mut rng = ChaCha8Rng::seed_from_u64(shard_seed(cfg.seed, k, r));
                let mut seen = HashSet::new();
                let drawn = state.next.to_u64().unwrap_or(u64::MAX);
                for _ in 0..drawn {
                    let (_, rank) = random_grammar(k, r, &mut rng).expect("shards are feasible");
                    seen.insert(rank);
                }
                Source::Random { k, r, rng: Box::new(rng), seen, drawn, budget: cfg.shard_budget(shard).unwrap_or(0) }
            }
        }
    }

    fn next(&mut self) -> Option<Candidate> {
        match self {
            Source::Exhaustive { k, iter, next, remaining, .. } => {
                if *remaining == Some(0) {
                    return None;
                }
                let subset = iter.next()?;
                if let Some(rem) = remaining {
                    *rem -= 1;
                }
                let rank = next.clone();
                *next += 1u32;
                let g = SrfGrammar::from_universe_indices(*k, &subset).expect("universe subsets are valid grammars");
                Some(Some((rank, g)))
            }
            Source::Random { k, r, rng, seen, drawn, budget } => {
                if *drawn >= *budget {
                    return None;
                }
                *drawn += 1;
                let (g, rank) = random_grammar(*k, *r, rng).expect("shards are feasible");
                Some(seen.insert(rank.clone()).then_some((rank, g)))
            }
        }
    }

    fn state(&self) -> ShardState {
        match self {
            Source::Exhaustive { k, r, next, .. } => ShardState { k: *k, r: *r, next: next.clone() },
            Source::Random { k, r, drawn, .. } => ShardState { k: *k, r: *r, next: BigUint::from(*drawn) },
        }
    }
}

/// Search state that can be saved between batches.
#[derive(Clone, Debug, PartialEq)]
pub struct SearchState {
    /// Index into `cfg.shards()` of the shard in progress.
    pub shard: usize,
    pub position: BigUint,
    pub result: SearchResult,
}

impl SearchState {
    pub fn new(cfg: &SearchConfig) -> SearchState {
        SearchState {
            shard: 0,
            position: BigUint::zero(),
            result: SearchResult { top: TopList::new(cfg.top), counters: Counters::default() },
        }
    }
}

/// Runs the search from scratch.
pub fn run_search(cfg: &SearchConfig, data: &SearchData) -> Result<SearchResult, SearchError> {
    run_search_from(cfg, data, SearchState::new(cfg), |_| Ok(()))
}

/// Continues from `state`, calling `after_batch` with the state after every
/// batch (for checkpointing and progress).
pub fn run_search_from(
    cfg: &SearchConfig,
    data: &SearchData,
    mut state: SearchState,
    mut after_batch: impl FnMut(&SearchState) -> Result<(), SearchError>,
) -> Result<SearchResult, SearchError> {
    cfg.validate()?;
    let shards = cfg.shards();
    while state.shard < shards.len() {
        let (k, r) = shards[state.shard];
        let mut source = Source::new(cfg, state.shard, &ShardState { k, r, next: state.position.clone() });
        loop {
            let mut batch = Vec::with_capacity(cfg.batch);
            while batch.len() < cfg.batch {
                match source.next() {
                    Some(c) => batch.push(c),
                    None => break,
                }
            }
            if batch.is_empty() {
                break;
            }
            let threshold = if cfg.prune_stage2 { state.result.top.threshold() } else { None };
            let outcomes: Vec<Option<Outcome>> = batch
                .into_par_iter()
                .map(|c| c.map(|(rank, g)| evaluate(cfg, data, k, r, rank, g, threshold)))
                .collect();
            let counters = &mut state.result.counters;
            for o in outcomes {
                counters.generated += 1;
                match o {
                    None => counters.duplicates += 1,
                    Some(Outcome::ParseFiltered) => counters.parse_filtered += 1,
                    Some(Outcome::SmallFiltered) => counters.small_filtered += 1,
                    Some(Outcome::Benchmarked(e)) => {
                        counters.benchmarked += 1;
                        state.result.top.offer(e);
                    }
                }
            }
            state.position = source.state().next;
            after_batch(&state)?;
        }
        state.shard += 1;
        state.position = BigUint::zero();
    }
    after_batch(&state)?;
    Ok(state.result)
}

/// Ranked entries as CSV plus a counters line.
pub fn results_csv(result: &SearchResult) -> String {
    let mut out = String::from("k,r,grammar_serialization_hex,small_bpb,benchmark_bpb\n");
    for e in result.top.entries() {
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6}",
            e.k,
            e.r,
            serialize_grammar(&e.grammar).to_hex(),
            e.small.bpb(),
            e.benchmark.bpb()
        );
    }
    let c = result.counters;
    let _ = writeln!(
        out,
        "# generated={},parse_filtered={},small_filtered={},benchmarked={},duplicates={}",
        c.generated, c.parse_filtered, c.small_filtered, c.benchmarked, c.duplicates
    );
    out
}

/// Colex rank of a grammar's rule set.
pub fn grammar_rank(g: &SrfGrammar) -> BigUint {
    subset_rank(universe_size(g.nts()), &g.universe_indices()).expect("grammar rules are a sorted subset")
}

/// Grammar with the given rank, for checkpoints.
pub fn grammar_at(k: usize, r: usize, rank: &BigUint) -> Option<SrfGrammar> {
    let s = subset_unrank(universe_size(k), r, rank).ok()?;
    SrfGrammar::from_universe_indices(k, &s).ok()
}
