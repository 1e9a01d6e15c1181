//! `srf-forge`: command-line front end for SRF grammars.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error, 3 internal invariant
//! violation.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use srf_core::bits::Bitstream;
use srf_core::codec::{self, AdaptiveScope, Archive, ArchiveFlags, Codec, ModelKind, ModelSpec};
use srf_core::data::{self, synth, Dataset, LoadOptions, OnInvalid};
use srf_core::grammar::{expand, format_grammar, parse_grammar, prune_dead, ExpandedGrammar, ExpansionMode, SrfGrammar};
use srf_core::parser::{predict, RuleProbs};
use srf_core::probmodel::{train_static, StaticModel};
use srf_core::search::{self, Checkpoint, SearchConfig, SearchData, SearchMode, SearchState};
use srf_core::sizecode::{deserialize_grammar, deserialize_grammar_bytes, grammar_size_bits, serialize_grammar};

#[derive(Parser, Debug)]
#[command(name = "srf-forge", version, about = "SRF grammars: parsing, RNA compression, grammar size and grammar search")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Global {
    /// Seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for search and evaluate (0 = all cores)
    #[arg(long, global = true, env = "SRF_FORGE_THREADS", default_value_t = 0)]
    threads: usize,
    /// Suppress progress and warnings on stderr
    #[arg(long, short, global = true)]
    quiet: bool,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check that a grammar file is in SRF and print its canonical form
    Validate {
        /// Grammar file
        grammar: PathBuf,
    },
    /// Print the self-description size of a grammar in bits
    Size {
        /// Grammar file
        grammar: PathBuf,
    },
    /// Serialize a grammar to its size-code bit string
    Pack {
        /// Grammar file
        grammar: PathBuf,
        /// Print hex instead of 0/1 characters
        #[arg(long)]
        hex: bool,
    },
    /// Decode a size code given as 0/1 characters or hex (or a file holding either)
    Unpack {
        /// The code, or a file holding it
        code: String,
        /// Read the code as hex, as printed by `pack --hex` and `search`
        #[arg(long)]
        hex: bool,
    },
    /// Print the expanded RNA grammar with rule ids
    Expand {
        /// Grammar file
        grammar: PathBuf,
        /// Base-pair expansion of bond rules: canonical6 or all16
        #[arg(long, default_value = "canonical6")]
        mode: ExpansionMode,
    },
    /// Remove non-productive and unreachable nonterminals
    Prune {
        /// Grammar file
        grammar: PathBuf,
    },
    /// Compress a record file into an SRF1 archive
    Compress(CompressArgs),
    /// Restore a record file from an SRF1 archive
    Decompress(CodecArgs),
    /// Report bits per base of a grammar on a dataset
    Evaluate(EvaluateArgs),
    /// Predict the structure of a sequence
    Predict(PredictArgs),
    /// List or count all grammars of a given size
    Enumerate(EnumerateArgs),
    /// Search for grammars that compress a benchmark well
    Search(SearchArgs),
    /// Draw a random subset of a record file
    Subsample(SubsampleArgs),
    /// Train a static rule-probability model and write it to a file
    Train(TrainArgs),
    /// Generate synthetic records
    Synth(SynthArgs),
    /// Extract the parsable-filter structures from a record file
    Parsable(ParsableArgs),
}

#[derive(Args, Debug)]
struct ModelArgs {
    /// Grammar file
    #[arg(long)]
    grammar: PathBuf,
    /// Rule probabilities: running counts or counts trained beforehand
    #[arg(long, value_enum, default_value_t = ModelArg::Adaptive)]
    model: ModelArg,
    /// Training records for the static model
    #[arg(long)]
    train: Option<PathBuf>,
    /// Saved static model (alternative to --train)
    #[arg(long, conflicts_with = "train")]
    static_model: Option<PathBuf>,
    /// Whether adaptive counts restart per record or carry across the file
    #[arg(long, value_enum, default_value_t = ScopeArg::Record)]
    adaptive_scope: ScopeArg,
    /// Base-pair expansion of bond rules: canonical6 or all16
    #[arg(long, default_value = "canonical6")]
    expansion: ExpansionMode,
}

#[derive(Args, Debug)]
struct CompressArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    load: LoadArgs,
    /// Input record file
    input: PathBuf,
    /// Output archive
    output: PathBuf,
}

#[derive(Args, Debug)]
struct CodecArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Input archive
    input: PathBuf,
    /// Output record file
    output: PathBuf,
}

#[derive(Args, Debug)]
struct LoadArgs {
    /// Fail on invalid records instead of skipping them
    #[arg(long)]
    strict: bool,
    /// Write skipped record ids and reasons to this file
    #[arg(long)]
    filter_log: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[command(flatten)]
    load: LoadArgs,
    /// Record file to score
    #[arg(long)]
    dataset: PathBuf,
    /// Leave out records the grammar cannot parse
    #[arg(long)]
    skip_unparseable: bool,
    /// Per-record CSV output
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PredictArgs {
    /// Grammar file
    #[arg(long)]
    grammar: PathBuf,
    /// Training records; uniform rule probabilities when absent
    #[arg(long)]
    train: Option<PathBuf>,
    /// Saved static model (alternative to --train)
    #[arg(long, conflicts_with = "train")]
    static_model: Option<PathBuf>,
    /// Base-pair expansion of bond rules: canonical6 or all16
    #[arg(long, default_value = "canonical6")]
    expansion: ExpansionMode,
    /// Sequence over A, C, G, U (T is read as U)
    #[arg(long)]
    seq: String,
}

#[derive(Args, Debug)]
struct EnumerateArgs {
    /// Number of nonterminals
    #[arg(long)]
    nts: usize,
    /// Number of rules
    #[arg(long)]
    rules: usize,
    /// Print only the number of grammars
    #[arg(long)]
    count_only: bool,
    /// Stop after this many grammars
    #[arg(long)]
    limit: Option<u64>,
}

#[derive(Args, Debug)]
struct SearchArgs {
    /// Walk every grammar in order or draw grammars at random
    #[arg(long, value_enum, default_value_t = ModeArg::Exhaustive)]
    mode: ModeArg,
    /// Nonterminal count or inclusive range `a..b`
    #[arg(long)]
    nts: String,
    /// Rule count or inclusive range `a..b`
    #[arg(long)]
    rules: String,
    /// Size of the top list
    #[arg(long, default_value_t = 10)]
    top: usize,
    /// Parsable-filter structures (bare dot-bracket lines or a record file)
    #[arg(long)]
    parsable: PathBuf,
    /// Small dataset; defaults to a subsample of the benchmark
    #[arg(long)]
    small: Option<PathBuf>,
    /// Fraction of the benchmark used when --small is absent
    #[arg(long, default_value_t = 0.1)]
    small_fraction: f64,
    /// Benchmark records that rank the survivors
    #[arg(long)]
    benchmark: PathBuf,
    /// Random mode: total draws. Exhaustive mode: cap per (nts, rules) shard
    #[arg(long)]
    budget: Option<u64>,
    /// Rule probabilities used for scoring
    #[arg(long, value_enum, default_value_t = ModelArg::Adaptive)]
    model: ModelArg,
    /// Whether adaptive counts restart per record or carry across a dataset
    #[arg(long, value_enum, default_value_t = ScopeArg::Record)]
    adaptive_scope: ScopeArg,
    /// Base-pair expansion of bond rules: canonical6 or all16
    #[arg(long, default_value = "canonical6")]
    expansion: ExpansionMode,
    /// Benchmark every parsing grammar instead of thresholding on the small set
    #[arg(long)]
    no_prune: bool,
    /// Candidates per batch
    #[arg(long, default_value_t = search::DEFAULT_BATCH)]
    batch: usize,
    /// Checkpoint file, resumed from when it exists
    #[arg(long)]
    resume: Option<PathBuf>,
    /// CSV output (stdout when absent)
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SubsampleArgs {
    /// Fraction of records to keep, in (0, 1]
    #[arg(long)]
    fraction: f64,
    #[command(flatten)]
    load: LoadArgs,
    /// Input record file
    input: PathBuf,
    /// Output record file
    output: PathBuf,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Grammar file
    #[arg(long)]
    grammar: PathBuf,
    /// Training records
    #[arg(long)]
    train: PathBuf,
    /// Base-pair expansion of bond rules: canonical6 or all16
    #[arg(long, default_value = "canonical6")]
    expansion: ExpansionMode,
    /// Model file to write
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Uniform over all valid records of one length, or stem-loop shaped
    #[arg(long, value_enum)]
    kind: SynthKind,
    /// Number of records
    #[arg(long)]
    count: usize,
    /// Record length (uniform) or maximum length (stem-loop)
    #[arg(long)]
    len: usize,
    /// Minimum length (stem-loop)
    #[arg(long, default_value_t = 12)]
    min_len: usize,
    /// Prefix of generated record ids
    #[arg(long, default_value = "synth")]
    prefix: String,
    /// Output record file
    output: PathBuf,
}

#[derive(Args, Debug)]
struct ParsableArgs {
    /// Input record file
    input: PathBuf,
    /// Longest substring taken
    #[arg(long, default_value_t = 10)]
    max_len: usize,
    /// Most structures written
    #[arg(long, default_value_t = 30)]
    cap: usize,
    /// Output structure file
    output: PathBuf,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModelArg {
    Adaptive,
    Static,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ScopeArg {
    Record,
    Dataset,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum ModeArg {
    Exhaustive,
    Random,
}

#[derive(Copy, Clone, Debug, ValueEnum)]
enum SynthKind {
    Uniform,
    StemLoop,
}

impl From<ModelArg> for ModelKind {
    fn from(m: ModelArg) -> Self {
        match m {
            ModelArg::Adaptive => ModelKind::Adaptive,
            ModelArg::Static => ModelKind::Static,
        }
    }
}

impl From<ScopeArg> for AdaptiveScope {
    fn from(s: ScopeArg) -> Self {
        match s {
            ScopeArg::Record => AdaptiveScope::Record,
            ScopeArg::Dataset => AdaptiveScope::Dataset,
        }
    }
}

/// An error with the exit code it maps to.
struct Failure {
    code: u8,
    err: anyhow::Error,
}

trait Classify<T> {
    fn usage(self) -> Result<T, Failure>;
    fn data(self) -> Result<T, Failure>;
    fn internal(self) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Classify<T> for Result<T, E> {
    fn usage(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 1, err: e.into() })
    }

    fn data(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 2, err: e.into() })
    }

    fn internal(self) -> Result<T, Failure> {
        self.map_err(|e| Failure { code: 3, err: e.into() })
    }
}

type Outcome = Result<(), Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let pool = match rayon::ThreadPoolBuilder::new().num_threads(cli.global.threads).build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker threads: {e}");
            return ExitCode::from(3);
        }
    };
    let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(|| pool.install(|| run(&cli))));
    match outcome {
        Ok(Ok(())) => ExitCode::SUCCESS,
        Ok(Err(f)) => {
            eprintln!("error: {:#}", f.err);
            ExitCode::from(f.code)
        }
        Err(_) => ExitCode::from(3),
    }
}

fn run(cli: &Cli) -> Outcome {
    let g = &cli.global;
    match &cli.command {
        Command::Validate { grammar } => {
            let gr = load_grammar(grammar)?;
            println!("valid SRF grammar: {} nonterminals, {} rules, start {}", gr.nts(), gr.len(), gr.start());
            print!("{}", format_grammar(&gr));
            Ok(())
        }
        Command::Size { grammar } => {
            let gr = load_grammar(grammar)?;
            let s = grammar_size_bits(gr.nts(), gr.len()).data()?;
            println!("{}", s.total);
            println!("{}+{}+{}", s.gamma_bits, s.rulecount_bits, s.subset_bits);
            Ok(())
        }
        Command::Pack { grammar, hex } => {
            let bits = serialize_grammar(&load_grammar(grammar)?);
            println!("{}", if *hex { bits.to_hex() } else { bits.to_bit_string() });
            Ok(())
        }
        Command::Unpack { code, hex } => {
            let text = fs::read_to_string(code).unwrap_or_else(|_| code.clone());
            let compact: String = text.chars().filter(|c| !c.is_whitespace()).collect();
            let grammar = if *hex {
                let bytes = hex::decode(&compact).context("bad hex code").data()?;
                deserialize_grammar_bytes(&bytes).data()?
            } else {
                let stream = Bitstream::from_bit_string(&compact)
                    .ok_or_else(|| anyhow!("expected a string of 0 and 1 characters"))
                    .data()?;
                deserialize_grammar(&stream).data()?
            };
            print!("{}", format_grammar(&grammar));
            Ok(())
        }
        Command::Expand { grammar, mode } => {
            let eg = expand(&load_grammar(grammar)?, *mode);
            for (id, r) in eg.rules().iter().enumerate() {
                println!("{id}\t{r}");
            }
            Ok(())
        }
        Command::Prune { grammar } => {
            let pruned = prune_dead(&load_grammar(grammar)?).data()?;
            print!("{}", format_grammar(&pruned));
            Ok(())
        }
        Command::Compress(a) => compress(g, a),
        Command::Decompress(a) => decompress(a),
        Command::Evaluate(a) => evaluate(g, a),
        Command::Predict(a) => {
            let eg = expand(&load_grammar(&a.grammar)?, a.expansion);
            let probs = match (&a.train, &a.static_model) {
                (Some(t), _) => train_static(&eg, &load_records(g, t, a.expansion, &LoadArgs::lenient())?.records)
                    .data()?
                    .rule_probs(),
                (None, Some(m)) => StaticModel::load(m, &eg).data()?.rule_probs(),
                (None, None) => RuleProbs::uniform(&eg),
            };
            let seq = a
                .seq
                .chars()
                .map(|c| srf_core::alphabet::Base::from_char(c).ok_or_else(|| anyhow!("`{c}` is not a base")))
                .collect::<anyhow::Result<Vec<_>>>()
                .usage()?;
            let st = predict(&eg, &probs, &seq).data()?;
            println!("{}", srf_core::alphabet::marks_to_string(&st));
            Ok(())
        }
        Command::Enumerate(a) => enumerate(a),
        Command::Search(a) => run_search(g, a),
        Command::Subsample(a) => {
            if !(a.fraction > 0.0 && a.fraction <= 1.0) {
                return Err(anyhow!("--fraction must lie in (0, 1]")).usage();
            }
            let ds = load_records(g, &a.input, ExpansionMode::All16, &a.load)?;
            let sample = data::subsample(&ds, a.fraction, g.seed);
            data::save_dataset(&a.output, &sample.records).data()?;
            note(g, &format!("kept {} of {} records", sample.len(), ds.len()));
            Ok(())
        }
        Command::Train(a) => {
            let eg = expand(&load_grammar(&a.grammar)?, a.expansion);
            let ds = load_records(g, &a.train, a.expansion, &LoadArgs::lenient())?;
            let model = train_static(&eg, &ds.records).data()?;
            model.save(&a.out, &grammar_name(&a.grammar), &eg).data()?;
            Ok(())
        }
        Command::Synth(a) => {
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let records: Vec<_> = match a.kind {
                SynthKind::Uniform => {
                    let sampler = synth::UniformSampler::new(a.len);
                    (0..a.count)
                        .map(|i| {
                            let (s, t) = sampler.sample(a.len, &mut rng);
                            data::RnaRecord::new(format!("{}_{i}", a.prefix), s, t).internal()
                        })
                        .collect::<Result<_, _>>()?
                }
                SynthKind::StemLoop => {
                    if a.len < 12 || a.min_len > a.len {
                        return Err(anyhow!("stem-loop records need 12 <= --min-len <= --len")).usage();
                    }
                    (0..a.count)
                        .map(|i| synth::stem_loop(&format!("{}_{i}", a.prefix), a.min_len, a.len, &mut rng))
                        .collect()
                }
            };
            data::save_dataset(&a.output, &records).data()?;
            Ok(())
        }
        Command::Parsable(a) => {
            let ds = load_records(g, &a.input, ExpansionMode::All16, &LoadArgs::lenient())?;
            let set = data::parsable_set(&ds, a.max_len, a.cap);
            let text: String =
                set.iter().map(|s| format!("{}\n", srf_core::alphabet::marks_to_string(s))).collect();
            write_file(&a.output, text.as_bytes())
        }
    }
}

impl LoadArgs {
    fn lenient() -> LoadArgs {
        LoadArgs { strict: false, filter_log: None }
    }
}

fn note(g: &Global, msg: &str) {
    if !g.quiet {
        eprintln!("{msg}");
    }
}

fn write_file(path: &Path, bytes: &[u8]) -> Outcome {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())).data()
}

fn grammar_name(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "grammar".into())
}

fn load_grammar(path: &Path) -> Result<SrfGrammar, Failure> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display())).data()?;
    parse_grammar(&text).with_context(|| format!("in {}", path.display())).data()
}

fn load_records(g: &Global, path: &Path, pairing: ExpansionMode, load: &LoadArgs) -> Result<Dataset, Failure> {
    let on_invalid = if load.strict { OnInvalid::Fail } else { OnInvalid::Skip };
    let ds = data::load_dataset(path, LoadOptions { pairing, on_invalid }).data()?;
    if !ds.skipped.is_empty() {
        note(g, &format!("{}: skipped {} invalid records", path.display(), ds.skipped.len()));
    }
    if let Some(log) = &load.filter_log {
        write_file(log, data::filter_log(&ds).as_bytes())?;
    }
    Ok(ds)
}

fn model_spec(g: &Global, m: &ModelArgs, eg: &ExpandedGrammar) -> Result<ModelSpec, Failure> {
    match ModelKind::from(m.model) {
        ModelKind::Adaptive => Ok(ModelSpec::Adaptive(m.adaptive_scope.into())),
        ModelKind::Static => {
            let model = match (&m.train, &m.static_model) {
                (Some(t), _) => {
                    let ds = load_records(g, t, m.expansion, &LoadArgs::lenient())?;
                    train_static(eg, &ds.records).data()?
                }
                (None, Some(p)) => StaticModel::load(p, eg).data()?,
                (None, None) => return Err(anyhow!("--model static needs --train or --static-model")).usage(),
            };
            Ok(ModelSpec::Static(model))
        }
    }
}

fn compress(g: &Global, a: &CompressArgs) -> Outcome {
    let eg = expand(&load_grammar(&a.model.grammar)?, a.model.expansion);
    let spec = model_spec(g, &a.model, &eg)?;
    let codec = Codec::new(&eg, spec.clone()).data()?;
    let ds = load_records(g, &a.input, a.model.expansion, &a.load)?;
    let packed = codec.compress_all(&ds.records).data()?;
    let flags = ArchiveFlags { model: spec.kind(), scope: spec.scope(), mode: a.model.expansion };
    let archive = Archive { flags, records: packed.iter().map(|c| (c.id.clone(), c.bits.clone())).collect() };
    let bytes = codec::write_archive(&archive);
    write_file(&a.output, &bytes)?;
    let bits: usize = packed.iter().map(|c| c.bits.len()).sum();
    note(
        g,
        &format!(
            "{} records, {} bases, {} payload bits ({:.4} bits/base), {} archive bytes",
            packed.len(),
            ds.total_bases(),
            bits,
            bits as f64 / ds.total_bases().max(1) as f64,
            bytes.len()
        ),
    );
    Ok(())
}

fn decompress(a: &CodecArgs) -> Outcome {
    let bytes = fs::read(&a.input).with_context(|| format!("cannot read {}", a.input.display())).data()?;
    let archive = codec::read_archive(&bytes).data()?;
    let f = archive.flags;
    let m = &a.model;
    if f.mode != m.expansion || f.model != m.model.into() || (f.model == ModelKind::Adaptive && f.scope != m.adaptive_scope.into()) {
        return Err(anyhow!(
            "archive was written with model {}, scope {}, expansion {}; flags given do not match",
            f.model,
            f.scope,
            f.mode
        ))
        .usage();
    }
    let eg = expand(&load_grammar(&m.grammar)?, m.expansion);
    let quiet = Global { seed: 0, threads: 0, quiet: true };
    let codec = Codec::new(&eg, model_spec(&quiet, m, &eg)?).data()?;
    let records = codec.decompress_all(&archive.records).data()?;
    data::save_dataset(&a.output, &records).data()
}

fn evaluate(g: &Global, a: &EvaluateArgs) -> Outcome {
    let eg = expand(&load_grammar(&a.model.grammar)?, a.model.expansion);
    let codec = Codec::new(&eg, model_spec(g, &a.model, &eg)?).data()?;
    let ds = load_records(g, &a.dataset, a.model.expansion, &a.load)?;
    let report = codec.evaluate(&ds.records, a.skip_unparseable).data()?;
    if report.total_bases == 0 {
        return Err(anyhow!("no records to evaluate")).data();
    }
    println!(
        "records={} bases={} bits={} bits_per_base={:.6}",
        report.per_record.len(),
        report.total_bases,
        report.total_bits,
        report.bits_per_base()
    );
    if !report.skipped.is_empty() {
        note(g, &format!("left out {} unparseable records", report.skipped.len()));
    }
    if let Some(path) = &a.csv {
        let mut out = String::from("id,bases,bits,bits_per_base\n");
        for r in &report.per_record {
            out.push_str(&format!("{},{},{},{:.6}\n", r.id, r.bases, r.bits, r.bits as f64 / r.bases as f64));
        }
        write_file(path, out.as_bytes())?;
    }
    Ok(())
}

fn enumerate(a: &EnumerateArgs) -> Outcome {
    if a.nts == 0 {
        return Err(anyhow!("--nts must be at least 1")).usage();
    }
    if a.count_only {
        println!("{}", search::grammar_count(a.nts, a.rules));
        return Ok(());
    }
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let limit = a.limit.unwrap_or(u64::MAX);
    for g in search::enumerate_exhaustive(a.nts, a.rules).take(limit.try_into().unwrap_or(usize::MAX)) {
        let rules: Vec<String> = g.rules().iter().map(|r| r.to_string()).collect();
        if writeln!(out, "{}\t{}", serialize_grammar(&g).to_hex(), rules.join("; ")).is_err() {
            break;
        }
    }
    Ok(())
}

fn parse_range(s: &str, what: &str) -> Result<(usize, usize), Failure> {
    let parse = |t: &str| t.trim().parse::<usize>().with_context(|| format!("bad {what} `{s}`"));
    let (lo, hi) = match s.split_once("..") {
        Some((a, b)) => (parse(a).usage()?, parse(b.trim_start_matches('=')).usage()?),
        None => {
            let v = parse(s).usage()?;
            (v, v)
        }
    };
    Ok((lo, hi))
}

fn run_search(g: &Global, a: &SearchArgs) -> Outcome {
    let cfg = SearchConfig {
        mode: match a.mode {
            ModeArg::Exhaustive => SearchMode::Exhaustive,
            ModeArg::Random => SearchMode::Random,
        },
        nts: parse_range(&a.nts, "--nts")?,
        rules: parse_range(&a.rules, "--rules")?,
        top: a.top,
        budget: a.budget,
        seed: g.seed,
        model: a.model.into(),
        scope: a.adaptive_scope.into(),
        expansion: a.expansion,
        prune_stage2: !a.no_prune,
        batch: a.batch,
    };
    cfg.validate().usage()?;
    if a.small.is_none() && !(a.small_fraction > 0.0 && a.small_fraction <= 1.0) {
        return Err(anyhow!("--small-fraction must lie in (0, 1]")).usage();
    }
    let parsable = data::load_structures(&a.parsable).data()?;
    let benchmark = load_records(g, &a.benchmark, a.expansion, &LoadArgs::lenient())?;
    let small = match &a.small {
        Some(p) => load_records(g, p, a.expansion, &LoadArgs::lenient())?,
        None => data::subsample(&benchmark, a.small_fraction, g.seed),
    };
    let sd = SearchData { parsable, small: small.records, benchmark: benchmark.records };
    let state = match &a.resume {
        Some(p) => match Checkpoint::load(p, &cfg).data()? {
            Some(s) => {
                note(g, &format!("resuming from {}", p.display()));
                s
            }
            None => SearchState::new(&cfg),
        },
        None => SearchState::new(&cfg),
    };
    let mut batches = 0u64;
    let result = search::run_search_from(&cfg, &sd, state, |s| {
        batches += 1;
        if let Some(p) = &a.resume {
            Checkpoint::save(p, &cfg, s)?;
        }
        if !g.quiet && batches.is_multiple_of(20) {
            eprintln!("{} candidates, {} benchmarked", s.result.counters.generated, s.result.counters.benchmarked);
        }
        Ok(())
    })
    .data()?;
    if !result.counters.reconciles() {
        return Err(anyhow!("search counters do not reconcile: {:?}", result.counters)).internal();
    }
    let csv = search::results_csv(&result);
    match &a.out {
        Some(p) => write_file(p, csv.as_bytes()),
        None => {
            print!("{csv}");
            Ok(())
        }
    }
}
