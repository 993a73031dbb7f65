//! The `masklen` command line.
//!
//! Every subcommand accepts `--config FILE` (TOML, one key per flag) and
//! writes a manifest of its fully resolved flags beside its outputs, so
//! `masklen <cmd> --config <manifest>` replays a run.

use std::collections::HashMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{ArgAction, ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand, ValueEnum};
use serde_json::json;

use crate::assembly::{
    assemble_cloze_example, assemble_span_example, pack_pretraining_sequences, WindowingPolicy,
};
use crate::corpus::{split_paragraphs, split_sentences, Paragraph, RawDocument};
use crate::dataset::{
    build_cloze_example, classify_span, flatten_squad, summarize_file, validate_dataset, Bucket, BucketConfig,
    ClozeExample, ClozeOutcome, RejectReason, Rejection, SpanExample, Split, SplitRatios,
};
use crate::error::{Error, MaskError, Result};
use crate::jsonl::{map_ordered, parse_line, read_lines, JsonlWriter};
use crate::masking::{MaskingConfig, MaskingEngine, ReplaceProbs};
use crate::metrics::{score_file, F1Average, Overlap, ScoreOptions};
use crate::stats::{stats_report, LengthDistribution, ReportFormat, Task};
use crate::tokenizer::{encode, tokenize, Vocabulary};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Parser)]
#[command(name = "masklen", version, about = "Chinese MRC dataset construction, span masking and scoring")]
pub struct Cli {
    /// Worker threads; 0 uses one per core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub workers: usize,
    /// TOML file of flag values. Flags given on the command line win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Clean raw documents into paragraphs.
    #[command(args_override_self = true)]
    Ingest(IngestArgs),
    /// Bucket span-extraction candidates by answer length and split them.
    #[command(args_override_self = true)]
    BuildSpan(BuildSpanArgs),
    /// Generate 9-blank cloze passages from paragraphs.
    #[command(args_override_self = true)]
    BuildCloze(BuildClozeArgs),
    /// Dataset statistics and answer-length breakdown.
    #[command(args_override_self = true)]
    Stats(StatsArgs),
    /// Answer-length distribution of a dataset, for maskgen.
    #[command(args_override_self = true)]
    Dist(DistArgs),
    /// Masked-LM pretraining examples following a length distribution.
    #[command(args_override_self = true)]
    Maskgen(MaskgenArgs),
    /// Model input sequences for span, cloze or pretraining data.
    #[command(args_override_self = true)]
    Assemble(AssembleArgs),
    /// Score predictions (F1/EM or QAC/PAC).
    #[command(args_override_self = true)]
    Score(ScoreArgs),
    /// Check a dataset file against its bucket invariants.
    #[command(args_override_self = true)]
    Validate(ValidateArgs),
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Also write sentence records here.
    #[arg(long)]
    pub sentences: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    /// Named bucket: short-span, long-span, short-cloze or long-cloze.
    #[arg(long)]
    pub bucket: Option<Bucket>,
    /// Inclusive lower answer length in characters (overrides the bucket).
    #[arg(long)]
    pub min_answer: Option<usize>,
    /// Inclusive upper answer length in characters (overrides the bucket).
    #[arg(long)]
    pub max_answer: Option<usize>,
}

impl BoundsArgs {
    fn resolve(&self, task: Option<Task>) -> Result<BucketConfig> {
        let task = match (self.bucket, task) {
            (Some(b), Some(t)) if b.config().task != t => {
                return Err(Error::Usage(format!("bucket {} is not a {t} bucket", b.name())))
            }
            (Some(b), _) => b.config().task,
            (None, Some(t)) => t,
            (None, None) => return Err(Error::Usage("--bucket or --task is required".into())),
        };
        let mut cfg = match (self.bucket, self.min_answer, self.max_answer) {
            (Some(b), _, _) => b.config(),
            (None, Some(lo), Some(hi)) => match task {
                Task::Span => BucketConfig::span(lo, hi),
                Task::Cloze => BucketConfig::cloze(lo, hi),
            },
            _ => {
                return Err(Error::Usage(
                    "give --bucket, or both --min-answer and --max-answer".into(),
                ))
            }
        };
        cfg.min_len = self.min_answer.unwrap_or(cfg.min_len);
        cfg.max_len = self.max_answer.unwrap_or(cfg.max_len);
        cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
pub struct BuildSpanArgs {
    /// Span candidates as JSONL, or nested SQuAD JSON with --squad.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Longest accepted context in characters.
    #[arg(long, default_value_t = crate::dataset::MAX_CONTEXT_CHARS)]
    pub max_context: usize,
    #[arg(long)]
    pub seed: u64,
    /// Train,dev,test weights. Defaults to 600,150,200.
    #[arg(long)]
    pub split: Option<SplitRatios>,
    #[arg(long)]
    pub squad: bool,
}

#[derive(Debug, Args)]
pub struct BuildClozeArgs {
    /// Paragraph JSONL from `ingest`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    #[arg(long, default_value_t = crate::tokenizer::BLANK_COUNT)]
    pub options: usize,
    #[arg(long)]
    pub seed: u64,
    /// Train,dev,test weights. Defaults to 4500,1000,1000.
    #[arg(long)]
    pub split: Option<SplitRatios>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Dataset file, optionally named as NAME=PATH. Repeatable.
    #[arg(long = "in", required = true, action = ArgAction::Append)]
    pub input: Vec<String>,
    #[arg(long)]
    pub task: Task,
    #[arg(long, default_value = "tsv")]
    pub format: ReportFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DistArgs {
    /// Dataset file; repeat to pool several splits into one distribution.
    #[arg(long = "in", required = true)]
    pub input: Vec<PathBuf>,
    #[arg(long)]
    pub task: Task,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct MaskgenArgs {
    /// Paragraph JSONL from `ingest`.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    /// Length distribution JSON from `dist`.
    #[arg(long)]
    pub dist_from: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = 0.15)]
    pub budget: f64,
    #[arg(long, default_value_t = 10)]
    pub dupe: usize,
    #[arg(long, default_value_t = 512)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0.8)]
    pub mask_prob: f64,
    #[arg(long, default_value_t = 0.1)]
    pub random_prob: f64,
    #[arg(long, default_value_t = 0.1)]
    pub keep_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AssembleTask {
    Span,
    Cloze,
    Pretrain,
}

#[derive(Debug, Args)]
pub struct AssembleArgs {
    #[arg(long, value_enum)]
    pub task: AssembleTask,
    /// Span or cloze dataset JSONL, or paragraph JSONL for pretrain.
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 512)]
    pub max_len: usize,
    #[arg(long, default_value_t = 0)]
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
pub struct ScoreArgs {
    #[arg(long)]
    pub task: Task,
    #[arg(long)]
    pub gold: PathBuf,
    #[arg(long)]
    pub pred: PathBuf,
    /// mcs (longest common contiguous span) or bag (token multiset).
    #[arg(long, default_value = "mcs")]
    pub overlap: Overlap,
    /// macro (mean per-question F1) or micro (pooled counts).
    #[arg(long, default_value = "macro")]
    pub average: F1Average,
    /// Add the published human row for this bucket.
    #[arg(long)]
    pub reference: Option<Bucket>,
    #[arg(long, value_enum, default_value = "json")]
    pub format: ScoreFormat,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub task: Option<Task>,
    #[command(flatten)]
    pub bounds: BoundsArgs,
    /// Paragraph JSONL the cloze records came from, for exact reconstruction.
    #[arg(long)]
    pub sources: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Runs the command line and returns the process exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    match try_run(argv) {
        Ok(code) => code,
        Err(e) => {
            let code = e.exit_code();
            eprintln!("{}", json!({"error": e.kind(), "message": e.to_string(), "exit": code}));
            code
        }
    }
}

const SKIPPED_KEYS: [&str; 2] = ["config", "workers"];

fn try_run(argv: Vec<OsString>) -> Result<i32> {
    let argv = expand_config(argv)?;
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    Ok(0)
                }
                _ => {
                    let msg = e.to_string();
                    let first = msg.lines().next().unwrap_or("").trim_start_matches("error: ");
                    Err(Error::Usage(first.to_string()))
                }
            };
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Error::Usage(e.to_string()))?;
    let (name, sub) = matches.subcommand().expect("subcommand is required");
    let manifest = Manifest::from_matches(name, sub);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.workers)
        .build()
        .map_err(|e| Error::Usage(format!("cannot start {} workers: {e}", cli.workers)))?;
    pool.install(|| dispatch(cli.command, &manifest))
}

fn dispatch(cmd: Command, manifest: &Manifest) -> Result<i32> {
    match cmd {
        Command::Ingest(a) => ingest(&a, manifest),
        Command::BuildSpan(a) => build_span(&a, manifest),
        Command::BuildCloze(a) => build_cloze(&a, manifest),
        Command::Stats(a) => stats(&a, manifest),
        Command::Dist(a) => dist(&a, manifest),
        Command::Maskgen(a) => maskgen(&a, manifest),
        Command::Assemble(a) => assemble(&a, manifest),
        Command::Score(a) => score(&a, manifest),
        Command::Validate(a) => validate(&a, manifest),
    }
}

/// Splices `--config` file values in front of the subcommand's own flags.
fn expand_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let mut config: Option<PathBuf> = None;
    for (i, a) in argv.iter().enumerate().skip(1) {
        let s = a.to_string_lossy();
        if s == "--config" {
            config = argv.get(i + 1).map(PathBuf::from);
        } else if let Some(p) = s.strip_prefix("--config=") {
            config = Some(PathBuf::from(p));
        }
    }
    let Some(path) = config else { return Ok(argv) };

    // Subcommand position: skip global flags and their values.
    let mut pos = 1;
    while pos < argv.len() {
        let s = argv[pos].to_string_lossy();
        if s == "--workers" || s == "--config" {
            pos += 2;
        } else if s.starts_with('-') {
            pos += 1;
        } else {
            break;
        }
    }
    let Some(sub) = argv.get(pos).map(|s| s.to_string_lossy().into_owned()) else {
        return Ok(argv);
    };

    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let table: toml::Table = text
        .parse()
        .map_err(|e: toml::de::Error| Error::parse(&path, 0, e.message()))?;
    let mut extra = Vec::new();
    for (key, value) in table {
        match key.as_str() {
            "version" => continue,
            "command" => {
                if value.as_str() != Some(sub.as_str()) {
                    return Err(Error::Usage(format!(
                        "config {} is for command {value}, not {sub}",
                        path.display()
                    )));
                }
                continue;
            }
            k if SKIPPED_KEYS.contains(&k) => continue,
            _ => {}
        }
        let flag = format!("--{key}");
        match value {
            toml::Value::Boolean(true) => extra.push(OsString::from(flag)),
            toml::Value::Boolean(false) => {}
            toml::Value::Array(items) => {
                for item in items {
                    extra.push(OsString::from(&flag));
                    extra.push(OsString::from(scalar_text(&item, &path)?));
                }
            }
            other => {
                extra.push(OsString::from(flag));
                extra.push(OsString::from(scalar_text(&other, &path)?));
            }
        }
    }
    let mut out = argv[..=pos].to_vec();
    out.extend(extra);
    out.extend_from_slice(&argv[pos + 1..]);
    Ok(out)
}

fn scalar_text(v: &toml::Value, path: &Path) -> Result<String> {
    match v {
        toml::Value::String(s) => Ok(s.clone()),
        toml::Value::Integer(i) => Ok(i.to_string()),
        toml::Value::Float(f) => Ok(f.to_string()),
        toml::Value::Boolean(b) => Ok(b.to_string()),
        other => Err(Error::parse(path, 0, format!("unsupported config value {other}"))),
    }
}

/// Resolved flags of one run, written as TOML next to its outputs.
#[derive(Debug, Clone)]
pub struct Manifest {
    table: toml::Table,
}

impl Manifest {
    fn from_matches(name: &str, m: &ArgMatches) -> Self {
        let mut table = toml::Table::new();
        table.insert("command".into(), toml::Value::String(name.into()));
        table.insert("version".into(), toml::Value::String(VERSION.into()));
        let cmd = Cli::command();
        let sub = cmd.find_subcommand(name).expect("known subcommand");
        for arg in sub.get_arguments() {
            let id = arg.get_id().as_str();
            let Some(long) = arg.get_long() else { continue };
            if SKIPPED_KEYS.contains(&id) {
                continue;
            }
            if !arg.get_action().takes_values() {
                if m.try_get_one::<bool>(id).ok().flatten() == Some(&true) {
                    table.insert(long.into(), toml::Value::Boolean(true));
                }
                continue;
            }
            let Ok(Some(raw)) = m.try_get_raw(id) else { continue };
            let values: Vec<toml::Value> = raw.map(|v| toml_scalar(&v.to_string_lossy())).collect();
            let value = if matches!(arg.get_action(), ArgAction::Append) {
                toml::Value::Array(values)
            } else {
                match values.into_iter().last() {
                    Some(v) => v,
                    None => continue,
                }
            };
            table.insert(long.into(), value);
        }
        Self { table }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(&self.table).expect("manifest values are plain scalars")
    }

    fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    /// Writes `<out>.manifest.toml`.
    fn write_beside(&self, out: &Path) -> Result<()> {
        let mut name = out.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.toml");
        self.write(&out.with_file_name(name))
    }

    fn write_in(&self, dir: &Path) -> Result<()> {
        self.write(&dir.join("manifest.toml"))
    }
}

fn toml_scalar(s: &str) -> toml::Value {
    if let Ok(i) = s.parse::<i64>() {
        if i.to_string() == s {
            return toml::Value::Integer(i);
        }
    }
    if let Ok(f) = s.parse::<f64>() {
        if f.is_finite() && f.to_string() == s {
            return toml::Value::Float(f);
        }
    }
    toml::Value::String(s.to_string())
}

fn summary(value: serde_json::Value) {
    println!("{value}");
}

fn parsed<T: serde::de::DeserializeOwned>(path: &Path) -> Result<impl Iterator<Item = Result<T>> + '_> {
    Ok(read_lines(path)?.map(move |r| r.and_then(|(n, l)| parse_line(path, n, &l))))
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn ingest(a: &IngestArgs, manifest: &Manifest) -> Result<i32> {
    let docs_in = parsed::<RawDocument>(&a.input)?;
    let mut out = JsonlWriter::create(&a.out)?;
    let mut sents = a.sentences.as_deref().map(JsonlWriter::create).transpose()?;
    let want_sentences = sents.is_some();
    let (mut docs, mut paras) = (0usize, 0usize);
    map_ordered(
        docs_in,
        |doc| {
            let ps = split_paragraphs(&doc);
            let ss: Vec<_> = if want_sentences {
                ps.iter().flat_map(split_sentences).collect()
            } else {
                Vec::new()
            };
            (ps, ss)
        },
        |(ps, ss)| {
            docs += 1;
            paras += ps.len();
            for p in &ps {
                out.write(p)?;
            }
            if let Some(w) = sents.as_mut() {
                for s in &ss {
                    w.write(s)?;
                }
            }
            Ok(())
        },
    )?;
    out.finish()?;
    if let Some(w) = sents {
        w.finish()?;
    }
    manifest.write_beside(&a.out)?;
    summary(json!({"documents": docs, "paragraphs": paras}));
    Ok(0)
}

struct SplitWriters {
    writers: HashMap<Split, JsonlWriter>,
    counts: HashMap<Split, usize>,
}

impl SplitWriters {
    fn create(dir: &Path) -> Result<Self> {
        create_dir(dir)?;
        let mut writers = HashMap::new();
        for s in Split::ALL {
            writers.insert(s, JsonlWriter::create(&dir.join(format!("{}.jsonl", s.name())))?);
        }
        Ok(Self {
            writers,
            counts: HashMap::new(),
        })
    }

    fn write<T: serde::Serialize>(&mut self, split: Split, rec: &T) -> Result<()> {
        *self.counts.entry(split).or_default() += 1;
        self.writers.get_mut(&split).expect("all splits open").write(rec)
    }

    fn finish(self) -> Result<serde_json::Value> {
        for (_, w) in self.writers {
            w.finish()?;
        }
        let c = |s| self.counts.get(&s).copied().unwrap_or(0);
        Ok(json!({"train": c(Split::Train), "dev": c(Split::Dev), "test": c(Split::Test)}))
    }
}

fn build_span(a: &BuildSpanArgs, manifest: &Manifest) -> Result<i32> {
    let mut cfg = a.bounds.resolve(Some(Task::Span))?;
    cfg.max_context_len = Some(a.max_context);
    let ratios = a.split.unwrap_or(SplitRatios::SPAN);
    let mut splits = SplitWriters::create(&a.out_dir)?;
    let mut rejected = JsonlWriter::create(&a.out_dir.join("rejected.jsonl"))?;
    let mut reject_counts: HashMap<RejectReason, usize> = HashMap::new();

    let candidates: Box<dyn Iterator<Item = Result<std::result::Result<SpanExample, usize>>>> = if a.squad {
        let text = fs::read_to_string(&a.input).map_err(|e| Error::io(&a.input, e))?;
        let records = flatten_squad(&text).map_err(|e| Error::parse(&a.input, e.line(), e))?;
        Box::new(records.into_iter().map(|r| Ok(Ok(r))))
    } else {
        Box::new(read_lines(&a.input)?.map(|r| {
            r.map(|(n, line)| serde_json::from_str::<SpanExample>(&line).map_err(|_| n))
        }))
    };
    for cand in candidates {
        let rejection = match cand? {
            Err(line) => Rejection {
                id: None,
                line: Some(line),
                reason: RejectReason::Malformed,
            },
            Ok(ex) => match classify_span(&ex, &cfg) {
                Ok(()) => {
                    splits.write(ratios.assign(a.seed, ex.group_key()), &ex)?;
                    continue;
                }
                Err(reason) => Rejection {
                    id: Some(ex.id),
                    line: None,
                    reason,
                },
            },
        };
        *reject_counts.entry(rejection.reason).or_default() += 1;
        rejected.write(&rejection)?;
    }
    rejected.finish()?;
    let kept = splits.finish()?;
    manifest.write_in(&a.out_dir)?;
    let mut reasons: Vec<_> = reject_counts.into_iter().collect();
    reasons.sort();
    summary(json!({"kept": kept, "rejected": reasons.into_iter().map(|(r, c)| json!([r, c])).collect::<Vec<_>>()}));
    Ok(0)
}

fn build_cloze(a: &BuildClozeArgs, manifest: &Manifest) -> Result<i32> {
    let mut cfg = a.bounds.resolve(Some(Task::Cloze))?;
    cfg.options_per_passage = a.options;
    cfg.validate().map_err(|e| Error::Usage(e.to_string()))?;
    let ratios = a.split.unwrap_or(SplitRatios::CLOZE);
    let mut splits = SplitWriters::create(&a.out_dir)?;
    let mut skipped = JsonlWriter::create(&a.out_dir.join("skipped.jsonl"))?;
    let mut n_skipped = 0usize;
    map_ordered(
        parsed::<Paragraph>(&a.input)?,
        |p| {
            let sentences = split_sentences(&p);
            let outcome = build_cloze_example(&p, &sentences, &cfg, a.seed);
            (p, outcome)
        },
        |(p, outcome)| match outcome? {
            ClozeOutcome::Built(ex) => splits.write(ratios.assign(a.seed, &p.doc_id), &ex),
            ClozeOutcome::Skip(reason) => {
                n_skipped += 1;
                let mut rec = serde_json::to_value(reason).expect("plain enum");
                rec["id"] = json!(p.key());
                skipped.write(&rec)
            }
        },
    )?;
    skipped.finish()?;
    let built = splits.finish()?;
    manifest.write_in(&a.out_dir)?;
    summary(json!({"built": built, "skipped": n_skipped}));
    Ok(0)
}

fn stats(a: &StatsArgs, manifest: &Manifest) -> Result<i32> {
    let mut summaries = Vec::new();
    for spec in &a.input {
        let (name, path) = match spec.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(spec);
                let stem = p.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                (stem, p)
            }
        };
        summaries.push(summarize_file(&path, a.task, &name)?);
    }
    let text = stats_report(&summaries, a.format)?;
    emit(&text, a.out.as_deref(), manifest)?;
    Ok(0)
}

fn emit(text: &str, out: Option<&Path>, manifest: &Manifest) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).map_err(|e| Error::io(path, e))?;
            manifest.write_beside(path)
        }
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn dist(a: &DistArgs, manifest: &Manifest) -> Result<i32> {
    let mut d = LengthDistribution::new();
    for path in &a.input {
        d.merge(&summarize_file(path, a.task, "")?.distribution);
    }
    let text = serde_json::to_string_pretty(&d).expect("distribution serializes") + "\n";
    fs::write(&a.out, text).map_err(|e| Error::io(&a.out, e))?;
    manifest.write_beside(&a.out)?;
    summary(json!({"total": d.total(), "lengths": d.counts().len()}));
    Ok(0)
}

/// Reads a distribution JSON file (`{"counts":{..},"total":n}`).
pub fn load_distribution(path: &Path) -> Result<LengthDistribution> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.line(), e))
}

fn maskgen(a: &MaskgenArgs, manifest: &Manifest) -> Result<i32> {
    let vocab = Vocabulary::load_path(&a.vocab)?;
    let mut cfg = MaskingConfig::new(load_distribution(&a.dist_from)?, a.seed);
    cfg.budget_fraction = a.budget;
    cfg.dupe_factor = a.dupe;
    cfg.replace_probs = ReplaceProbs {
        mask: a.mask_prob,
        random: a.random_prob,
        keep: a.keep_prob,
    };
    let engine = MaskingEngine::new(cfg)?;
    let mut out = JsonlWriter::create(&a.out)?;
    let (mut sequences, mut records, mut skipped) = (0usize, 0usize, 0usize);
    map_ordered(
        parsed::<Paragraph>(&a.input)?,
        |p| -> Result<Vec<_>> {
            let ids = encode(&tokenize(&p.text, &vocab));
            let packed = pack_pretraining_sequences(&ids, a.max_len, &vocab, &p.key())?;
            packed
                .into_iter()
                .map(|seq| {
                    let seq_id = format!("{}-w{}", seq.origin, seq.window_index);
                    match engine.generate_pretraining_examples(&seq.ids, &seq_id, &vocab) {
                        Ok(recs) => Ok(Some(recs)),
                        Err(MaskError::NoPlacement { .. }) => Ok(None),
                        Err(e) => Err(e.into()),
                    }
                })
                .collect()
        },
        |res| {
            for seq in res? {
                match seq {
                    Some(recs) => {
                        sequences += 1;
                        for r in &recs {
                            records += 1;
                            out.write(r)?;
                        }
                    }
                    None => skipped += 1,
                }
            }
            Ok(())
        },
    )?;
    out.finish()?;
    manifest.write_beside(&a.out)?;
    summary(json!({"sequences": sequences, "records": records, "skipped_too_short": skipped}));
    Ok(0)
}

fn assemble(a: &AssembleArgs, manifest: &Manifest) -> Result<i32> {
    let vocab = Vocabulary::load_path(&a.vocab)?;
    let policy = WindowingPolicy::new(a.max_len, a.stride);
    let mut out = JsonlWriter::create(&a.out)?;
    let mut n = 0usize;
    let mut sink = |seqs: Result<Vec<_>>| -> Result<()> {
        for s in seqs? {
            n += 1;
            out.write(&s)?;
        }
        Ok(())
    };
    match a.task {
        AssembleTask::Span => map_ordered(
            parsed::<SpanExample>(&a.input)?,
            |ex| Ok(assemble_span_example(&ex, &policy, &vocab)?),
            &mut sink,
        )?,
        AssembleTask::Cloze => map_ordered(
            parsed::<ClozeExample>(&a.input)?,
            |ex| Ok(assemble_cloze_example(&ex, &policy, &vocab)?),
            &mut sink,
        )?,
        AssembleTask::Pretrain => map_ordered(
            parsed::<Paragraph>(&a.input)?,
            |p| {
                let ids = encode(&tokenize(&p.text, &vocab));
                Ok(pack_pretraining_sequences(&ids, a.max_len, &vocab, &p.key())?)
            },
            &mut sink,
        )?,
    }
    out.finish()?;
    manifest.write_beside(&a.out)?;
    summary(json!({"sequences": n}));
    Ok(0)
}

fn score(a: &ScoreArgs, manifest: &Manifest) -> Result<i32> {
    let opts = ScoreOptions {
        overlap: a.overlap,
        average: a.average,
        reference: a.reference,
    };
    let report = score_file(&a.gold, &a.pred, a.task, &opts)?;
    let text = match a.format {
        ScoreFormat::Json => serde_json::to_string_pretty(&report).expect("report serializes") + "\n",
        ScoreFormat::Table => report.render_table(),
    };
    emit(&text, a.out.as_deref(), manifest)?;
    if report.is_complete() {
        Ok(0)
    } else {
        eprintln!(
            "{}",
            json!({"warning": "missing_predictions", "count": report.missing.len(), "ids": report.missing})
        );
        Ok(3)
    }
}

fn validate(a: &ValidateArgs, manifest: &Manifest) -> Result<i32> {
    let cfg = a.bounds.resolve(a.task)?;
    let report = validate_dataset(&a.input, &cfg, a.sources.as_deref())?;
    let text = serde_json::to_string_pretty(&report).expect("report serializes") + "\n";
    emit(&text, a.out.as_deref(), manifest)?;
    Ok(if report.is_clean() { 0 } else { 3 })
}
