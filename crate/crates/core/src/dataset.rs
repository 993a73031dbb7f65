//! Construction of the span-extraction and multiple-choice cloze datasets.
//!
//! Span examples are bucketed by answer length. Cloze examples blank out
//! nine sentences of a paragraph, number the blanks in reading order and
//! shuffle the candidate options under letters `A`..`I`.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::{char_slice, Paragraph, Sentence};
use crate::error::{DatasetError, Error, Result};
use crate::jsonl;
use crate::seed;
use crate::stats::{ClozeStats, DatasetStats, DatasetSummary, LengthDistribution, SpanStats, Task};
use crate::tokenizer::{blank_marker, blank_regex, BLANK_COUNT};

pub const OPTION_LETTERS: [&str; BLANK_COUNT] = ["A", "B", "C", "D", "E", "F", "G", "H", "I"];

/// Default maximum context length for span examples, in characters.
pub const MAX_CONTEXT_CHARS: usize = 512;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanAnswer {
    pub text: String,
    /// Char offset into the context.
    pub answer_start: usize,
}

/// SQuAD-style record: `{"id","context","question","answer":{"text","answer_start"}}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanExample {
    pub id: String,
    /// Source article, when known. Used to group records for splitting.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub title: Option<String>,
    pub context: String,
    pub question: String,
    pub answer: SpanAnswer,
}

impl SpanExample {
    pub fn answer_len(&self) -> usize {
        self.answer.text.chars().count()
    }

    pub fn offset_matches(&self) -> bool {
        let len = self.answer_len();
        let ctx_len = self.context.chars().count();
        self.answer.answer_start + len <= ctx_len
            && char_slice(&self.context, self.answer.answer_start, self.answer.answer_start + len)
                == self.answer.text
    }

    /// Grouping key for train/dev/test assignment: the article title when
    /// present, the passage otherwise.
    pub fn group_key(&self) -> &str {
        self.title.as_deref().unwrap_or(&self.context)
    }
}

/// `{"id","passage","options":{"A":..,"I":..},"answers":["G",..]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeExample {
    pub id: String,
    pub passage: String,
    pub options: BTreeMap<String, String>,
    /// Position `i` holds the option letter that fills `[BLANK{i+1}]`.
    pub answers: Vec<String>,
}

impl ClozeExample {
    /// Substitutes the gold options into the blanks.
    pub fn reconstruct(&self) -> Option<String> {
        let mut missing = false;
        let filled = blank_regex().replace_all(&self.passage, |caps: &regex::Captures| {
            let n: usize = caps[0][6..caps[0].len() - 1].parse().unwrap_or(0);
            match self.answers.get(n.wrapping_sub(1)).and_then(|l| self.options.get(l)) {
                Some(text) => text.clone(),
                None => {
                    missing = true;
                    String::new()
                }
            }
        });
        (!missing).then(|| filled.into_owned())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BucketConfig {
    pub task: Task,
    pub min_len: usize,
    pub max_len: usize,
    pub options_per_passage: usize,
    /// Span contexts longer than this (in chars) are rejected.
    #[serde(default)]
    pub max_context_len: Option<usize>,
}

impl BucketConfig {
    pub fn span(min_len: usize, max_len: usize) -> Self {
        Self {
            task: Task::Span,
            min_len,
            max_len,
            options_per_passage: 0,
            max_context_len: Some(MAX_CONTEXT_CHARS),
        }
    }

    pub fn cloze(min_len: usize, max_len: usize) -> Self {
        Self {
            task: Task::Cloze,
            min_len,
            max_len,
            options_per_passage: BLANK_COUNT,
            max_context_len: None,
        }
    }

    pub fn admits(&self, len: usize) -> bool {
        (self.min_len..=self.max_len).contains(&len)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        if self.min_len == 0 || self.min_len > self.max_len {
            return Err(DatasetError::InvalidConfig(format!(
                "length bounds [{}, {}]",
                self.min_len, self.max_len
            )));
        }
        if self.task == Task::Cloze && !(1..=BLANK_COUNT).contains(&self.options_per_passage) {
            return Err(DatasetError::InvalidConfig(format!(
                "options_per_passage must be 1..={BLANK_COUNT}"
            )));
        }
        Ok(())
    }
}

/// The four named length buckets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Bucket {
    ShortSpan,
    LongSpan,
    ShortCloze,
    LongCloze,
}

impl Bucket {
    pub const ALL: [Bucket; 4] = [Bucket::ShortSpan, Bucket::LongSpan, Bucket::ShortCloze, Bucket::LongCloze];

    pub fn config(self) -> BucketConfig {
        match self {
            Bucket::ShortSpan => BucketConfig::span(4, 6),
            Bucket::LongSpan => BucketConfig::span(7, 9),
            Bucket::ShortCloze => BucketConfig::cloze(7, 14),
            Bucket::LongCloze => BucketConfig::cloze(17, 29),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Bucket::ShortSpan => "short-span",
            Bucket::LongSpan => "long-span",
            Bucket::ShortCloze => "short-cloze",
            Bucket::LongCloze => "long-cloze",
        }
    }
}

impl std::str::FromStr for Bucket {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Bucket::ALL
            .into_iter()
            .find(|b| b.name() == s)
            .ok_or_else(|| format!("unknown bucket {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    TooShort,
    TooLong,
    OffsetMismatch,
    ContextTooLong,
    Malformed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub line: Option<usize>,
    pub reason: RejectReason,
}

/// Decides whether a span candidate belongs in the bucket.
pub fn classify_span(ex: &SpanExample, cfg: &BucketConfig) -> std::result::Result<(), RejectReason> {
    let len = ex.answer_len();
    if len < cfg.min_len {
        return Err(RejectReason::TooShort);
    }
    if len > cfg.max_len {
        return Err(RejectReason::TooLong);
    }
    if !ex.offset_matches() {
        return Err(RejectReason::OffsetMismatch);
    }
    if cfg.max_context_len.is_some_and(|m| ex.context.chars().count() > m) {
        return Err(RejectReason::ContextTooLong);
    }
    Ok(())
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BucketOutcome {
    pub kept: Vec<SpanExample>,
    pub rejected: Vec<Rejection>,
}

/// Filters candidates into the bucket. `Err` items are malformed records,
/// logged and skipped; the stream is never aborted.
pub fn bucket_span_examples<I>(candidates: I, cfg: &BucketConfig) -> BucketOutcome
where
    I: IntoIterator<Item = std::result::Result<SpanExample, Option<usize>>>,
{
    let mut out = BucketOutcome::default();
    for cand in candidates {
        match cand {
            Err(line) => out.rejected.push(Rejection {
                id: None,
                line,
                reason: RejectReason::Malformed,
            }),
            Ok(ex) => match classify_span(&ex, cfg) {
                Ok(()) => out.kept.push(ex),
                Err(reason) => out.rejected.push(Rejection {
                    id: Some(ex.id),
                    line: None,
                    reason,
                }),
            },
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Dev,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Dev, Split::Test];

    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
        }
    }
}

/// Relative train/dev/test weights.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    /// 600 / 150 / 200 paragraphs, as in the span dataset statistics.
    pub const SPAN: SplitRatios = SplitRatios {
        train: 600.0,
        dev: 150.0,
        test: 200.0,
    };
    /// 4500 / 1000 / 1000 passages, as in the cloze dataset statistics.
    pub const CLOZE: SplitRatios = SplitRatios {
        train: 4500.0,
        dev: 1000.0,
        test: 1000.0,
    };

    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Span => Self::SPAN,
            Task::Cloze => Self::CLOZE,
        }
    }

    /// Seeded, order-independent assignment of a group to a split.
    pub fn assign(&self, seed: u64, group_key: &str) -> Split {
        let total = self.train + self.dev + self.test;
        let u = seed::unit_hash(seed, &format!("split:{group_key}")) * total;
        if u < self.train {
            Split::Train
        } else if u < self.train + self.dev {
            Split::Dev
        } else {
            Split::Test
        }
    }
}

impl std::str::FromStr for SplitRatios {
    type Err = String;
    /// Parses `train,dev,test` weights, e.g. `8,1,1`.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>().map_err(|e| format!("{p:?}: {e}")))
            .collect::<std::result::Result<_, _>>()?;
        match parts[..] {
            [train, dev, test] if parts.iter().all(|w| *w >= 0.0) && train + dev + test > 0.0 => {
                Ok(SplitRatios { train, dev, test })
            }
            _ => Err(format!("expected three non-negative weights, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "reason")]
pub enum SkipReason {
    NotEnoughCandidates { eligible: usize },
    ReservedMarker,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClozeOutcome {
    Built(ClozeExample),
    Skip(SkipReason),
}

/// Builds one cloze example from a paragraph and its sentences.
///
/// Randomness comes only from `(seed, paragraph key)`, so the result does not
/// depend on which worker handles the paragraph.
pub fn build_cloze_example(
    paragraph: &Paragraph,
    sentences: &[Sentence],
    cfg: &BucketConfig,
    seed: u64,
) -> Result<ClozeOutcome, DatasetError> {
    cfg.validate()?;
    let n = cfg.options_per_passage;
    if paragraph.text.contains("[BLANK") {
        return Ok(ClozeOutcome::Skip(SkipReason::ReservedMarker));
    }
    let eligible: Vec<&Sentence> = sentences.iter().filter(|s| cfg.admits(s.char_len)).collect();
    if eligible.len() < n {
        return Ok(ClozeOutcome::Skip(SkipReason::NotEnoughCandidates {
            eligible: eligible.len(),
        }));
    }
    let key = paragraph.key();
    let mut rng = seed::rng_for(seed, &key, 0);
    let mut chosen: Vec<&Sentence> = rand::seq::index::sample(&mut rng, eligible.len(), n)
        .into_iter()
        .map(|i| eligible[i])
        .collect();
    chosen.sort_by_key(|s| s.start);
    if chosen.windows(2).any(|w| w[0].end > w[1].start) {
        return Err(DatasetError::OverlappingSentences(key));
    }

    let chars: Vec<char> = paragraph.text.chars().collect();
    let mut passage = String::with_capacity(paragraph.text.len());
    let mut cursor = 0;
    for (i, s) in chosen.iter().enumerate() {
        passage.extend(&chars[cursor..s.start]);
        passage.push_str(&blank_marker(i + 1));
        cursor = s.end;
    }
    passage.extend(&chars[cursor..]);

    let mut letters: Vec<usize> = (0..n).collect();
    letters.shuffle(&mut rng);
    let mut options = BTreeMap::new();
    let mut answers = Vec::with_capacity(n);
    for (blank, s) in chosen.iter().enumerate() {
        let letter = OPTION_LETTERS[letters[blank]].to_string();
        options.insert(letter.clone(), s.text.clone());
        answers.push(letter);
    }
    Ok(ClozeOutcome::Built(ClozeExample {
        id: key,
        passage,
        options,
        answers,
    }))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Violation {
    LengthBounds,
    OffsetFidelity,
    ContextLength,
    BlankCount,
    OptionCount,
    Permutation,
    Reconstruction,
    DuplicateId,
}

/// Per-invariant counts of violating records.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub records: usize,
    pub malformed: usize,
    pub violations: BTreeMap<Violation, usize>,
    /// First few offending records, for humans.
    pub samples: Vec<String>,
}

const MAX_SAMPLES: usize = 20;

impl ValidationReport {
    pub fn is_clean(&self) -> bool {
        self.malformed == 0 && self.violations.values().all(|&c| c == 0)
    }

    pub fn total_violations(&self) -> usize {
        self.violations.values().sum()
    }

    fn flag(&mut self, v: Violation, id: &str) {
        *self.violations.entry(v).or_insert(0) += 1;
        if self.samples.len() < MAX_SAMPLES {
            self.samples.push(format!("{id}: {v:?}"));
        }
    }
}

pub fn span_violations(ex: &SpanExample, cfg: &BucketConfig) -> Vec<Violation> {
    let mut v = Vec::new();
    if !cfg.admits(ex.answer_len()) {
        v.push(Violation::LengthBounds);
    }
    if !ex.offset_matches() {
        v.push(Violation::OffsetFidelity);
    }
    if cfg.max_context_len.is_some_and(|m| ex.context.chars().count() > m) {
        v.push(Violation::ContextLength);
    }
    v
}

/// Checks a cloze record's invariants. `source` is the original paragraph
/// text when available; without it reconstruction is only checked to fill
/// every blank.
pub fn cloze_violations(ex: &ClozeExample, cfg: &BucketConfig, source: Option<&str>) -> Vec<Violation> {
    let n = cfg.options_per_passage;
    let mut v = Vec::new();
    let markers: Vec<&str> = blank_regex().find_iter(&ex.passage).map(|m| m.as_str()).collect();
    let expected: Vec<String> = (1..=n).map(blank_marker).collect();
    if markers != expected {
        v.push(Violation::BlankCount);
    }
    let letters: BTreeSet<&str> = OPTION_LETTERS[..n].iter().copied().collect();
    let keys: BTreeSet<&str> = ex.options.keys().map(String::as_str).collect();
    if keys != letters {
        v.push(Violation::OptionCount);
    }
    let answered: BTreeSet<&str> = ex.answers.iter().map(String::as_str).collect();
    if ex.answers.len() != n || answered != letters {
        v.push(Violation::Permutation);
    }
    if ex.options.values().any(|o| !cfg.admits(o.chars().count())) {
        v.push(Violation::LengthBounds);
    }
    let rebuilt = ex.reconstruct();
    let ok = match (rebuilt, source) {
        (Some(r), Some(src)) => r == src,
        (Some(r), None) => !blank_regex().is_match(&r) || v.contains(&Violation::BlankCount),
        (None, _) => false,
    };
    if !ok {
        v.push(Violation::Reconstruction);
    }
    v
}

/// Validates a dataset file. `sources` optionally points at the paragraph
/// JSONL the cloze records were built from.
pub fn validate_dataset(path: &Path, cfg: &BucketConfig, sources: Option<&Path>) -> Result<ValidationReport> {
    let source_map: Option<HashMap<String, String>> = match sources {
        Some(p) => Some(
            jsonl::read_all::<Paragraph>(p)?
                .into_iter()
                .map(|para| (para.key(), para.text))
                .collect(),
        ),
        None => None,
    };
    let mut report = ValidationReport::default();
    let mut seen = HashSet::new();
    for item in jsonl::read_lines(path)? {
        let (line_no, line) = item?;
        report.records += 1;
        let (id, violations) = match cfg.task {
            Task::Span => match serde_json::from_str::<SpanExample>(&line) {
                Ok(ex) => {
                    let v = span_violations(&ex, cfg);
                    (ex.id, v)
                }
                Err(_) => {
                    report.malformed += 1;
                    push_sample(&mut report, format!("line {line_no}: malformed"));
                    continue;
                }
            },
            Task::Cloze => match serde_json::from_str::<ClozeExample>(&line) {
                Ok(ex) => {
                    let src = source_map.as_ref().and_then(|m| m.get(&ex.id)).map(String::as_str);
                    let mut v = cloze_violations(&ex, cfg, src);
                    if source_map.is_some() && src.is_none() && !v.contains(&Violation::Reconstruction) {
                        v.push(Violation::Reconstruction);
                    }
                    (ex.id, v)
                }
                Err(_) => {
                    report.malformed += 1;
                    push_sample(&mut report, format!("line {line_no}: malformed"));
                    continue;
                }
            },
        };
        if !seen.insert(id.clone()) {
            report.flag(Violation::DuplicateId, &id);
        }
        for v in violations {
            report.flag(v, &id);
        }
    }
    Ok(report)
}

fn push_sample(report: &mut ValidationReport, msg: String) {
    if report.samples.len() < MAX_SAMPLES {
        report.samples.push(msg);
    }
}

/// Streaming accumulator for the span statistics table.
#[derive(Debug, Default)]
pub struct SpanSummaryBuilder {
    groups: HashSet<String>,
    contexts: HashSet<String>,
    stats: SpanStats,
    dist: LengthDistribution,
}

impl SpanSummaryBuilder {
    pub fn add(&mut self, ex: &SpanExample) {
        self.groups.insert(ex.group_key().to_string());
        self.contexts.insert(ex.context.clone());
        let len = ex.answer_len() as u64;
        let s = &mut self.stats;
        s.questions += 1;
        s.max_context_tokens = s.max_context_tokens.max(ex.context.chars().count() as u64);
        s.max_answer_tokens = s.max_answer_tokens.max(len);
        s.min_answer_tokens = if s.questions == 1 { len } else { s.min_answer_tokens.min(len) };
        self.dist.add(len as usize);
    }

    pub fn finish(mut self, name: impl Into<String>) -> DatasetSummary {
        self.stats.paragraphs = self.groups.len() as u64;
        self.stats.passages = self.contexts.len() as u64;
        DatasetSummary {
            name: name.into(),
            stats: DatasetStats::Span(self.stats),
            distribution: self.dist,
        }
    }
}

#[derive(Debug, Default)]
pub struct ClozeSummaryBuilder {
    stats: ClozeStats,
    dist: LengthDistribution,
}

impl ClozeSummaryBuilder {
    pub fn add(&mut self, ex: &ClozeExample) {
        let s = &mut self.stats;
        s.passages += 1;
        s.blanks += blank_regex().find_iter(&ex.passage).count() as u64;
        s.options = s.options.max(ex.options.len() as u64);
        let filled_len = ex
            .reconstruct()
            .map(|r| r.chars().count())
            .unwrap_or_else(|| ex.passage.chars().count()) as u64;
        s.max_passage_tokens = s.max_passage_tokens.max(filled_len);
        for opt in ex.options.values() {
            let len = opt.chars().count() as u64;
            s.max_answer_tokens = s.max_answer_tokens.max(len);
            s.min_answer_tokens = if self.dist.is_empty() { len } else { s.min_answer_tokens.min(len) };
            self.dist.add(len as usize);
        }
    }

    pub fn finish(self, name: impl Into<String>) -> DatasetSummary {
        DatasetSummary {
            name: name.into(),
            stats: DatasetStats::Cloze(self.stats),
            distribution: self.dist,
        }
    }
}

/// Answer-length histogram of a dataset file: answer lengths for span
/// records, every option length for cloze records.
pub fn answer_length_histogram(path: &Path, task: Task) -> Result<LengthDistribution> {
    Ok(summarize_file(path, task, "")?.distribution)
}

/// Reads a dataset file and computes its statistics column.
pub fn summarize_file(path: &Path, task: Task, name: &str) -> Result<DatasetSummary> {
    let summary = match task {
        Task::Span => {
            let mut b = SpanSummaryBuilder::default();
            for item in jsonl::read_lines(path)? {
                let (n, line) = item?;
                b.add(&jsonl::parse_line::<SpanExample>(path, n, &line)?);
            }
            b.finish(name)
        }
        Task::Cloze => {
            let mut b = ClozeSummaryBuilder::default();
            for item in jsonl::read_lines(path)? {
                let (n, line) = item?;
                b.add(&jsonl::parse_line::<ClozeExample>(path, n, &line)?);
            }
            b.finish(name)
        }
    };
    if summary.distribution.is_empty() {
        return Err(Error::Stats(crate::error::StatsError::EmptyDataset));
    }
    Ok(summary)
}

#[derive(Deserialize)]
struct SquadFile {
    data: Vec<SquadArticle>,
}

#[derive(Deserialize)]
struct SquadArticle {
    #[serde(default)]
    title: Option<String>,
    paragraphs: Vec<SquadParagraph>,
}

#[derive(Deserialize)]
struct SquadParagraph {
    context: String,
    qas: Vec<SquadQa>,
}

#[derive(Deserialize)]
struct SquadQa {
    id: String,
    question: String,
    #[serde(default)]
    answers: Vec<SquadAnswer>,
    #[serde(default)]
    is_impossible: bool,
}

#[derive(Deserialize)]
struct SquadAnswer {
    text: String,
    answer_start: usize,
}

/// Flattens a nested SQuAD JSON document into span records, one per
/// answerable question, using the first listed answer.
///
/// SQuAD's `answer_start` is assumed to be a character offset.
pub fn flatten_squad(json: &str) -> std::result::Result<Vec<SpanExample>, serde_json::Error> {
    let file: SquadFile = serde_json::from_str(json)?;
    let mut out = Vec::new();
    for article in file.data {
        for para in article.paragraphs {
            for qa in para.qas {
                if qa.is_impossible {
                    continue;
                }
                if let Some(ans) = qa.answers.into_iter().next() {
                    out.push(SpanExample {
                        id: qa.id,
                        title: article.title.clone(),
                        context: para.context.clone(),
                        question: qa.question,
                        answer: SpanAnswer {
                            text: ans.text,
                            answer_start: ans.answer_start,
                        },
                    });
                }
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::split_sentences;

    fn span(id: &str, context: &str, answer: &str) -> SpanExample {
        let start = context.find(answer).map(|b| context[..b].chars().count()).unwrap_or(0);
        SpanExample {
            id: id.into(),
            title: None,
            context: context.into(),
            question: "疾病传播可以归入哪些研究领域的范畴？".into(),
            answer: SpanAnswer {
                text: answer.into(),
                answer_start: start,
            },
        }
    }

    const CONTEXT: &str = "传染病的医学治疗属于传染病医学领域，在某些情况下传播学的研究属于流行病学领域。";

    #[test]
    fn span_bucketing() {
        let short = Bucket::ShortSpan.config();
        let long = Bucket::LongSpan.config();
        assert_eq!(classify_span(&span("a", CONTEXT, "流行病学"), &short), Ok(()));
        assert_eq!(classify_span(&span("b", CONTEXT, "流行病"), &short), Err(RejectReason::TooShort));
        let seven = span("c", CONTEXT, "传染病医学领域");
        assert_eq!(seven.answer_len(), 7);
        assert_eq!(classify_span(&seven, &short), Err(RejectReason::TooLong));
        assert_eq!(classify_span(&seven, &long), Ok(()));
        let mut bad = span("d", CONTEXT, "流行病学");
        bad.answer.answer_start += 1;
        assert_eq!(classify_span(&bad, &short), Err(RejectReason::OffsetMismatch));
        let mut overflow = span("e", CONTEXT, "流行病学");
        overflow.answer.answer_start = 1000;
        assert_eq!(classify_span(&overflow, &short), Err(RejectReason::OffsetMismatch));
    }

    #[test]
    fn malformed_records_do_not_abort() {
        let out = bucket_span_examples(
            vec![Err(Some(3)), Ok(span("a", CONTEXT, "流行病学")), Ok(span("b", CONTEXT, "流行病"))],
            &Bucket::ShortSpan.config(),
        );
        assert_eq!(out.kept.len(), 1);
        let reasons: Vec<_> = out.rejected.iter().map(|r| r.reason).collect();
        assert_eq!(reasons, [RejectReason::Malformed, RejectReason::TooShort]);
    }

    #[test]
    fn default_buckets_are_disjoint() {
        for (a, b) in [(Bucket::ShortSpan, Bucket::LongSpan), (Bucket::ShortCloze, Bucket::LongCloze)] {
            for len in 0..64 {
                assert!(!(a.config().admits(len) && b.config().admits(len)), "{len}");
            }
        }
        assert_eq!("long-cloze".parse::<Bucket>().unwrap().config().min_len, 17);
    }

    fn nine_sentence_paragraph() -> Paragraph {
        // Nine 8-char sentences and two 3-char ones.
        let mut text = String::new();
        for i in 0..9 {
            text.push_str(&format!("第{}句子内容很长", ["一", "二", "三", "四", "五", "六", "七", "八", "九"][i]));
            text.push_str(if i % 2 == 0 { "，" } else { "。" });
            if i == 4 {
                text.push_str("短句子；");
            }
        }
        text.push_str("结尾了！");
        Paragraph {
            doc_id: "doc".into(),
            index: 0,
            text,
        }
    }

    #[test]
    fn cloze_example_shape_and_reconstruction() {
        let p = nine_sentence_paragraph();
        let sentences = split_sentences(&p);
        let cfg = Bucket::ShortCloze.config();
        let ClozeOutcome::Built(ex) = build_cloze_example(&p, &sentences, &cfg, 42).unwrap() else {
            panic!("expected a cloze example");
        };
        assert_eq!(ex.options.len(), 9);
        assert_eq!(ex.answers.len(), 9);
        let distinct: BTreeSet<_> = ex.answers.iter().collect();
        assert_eq!(distinct.len(), 9);
        for i in 1..=9 {
            assert_eq!(ex.passage.matches(&blank_marker(i)).count(), 1);
        }
        assert_eq!(ex.reconstruct().as_deref(), Some(p.text.as_str()));
        assert!(cloze_violations(&ex, &cfg, Some(&p.text)).is_empty());

        let again = build_cloze_example(&p, &sentences, &cfg, 42).unwrap();
        assert_eq!(again, ClozeOutcome::Built(ex.clone()));
        let json_a = serde_json::to_string(&ex).unwrap();
        let ClozeOutcome::Built(ex2) = again else { unreachable!() };
        assert_eq!(json_a, serde_json::to_string(&ex2).unwrap());
    }

    #[test]
    fn cloze_skips_when_short_of_candidates() {
        let p = Paragraph {
            doc_id: "d".into(),
            index: 1,
            text: "第一句子内容很长，第二句子内容很长，第三句子内容很长，第四句子内容很长，第五句子内容很长。".into(),
        };
        let out = build_cloze_example(&p, &split_sentences(&p), &Bucket::ShortCloze.config(), 1).unwrap();
        assert_eq!(out, ClozeOutcome::Skip(SkipReason::NotEnoughCandidates { eligible: 5 }));
    }

    #[test]
    fn cloze_violation_detection() {
        let p = nine_sentence_paragraph();
        let cfg = Bucket::ShortCloze.config();
        let ClozeOutcome::Built(ex) = build_cloze_example(&p, &split_sentences(&p), &cfg, 5).unwrap() else {
            panic!()
        };
        let mut long_option = ex.clone();
        long_option.options.insert("A".into(), "一二三四五六七八九十一二三四五六".into());
        assert!(cloze_violations(&long_option, &cfg, None).contains(&Violation::LengthBounds));
        let mut dup = ex.clone();
        dup.answers[1] = dup.answers[0].clone();
        assert!(cloze_violations(&dup, &cfg, None).contains(&Violation::Permutation));
        let mut no_blank = ex.clone();
        no_blank.passage = no_blank.passage.replace("[BLANK3]", "");
        assert!(cloze_violations(&no_blank, &cfg, None).contains(&Violation::BlankCount));
        assert!(cloze_violations(&no_blank, &cfg, Some(&p.text)).contains(&Violation::Reconstruction));
    }

    #[test]
    fn split_assignment_is_seeded_and_proportional() {
        let r = SplitRatios::CLOZE;
        let mut counts = HashMap::new();
        for i in 0..20_000 {
            *counts.entry(r.assign(3, &format!("p{i}"))).or_insert(0) += 1;
        }
        let train = counts[&Split::Train] as f64 / 20_000.0;
        assert!((train - 4500.0 / 6500.0).abs() < 0.02, "{train}");
        assert_eq!(r.assign(3, "x"), r.assign(3, "x"));
        assert!("8,1,1".parse::<SplitRatios>().is_ok());
        assert!("8,1".parse::<SplitRatios>().is_err());
    }

    #[test]
    fn squad_flattening_skips_unanswerable() {
        let json = r#"{"data":[{"title":"T","paragraphs":[{"context":"流行病学领域","qas":[
            {"id":"q1","question":"?","answers":[{"text":"流行病学","answer_start":0}]},
            {"id":"q2","question":"?","answers":[],"is_impossible":true}]}]}]}"#;
        let flat = flatten_squad(json).unwrap();
        assert_eq!(flat.len(), 1);
        assert_eq!(flat[0].title.as_deref(), Some("T"));
        assert!(flat[0].offset_matches());
    }
}
