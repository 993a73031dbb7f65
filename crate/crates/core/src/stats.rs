//! Answer-length histograms, their probability form, and the dataset
//! statistics tables (data-size rows plus the per-length breakdown).

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::StatsError;

/// Counts `X_l` of answers (or mask spans) of each length `l`.
///
/// Serialized as `{"counts":{"4":16171,...},"total":31390}`; this file is the
/// hand-off format to the masking engine.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawDistribution")]
pub struct LengthDistribution {
    counts: BTreeMap<usize, u64>,
    total: u64,
}

#[derive(Deserialize)]
struct RawDistribution {
    counts: BTreeMap<usize, u64>,
    total: Option<u64>,
}

impl TryFrom<RawDistribution> for LengthDistribution {
    type Error = StatsError;

    fn try_from(raw: RawDistribution) -> Result<Self, Self::Error> {
        let dist = Self::from_counts(raw.counts)?;
        match raw.total {
            Some(t) if t != dist.total => Err(StatsError::InvalidDistribution(format!(
                "total {t} does not match sum of counts {}",
                dist.total
            ))),
            _ => Ok(dist),
        }
    }
}

impl LengthDistribution {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds from explicit counts. Zero counts are dropped; a zero length is
    /// rejected because no span can have it.
    pub fn from_counts<I: IntoIterator<Item = (usize, u64)>>(counts: I) -> Result<Self, StatsError> {
        let mut dist = Self::new();
        for (len, count) in counts {
            if len == 0 {
                return Err(StatsError::InvalidDistribution("length 0".into()));
            }
            dist.add_many(len, count);
        }
        Ok(dist)
    }

    pub fn from_lengths<I: IntoIterator<Item = usize>>(lengths: I) -> Self {
        let mut dist = Self::new();
        for l in lengths {
            dist.add(l);
        }
        dist
    }

    pub fn add(&mut self, len: usize) {
        self.add_many(len, 1);
    }

    pub fn add_many(&mut self, len: usize, count: u64) {
        if count > 0 {
            *self.counts.entry(len).or_insert(0) += count;
            self.total += count;
        }
    }

    /// Associative merge of two histograms.
    pub fn merge(&mut self, other: &LengthDistribution) {
        for (&l, &c) in &other.counts {
            self.add_many(l, c);
        }
    }

    pub fn counts(&self) -> &BTreeMap<usize, u64> {
        &self.counts
    }

    pub fn count(&self, len: usize) -> u64 {
        self.counts.get(&len).copied().unwrap_or(0)
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn is_empty(&self) -> bool {
        self.total == 0
    }

    pub fn min_len(&self) -> Option<usize> {
        self.counts.keys().next().copied()
    }

    pub fn max_len(&self) -> Option<usize> {
        self.counts.keys().next_back().copied()
    }

    /// Full-precision `X_l / ΣX_l`.
    pub fn probability(&self, len: usize) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(len) as f64 / self.total as f64
        }
    }

    pub fn probs(&self) -> BTreeMap<usize, f64> {
        self.counts.keys().map(|&l| (l, self.probability(l))).collect()
    }

    /// Mean length, weighted by count.
    pub fn mean(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        self.counts.iter().map(|(&l, &c)| l as f64 * c as f64).sum::<f64>() / self.total as f64
    }

    /// L1 distance between the probability vectors of two distributions.
    pub fn l1_distance(&self, other: &LengthDistribution) -> f64 {
        let keys: std::collections::BTreeSet<usize> =
            self.counts.keys().chain(other.counts.keys()).copied().collect();
        keys.iter()
            .map(|&l| (self.probability(l) - other.probability(l)).abs())
            .sum()
    }
}

/// Percentage of `count / total` in hundredths of a percent, rounded half up
/// using exact integer arithmetic.
pub fn percent_hundredths(count: u64, total: u64) -> u64 {
    debug_assert!(total > 0);
    let num = count as u128 * 20_000 + total as u128;
    (num / (2 * total as u128)) as u64
}

/// `count / total` as a percentage with two decimals, e.g. `"51.52"`.
pub fn render_percent(count: u64, total: u64) -> String {
    let h = percent_hundredths(count, total);
    format!("{}.{:02}", h / 100, h % 100)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LengthProbability {
    pub length: usize,
    pub count: u64,
    pub probability: f64,
    /// Rounded for display only; sampling uses `probability`.
    pub percent: String,
}

/// Normalizes a histogram into per-length probabilities.
pub fn to_probabilities(hist: &LengthDistribution) -> Result<Vec<LengthProbability>, StatsError> {
    if hist.is_empty() {
        return Err(StatsError::EmptyDataset);
    }
    Ok(hist
        .counts
        .iter()
        .map(|(&length, &count)| LengthProbability {
            length,
            count,
            probability: count as f64 / hist.total as f64,
            percent: render_percent(count, hist.total),
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Span,
    Cloze,
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Task::Span => "span",
            Task::Cloze => "cloze",
        })
    }
}

impl std::str::FromStr for Task {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "span" => Ok(Task::Span),
            "cloze" => Ok(Task::Cloze),
            other => Err(format!("unknown task {other:?} (expected span or cloze)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanStats {
    pub paragraphs: u64,
    pub passages: u64,
    pub questions: u64,
    pub max_context_tokens: u64,
    pub max_answer_tokens: u64,
    pub min_answer_tokens: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozeStats {
    pub passages: u64,
    pub blanks: u64,
    pub max_passage_tokens: u64,
    pub max_answer_tokens: u64,
    pub min_answer_tokens: u64,
    pub options: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "lowercase")]
pub enum DatasetStats {
    Span(SpanStats),
    Cloze(ClozeStats),
}

impl DatasetStats {
    pub fn task(&self) -> Task {
        match self {
            DatasetStats::Span(_) => Task::Span,
            DatasetStats::Cloze(_) => Task::Cloze,
        }
    }

    fn rows(&self) -> Vec<(&'static str, u64)> {
        match self {
            DatasetStats::Span(s) => vec![
                ("Paragraph #", s.paragraphs),
                ("Passage #", s.passages),
                ("Question #", s.questions),
                ("Max Tokens in a Context #", s.max_context_tokens),
                ("Max Answer Tokens #", s.max_answer_tokens),
                ("Min Answer Tokens #", s.min_answer_tokens),
            ],
            DatasetStats::Cloze(s) => vec![
                ("Passages #", s.passages),
                ("Blanks #", s.blanks),
                ("Max Tokens in a Passage #", s.max_passage_tokens),
                ("Max Answer Tokens #", s.max_answer_tokens),
                ("Min Answer Tokens #", s.min_answer_tokens),
                ("Options #", s.options),
            ],
        }
    }
}

/// One column of a statistics table: a named dataset split.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetSummary {
    pub name: String,
    pub stats: DatasetStats,
    pub distribution: LengthDistribution,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Tsv,
    Markdown,
    Json,
}

impl std::str::FromStr for ReportFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tsv" => Ok(ReportFormat::Tsv),
            "markdown" | "md" => Ok(ReportFormat::Markdown),
            "json" => Ok(ReportFormat::Json),
            other => Err(format!("unknown format {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JsonReport {
    pub task: Option<Task>,
    pub datasets: Vec<DatasetSummary>,
}

/// Renders the size rows and the per-length breakdown for datasets of one task.
pub fn stats_report(datasets: &[DatasetSummary], format: ReportFormat) -> Result<String, StatsError> {
    let task = match datasets.first() {
        Some(first) => {
            let t = first.stats.task();
            if let Some(other) = datasets.iter().find(|d| d.stats.task() != t) {
                return Err(StatsError::TaskMismatch(t.to_string(), other.stats.task().to_string()));
            }
            Some(t)
        }
        None => None,
    };
    if format == ReportFormat::Json {
        let report = JsonReport {
            task,
            datasets: datasets.to_vec(),
        };
        return Ok(serde_json::to_string_pretty(&report).expect("report serializes") + "\n");
    }

    let mut table = Table::new(format);
    let mut header = vec!["Statistic".to_string()];
    header.extend(datasets.iter().map(|d| d.name.clone()));
    table.row(&header, true);
    if datasets.is_empty() {
        return Ok(table.finish());
    }
    for (i, (label, _)) in datasets[0].stats.rows().iter().enumerate() {
        let mut row = vec![label.to_string()];
        row.extend(datasets.iter().map(|d| d.stats.rows()[i].1.to_string()));
        table.row(&row, false);
    }

    table.blank();
    let mut header = vec!["# Tokens".to_string()];
    for d in datasets {
        header.push(format!("# {}", d.name));
        header.push("PP %".to_string());
    }
    table.row(&header, true);
    let lengths: std::collections::BTreeSet<usize> = datasets
        .iter()
        .flat_map(|d| d.distribution.counts().keys().copied())
        .collect();
    for len in lengths {
        let mut row = vec![len.to_string()];
        for d in datasets {
            let c = d.distribution.count(len);
            row.push(c.to_string());
            row.push(if d.distribution.is_empty() {
                "0.00%".to_string()
            } else {
                format!("{}%", render_percent(c, d.distribution.total()))
            });
        }
        table.row(&row, false);
    }
    let mut total = vec!["Total".to_string()];
    for d in datasets {
        total.push(d.distribution.total().to_string());
        total.push(if d.distribution.is_empty() { "0.00%" } else { "100.00%" }.to_string());
    }
    table.row(&total, false);
    Ok(table.finish())
}

struct Table {
    format: ReportFormat,
    out: String,
}

impl Table {
    fn new(format: ReportFormat) -> Self {
        Self {
            format,
            out: String::new(),
        }
    }

    fn row(&mut self, cells: &[String], header: bool) {
        match self.format {
            ReportFormat::Tsv => {
                let _ = writeln!(self.out, "{}", cells.join("\t"));
            }
            ReportFormat::Markdown => {
                let _ = writeln!(self.out, "| {} |", cells.join(" | "));
                if header {
                    let _ = writeln!(self.out, "|{}", "---|".repeat(cells.len()));
                }
            }
            ReportFormat::Json => unreachable!("json is rendered separately"),
        }
    }

    fn blank(&mut self) {
        self.out.push('\n');
    }

    fn finish(self) -> String {
        self.out
    }
}
