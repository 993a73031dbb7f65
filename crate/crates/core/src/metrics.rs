//! Span-extraction (precision / recall / F1 over the maximum common span,
//! exact match) and cloze (question and passage accuracy) scoring.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::dataset::{Bucket, ClozeExample, SpanExample};
use crate::error::{MetricsError, Result};
use crate::jsonl::read_all;
use crate::stats::Task;
use crate::tokenizer::{basic_tokens, BLANK_COUNT};

/// Length of the longest contiguous run common to `a` and `b`.
pub fn max_common_span<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    let mut best = 0;
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Multiset intersection size, as in the common SQuAD evaluation script.
pub fn bag_overlap<T: Eq + std::hash::Hash>(a: &[T], b: &[T]) -> usize {
    let mut counts: HashMap<&T, usize> = HashMap::new();
    for x in a {
        *counts.entry(x).or_default() += 1;
    }
    b.iter()
        .filter(|y| match counts.get_mut(y) {
            Some(c) if *c > 0 => {
                *c -= 1;
                true
            }
            _ => false,
        })
        .count()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Overlap {
    #[default]
    Mcs,
    Bag,
}

impl FromStr for Overlap {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "mcs" => Ok(Overlap::Mcs),
            "bag" => Ok(Overlap::Bag),
            _ => Err(format!("unknown overlap mode {s:?} (expected mcs or bag)")),
        }
    }
}

/// How per-question F1 values combine into the aggregate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum F1Average {
    /// Mean of per-question F1.
    #[default]
    Macro,
    /// F1 from pooled TP / FP / FN counts.
    Micro,
}

impl FromStr for F1Average {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "macro" => Ok(F1Average::Macro),
            "micro" => Ok(F1Average::Micro),
            _ => Err(format!("unknown average {s:?} (expected macro or micro)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct OverlapCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

impl OverlapCounts {
    pub fn between<T: Eq + std::hash::Hash>(gold: &[T], pred: &[T], mode: Overlap) -> Self {
        let tp = match mode {
            Overlap::Mcs => max_common_span(gold, pred),
            Overlap::Bag => bag_overlap(gold, pred),
        };
        Self {
            tp,
            fp: pred.len() - tp,
            fn_: gold.len() - tp,
        }
    }

    pub fn scores(&self) -> SpanScore {
        let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        SpanScore { precision, recall, f1 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpanScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

/// Precision, recall and F1 of one prediction, with the maximum common span
/// as true positives.
pub fn span_scores<T: Eq + std::hash::Hash>(gold: &[T], pred: &[T]) -> std::result::Result<SpanScore, MetricsError> {
    span_scores_with(gold, pred, Overlap::Mcs)
}

pub fn span_scores_with<T: Eq + std::hash::Hash>(
    gold: &[T],
    pred: &[T],
    mode: Overlap,
) -> std::result::Result<SpanScore, MetricsError> {
    if gold.is_empty() {
        return Err(MetricsError::EmptyGold(String::new()));
    }
    Ok(OverlapCounts::between(gold, pred, mode).scores())
}

/// NFC, trimmed, inner whitespace runs collapsed to one space.
pub fn normalize_answer(s: &str) -> String {
    let nfc: String = s.nfc().collect();
    nfc.split_whitespace().collect::<Vec<_>>().join(" ")
}

pub fn answers_match(gold: &str, pred: &str) -> bool {
    normalize_answer(gold) == normalize_answer(pred)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanPrediction {
    pub id: String,
    pub prediction_text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClozePrediction {
    pub id: String,
    pub answers: Vec<String>,
}

fn index_by_id<T>(
    items: &[T],
    id: impl Fn(&T) -> &str,
) -> std::result::Result<HashMap<&str, &T>, MetricsError> {
    let mut map = HashMap::with_capacity(items.len());
    for item in items {
        if map.insert(id(item), item).is_some() {
            return Err(MetricsError::DuplicateId(id(item).to_string()));
        }
    }
    Ok(map)
}

/// Fraction of gold answers whose prediction matches exactly.
pub fn exact_match(golds: &[SpanExample], preds: &[SpanPrediction]) -> std::result::Result<f64, MetricsError> {
    let by_id = index_by_id(preds, |p| &p.id)?;
    let mut hits = 0usize;
    for g in golds {
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| MetricsError::MissingPrediction(g.id.clone()))?;
        hits += answers_match(&g.answer.text, &p.prediction_text) as usize;
    }
    Ok(if golds.is_empty() { 0.0 } else { hits as f64 / golds.len() as f64 })
}

/// Blanks answered correctly in one passage.
pub fn cloze_correct(gold: &ClozeExample, pred: &ClozePrediction) -> std::result::Result<usize, MetricsError> {
    if pred.answers.len() != BLANK_COUNT {
        return Err(MetricsError::ArityError(pred.id.clone()));
    }
    Ok(gold.answers.iter().zip(&pred.answers).filter(|(g, p)| g == p).count())
}

/// `(QAC, PAC)`: correct blanks over all blanks, and fully correct passages
/// over all passages.
pub fn cloze_scores(golds: &[ClozeExample], preds: &[ClozePrediction]) -> std::result::Result<(f64, f64), MetricsError> {
    let by_id = index_by_id(preds, |p| &p.id)?;
    let (mut correct, mut blanks, mut perfect) = (0usize, 0usize, 0usize);
    for g in golds {
        let p = by_id
            .get(g.id.as_str())
            .ok_or_else(|| MetricsError::MissingPrediction(g.id.clone()))?;
        let c = cloze_correct(g, p)?;
        correct += c;
        blanks += g.answers.len();
        perfect += (c == g.answers.len()) as usize;
    }
    if golds.is_empty() {
        return Ok((0.0, 0.0));
    }
    Ok((correct as f64 / blanks as f64, perfect as f64 / golds.len() as f64))
}

/// Published human performance. Reported alongside computed scores, never
/// computed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub label: String,
    pub first: f64,
    pub second: f64,
}

pub const REFERENCE_LABEL: &str = "Human (reference, not computed)";

pub fn human_reference(bucket: Bucket) -> ReferenceRow {
    let (first, second) = match bucket {
        Bucket::ShortSpan => (93.56, 85.34),
        Bucket::LongSpan => (90.47, 82.56),
        Bucket::ShortCloze => (97.45, 92.87),
        Bucket::LongCloze => (95.24, 90.71),
    };
    ReferenceRow {
        label: REFERENCE_LABEL.to_string(),
        first,
        second,
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ScoreOptions {
    pub overlap: Overlap,
    pub average: F1Average,
    pub reference: Option<Bucket>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ItemScore {
    Span { id: String, f1: f64, em: f64 },
    Cloze { id: String, qac: f64, pac: f64 },
}

impl ItemScore {
    pub fn id(&self) -> &str {
        match self {
            ItemScore::Span { id, .. } | ItemScore::Cloze { id, .. } => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub task: Task,
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub f1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub em: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qac: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pac: Option<f64>,
    /// Gold ids without a prediction. Not scored.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub missing: Vec<String>,
    /// Prediction ids absent from the gold file. Ignored.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub unexpected: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<ReferenceRow>,
    pub items: Vec<ItemScore>,
}

fn pct(x: f64) -> f64 {
    (x * 10000.0).round() / 100.0
}

impl EvalReport {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    fn columns(&self) -> (&'static str, &'static str, Option<f64>, Option<f64>) {
        match self.task {
            Task::Span => ("F1", "EM", self.f1, self.em),
            Task::Cloze => ("QAC", "PAC", self.qac, self.pac),
        }
    }

    /// Plain-text table with the computed row and, when requested, the
    /// reference row.
    pub fn render_table(&self) -> String {
        let (a, b, x, y) = self.columns();
        let mut out = format!("{:<34}{:>8}{:>8}\n", "Model", a, b);
        let _ = writeln!(
            out,
            "{:<34}{:>8.2}{:>8.2}",
            format!("Predictions (n={})", self.n),
            x.unwrap_or(0.0),
            y.unwrap_or(0.0)
        );
        if let Some(r) = &self.reference {
            let _ = writeln!(out, "{:<34}{:>8.2}{:>8.2}", r.label, r.first, r.second);
        }
        out
    }
}

type Matched<'a, G, P> = (Vec<(&'a G, &'a P)>, Vec<String>, Vec<String>);

fn split_missing<'a, G, P>(
    golds: &'a [G],
    preds: &'a [P],
    gid: impl Fn(&G) -> &str,
    pid: impl Fn(&P) -> &str + Copy,
) -> std::result::Result<Matched<'a, G, P>, MetricsError> {
    let by_id = index_by_id(preds, pid)?;
    index_by_id(golds, &gid)?;
    let gold_ids: HashSet<&str> = golds.iter().map(&gid).collect();
    let mut pairs = Vec::new();
    let mut missing = Vec::new();
    for g in golds {
        match by_id.get(gid(g)) {
            Some(p) => pairs.push((g, *p)),
            None => missing.push(gid(g).to_string()),
        }
    }
    let mut unexpected: Vec<String> = preds
        .iter()
        .map(pid)
        .filter(|id| !gold_ids.contains(id))
        .map(String::from)
        .collect();
    missing.sort();
    unexpected.sort();
    pairs.sort_by(|a, b| gid(a.0).cmp(gid(b.0)));
    Ok((pairs, missing, unexpected))
}

/// Scores span predictions. Missing ids are listed and skipped; the result
/// does not depend on record order in either input.
pub fn score_span(
    golds: &[SpanExample],
    preds: &[SpanPrediction],
    opts: &ScoreOptions,
) -> std::result::Result<EvalReport, MetricsError> {
    let (pairs, missing, unexpected) = split_missing(golds, preds, |g| &g.id, |p| &p.id)?;
    let scored: Vec<(OverlapCounts, bool)> = pairs
        .par_iter()
        .map(|(g, p)| {
            let gold = basic_tokens(&g.answer.text);
            if gold.is_empty() {
                return Err(MetricsError::EmptyGold(g.id.clone()));
            }
            let pred = basic_tokens(&p.prediction_text);
            Ok((
                OverlapCounts::between(&gold, &pred, opts.overlap),
                answers_match(&g.answer.text, &p.prediction_text),
            ))
        })
        .collect::<std::result::Result<_, _>>()?;
    let n = scored.len();
    let items: Vec<ItemScore> = pairs
        .iter()
        .zip(&scored)
        .map(|((g, _), (c, em))| ItemScore::Span {
            id: g.id.clone(),
            f1: c.scores().f1 * 100.0,
            em: if *em { 100.0 } else { 0.0 },
        })
        .collect();
    let (f1, em) = if n == 0 {
        (0.0, 0.0)
    } else {
        let f1 = match opts.average {
            F1Average::Macro => scored.iter().map(|(c, _)| c.scores().f1).sum::<f64>() / n as f64,
            F1Average::Micro => {
                let pooled = scored.iter().fold(OverlapCounts::default(), |acc, (c, _)| OverlapCounts {
                    tp: acc.tp + c.tp,
                    fp: acc.fp + c.fp,
                    fn_: acc.fn_ + c.fn_,
                });
                pooled.scores().f1
            }
        };
        (f1, scored.iter().filter(|(_, em)| *em).count() as f64 / n as f64)
    };
    Ok(EvalReport {
        task: Task::Span,
        n,
        f1: Some(pct(f1)),
        em: Some(pct(em)),
        qac: None,
        pac: None,
        missing,
        unexpected,
        reference: opts.reference.map(human_reference),
        items,
    })
}

pub fn score_cloze(
    golds: &[ClozeExample],
    preds: &[ClozePrediction],
    opts: &ScoreOptions,
) -> std::result::Result<EvalReport, MetricsError> {
    let (pairs, missing, unexpected) = split_missing(golds, preds, |g| &g.id, |p| &p.id)?;
    let mut items = Vec::with_capacity(pairs.len());
    let (mut correct, mut blanks, mut perfect) = (0usize, 0usize, 0usize);
    for (g, p) in &pairs {
        let c = cloze_correct(g, p)?;
        let total = g.answers.len().max(1);
        correct += c;
        blanks += total;
        perfect += (c == total) as usize;
        items.push(ItemScore::Cloze {
            id: g.id.clone(),
            qac: c as f64 / total as f64 * 100.0,
            pac: if c == total { 100.0 } else { 0.0 },
        });
    }
    let n = pairs.len();
    let (qac, pac) = if n == 0 {
        (0.0, 0.0)
    } else {
        (correct as f64 / blanks as f64, perfect as f64 / n as f64)
    };
    Ok(EvalReport {
        task: Task::Cloze,
        n,
        f1: None,
        em: None,
        qac: Some(pct(qac)),
        pac: Some(pct(pac)),
        missing,
        unexpected,
        reference: opts.reference.map(human_reference),
        items,
    })
}

/// Reads gold and prediction JSONL files and scores them.
pub fn score_file(gold: &Path, pred: &Path, task: Task, opts: &ScoreOptions) -> Result<EvalReport> {
    Ok(match task {
        Task::Span => score_span(&read_all(gold)?, &read_all(pred)?, opts)?,
        Task::Cloze => score_cloze(&read_all(gold)?, &read_all(pred)?, opts)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SpanAnswer;

    fn chars(s: &str) -> Vec<char> {
        s.chars().collect()
    }

    #[test]
    fn mcs_examples() {
        assert_eq!(max_common_span(&chars("流行病学"), &chars("流行病学")), 4);
        assert_eq!(max_common_span(&chars("流行病学"), &chars("病学领域")), 2);
        assert_eq!(max_common_span(&chars("甲乙"), &chars("丙丁")), 0);
        assert_eq!(max_common_span::<char>(&[], &chars("丙丁")), 0);
        // Bag overlap counts scattered matches the contiguous span does not.
        assert_eq!(bag_overlap(&chars("甲乙丙"), &chars("甲丙")), 2);
        assert_eq!(max_common_span(&chars("甲乙丙"), &chars("甲丙")), 1);
    }

    #[test]
    fn span_score_examples() {
        let s = span_scores(&chars("流行病学"), &chars("流行病学")).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        let s = span_scores(&chars("流行病学"), &chars("病学领域")).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.5, 0.5, 0.5));
        let s = span_scores(&chars("甲乙"), &chars("丙丁")).unwrap();
        assert_eq!((s.precision, s.recall, s.f1), (0.0, 0.0, 0.0));
        let s = span_scores(&chars("甲乙"), &[]).unwrap();
        assert_eq!(s.f1, 0.0);
        assert!(matches!(span_scores::<char>(&[], &chars("甲")), Err(MetricsError::EmptyGold(_))));
    }

    fn span(id: &str, answer: &str) -> SpanExample {
        SpanExample {
            id: id.into(),
            title: None,
            context: answer.into(),
            question: "?".into(),
            answer: SpanAnswer {
                text: answer.into(),
                answer_start: 0,
            },
        }
    }

    fn pred(id: &str, text: &str) -> SpanPrediction {
        SpanPrediction {
            id: id.into(),
            prediction_text: text.into(),
        }
    }

    #[test]
    fn exact_match_ratios() {
        let golds: Vec<_> = (0..4).map(|i| span(&i.to_string(), "流行病学")).collect();
        let mut preds: Vec<_> = (0..4).map(|i| pred(&i.to_string(), " 流行病学 ")).collect();
        assert_eq!(exact_match(&golds, &preds).unwrap(), 1.0);
        preds[2].prediction_text = "病学".into();
        assert_eq!(exact_match(&golds, &preds).unwrap(), 0.75);
        preds.pop();
        assert_eq!(exact_match(&golds, &preds), Err(MetricsError::MissingPrediction("3".into())));
    }

    fn cloze(id: &str, key: &[&str]) -> ClozeExample {
        ClozeExample {
            id: id.into(),
            passage: String::new(),
            options: Default::default(),
            answers: key.iter().map(|s| s.to_string()).collect(),
        }
    }

    fn cpred(id: &str, key: &[&str]) -> ClozePrediction {
        ClozePrediction {
            id: id.into(),
            answers: key.iter().map(|s| s.to_string()).collect(),
        }
    }

    const KEY: [&str; 9] = ["G", "I", "H", "F", "C", "D", "B", "E", "A"];

    #[test]
    fn cloze_examples() {
        let g = vec![cloze("a", &KEY), cloze("b", &KEY)];
        assert_eq!(cloze_scores(&g, &[cpred("a", &KEY), cpred("b", &KEY)]).unwrap(), (1.0, 1.0));
        let mut eight = KEY;
        eight.swap(0, 1);
        eight[1] = "I";
        let (q, p) = cloze_scores(&g[..1], &[cpred("a", &eight)]).unwrap();
        assert!((q - 8.0 / 9.0).abs() < 1e-12 && p == 0.0);
        let wrong = ["A", "A", "A", "A", "A", "A", "A", "A", "B"];
        assert_eq!(cloze_scores(&g, &[cpred("a", &KEY), cpred("b", &wrong)]).unwrap(), (0.5, 0.5));
        assert_eq!(
            cloze_scores(&g[..1], &[cpred("a", &KEY[..8])]),
            Err(MetricsError::ArityError("a".into()))
        );
    }

    #[test]
    fn report_lists_missing_and_renders_reference() {
        let golds: Vec<_> = (0..100).map(|i| span(&format!("q{i:03}"), "流行病学")).collect();
        let preds: Vec<_> = (1..100).map(|i| pred(&format!("q{i:03}"), "流行病学")).collect();
        let opts = ScoreOptions {
            reference: Some(Bucket::ShortSpan),
            ..Default::default()
        };
        let r = score_span(&golds, &preds, &opts).unwrap();
        assert_eq!(r.missing, ["q000"]);
        assert_eq!((r.n, r.f1, r.em), (99, Some(100.0), Some(100.0)));
        let table = r.render_table();
        assert!(table.contains("93.56") && table.contains("85.34"), "{table}");
        assert!(table.contains("100.00"));
        let json = serde_json::to_value(&r).unwrap();
        assert_eq!(json["task"], "span");
        assert_eq!(json["f1"], 100.0);
    }

    #[test]
    fn micro_and_macro_differ() {
        let golds = vec![span("a", "甲乙丙丁"), span("b", "戊")];
        let preds = vec![pred("a", "甲乙丙丁"), pred("b", "己")];
        let macro_ = score_span(&golds, &preds, &ScoreOptions::default()).unwrap();
        assert_eq!(macro_.f1, Some(50.0));
        let micro = score_span(
            &golds,
            &preds,
            &ScoreOptions {
                average: F1Average::Micro,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(micro.f1, Some(80.0));
    }
}
