//! Span masking driven by a target length distribution.
//!
//! A plan is built by repeatedly drawing a span length from the distribution
//! and placing a span of that length uniformly among the free positions,
//! until the token budget (15% by default) is spent. Each span then gets one
//! replacement action for all of its tokens: `[MASK]` (80%), random tokens
//! (10%) or unchanged (10%). Dynamic masking repeats this `dupe_factor`
//! times per sequence with independent seeds.

use std::ops::Range;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::MaskError;
use crate::seed::{self, Rng};
use crate::stats::LengthDistribution;
use crate::tokenizer::{TokenId, Vocabulary};

/// Placement attempts per drawn length before the length is redrawn.
pub const PLACEMENT_RETRIES: usize = 30;

/// Label value at positions that are not part of any span.
pub const IGNORE_LABEL: i64 = -1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplaceProbs {
    pub mask: f64,
    pub random: f64,
    pub keep: f64,
}

impl Default for ReplaceProbs {
    fn default() -> Self {
        Self {
            mask: 0.8,
            random: 0.1,
            keep: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskingConfig {
    pub length_dist: LengthDistribution,
    pub budget_fraction: f64,
    pub dupe_factor: usize,
    pub replace_probs: ReplaceProbs,
    pub seed: u64,
}

impl MaskingConfig {
    pub fn new(length_dist: LengthDistribution, seed: u64) -> Self {
        Self {
            length_dist,
            budget_fraction: 0.15,
            dupe_factor: 10,
            replace_probs: ReplaceProbs::default(),
            seed,
        }
    }

    pub fn validate(&self) -> Result<(), MaskError> {
        let p = &self.replace_probs;
        if [p.mask, p.random, p.keep].iter().any(|x| !(0.0..=1.0).contains(x))
            || (p.mask + p.random + p.keep - 1.0).abs() > 1e-9
        {
            return Err(MaskError::InvalidConfig(format!(
                "replacement probabilities {}/{}/{} must be in [0,1] and sum to 1",
                p.mask, p.random, p.keep
            )));
        }
        if !(self.budget_fraction > 0.0 && self.budget_fraction < 1.0) {
            return Err(MaskError::InvalidConfig(format!(
                "budget fraction {} must be in (0, 1)",
                self.budget_fraction
            )));
        }
        if self.dupe_factor == 0 {
            return Err(MaskError::InvalidConfig("dupe factor must be at least 1".into()));
        }
        if self.length_dist.is_empty() {
            return Err(MaskError::InvalidConfig("length distribution is empty".into()));
        }
        Ok(())
    }
}

/// Inverse-CDF sampler over span lengths in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct SpanLengthSampler {
    lengths: Vec<usize>,
    cdf: Vec<f64>,
}

impl SpanLengthSampler {
    pub fn new(dist: &LengthDistribution) -> Result<Self, MaskError> {
        if dist.is_empty() {
            return Err(MaskError::InvalidConfig("length distribution is empty".into()));
        }
        let total = dist.total() as f64;
        let mut acc = 0u64;
        let mut lengths = Vec::with_capacity(dist.counts().len());
        let mut cdf = Vec::with_capacity(dist.counts().len());
        for (&len, &count) in dist.counts() {
            acc += count;
            lengths.push(len);
            cdf.push(acc as f64 / total);
        }
        Ok(Self { lengths, cdf })
    }

    /// Length whose CDF interval contains `u` in `[0, 1)`.
    pub fn length_for(&self, u: f64) -> usize {
        let i = self.cdf.partition_point(|&c| c <= u);
        self.lengths[i.min(self.lengths.len() - 1)]
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        self.length_for(rng.random::<f64>())
    }

    pub fn min_len(&self) -> usize {
        self.lengths[0]
    }

    pub fn max_len(&self) -> usize {
        *self.lengths.last().expect("non-empty")
    }
}

pub fn sample_span_length(dist: &LengthDistribution, rng: &mut Rng) -> Result<usize, MaskError> {
    Ok(SpanLengthSampler::new(dist)?.sample(rng))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskSpan {
    pub start: usize,
    pub len: usize,
}

impl MaskSpan {
    pub fn range(&self) -> Range<usize> {
        self.start..self.start + self.len
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskPlan {
    /// Sorted by start, non-overlapping.
    pub spans: Vec<MaskSpan>,
    pub budget_tokens: usize,
    pub masked_tokens: usize,
}

impl MaskPlan {
    /// Moves every span by `offset` positions.
    pub fn shifted(mut self, offset: usize) -> Self {
        for s in &mut self.spans {
            s.start += offset;
        }
        self
    }
}

/// `max(1, round_half_up(fraction * maskable_len))`.
pub fn budget_tokens(fraction: f64, maskable_len: usize) -> usize {
    // The epsilon absorbs binary representation error at exact halves.
    let raw = fraction * maskable_len as f64;
    ((raw + 0.5 + 1e-9).floor() as usize).max(1)
}

fn largest_gap(occupied: &[bool]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &o in occupied {
        run = if o { 0 } else { run + 1 };
        best = best.max(run);
    }
    best
}

/// Plans spans over positions `0..maskable_len`.
///
/// Stops as soon as the masked count reaches the budget, so the last span may
/// overshoot by less than the longest length in the distribution.
pub fn plan_masks(
    maskable_len: usize,
    sampler: &SpanLengthSampler,
    budget_fraction: f64,
    rng: &mut Rng,
) -> Result<MaskPlan, MaskError> {
    if maskable_len < sampler.min_len() {
        return Err(MaskError::NoPlacement { maskable_len });
    }
    let budget = budget_tokens(budget_fraction, maskable_len);
    let mut occupied = vec![false; maskable_len];
    let mut spans = Vec::new();
    let mut masked = 0;
    while masked < budget {
        let len = sampler.sample(rng);
        let mut placed = false;
        if len <= maskable_len {
            for _ in 0..PLACEMENT_RETRIES {
                let start = rng.random_range(0..=maskable_len - len);
                if occupied[start..start + len].iter().all(|o| !o) {
                    occupied[start..start + len].iter_mut().for_each(|o| *o = true);
                    spans.push(MaskSpan { start, len });
                    masked += len;
                    placed = true;
                    break;
                }
            }
        }
        if !placed && largest_gap(&occupied) < sampler.min_len() {
            return Err(MaskError::NoPlacement { maskable_len });
        }
    }
    spans.sort_by_key(|s| s.start);
    Ok(MaskPlan {
        spans,
        budget_tokens: budget,
        masked_tokens: masked,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpanAction {
    Masked,
    Random,
    Kept,
}

impl SpanAction {
    pub fn draw(probs: &ReplaceProbs, rng: &mut Rng) -> Self {
        let u: f64 = rng.random();
        if u < probs.mask {
            SpanAction::Masked
        } else if u < probs.mask + probs.random {
            SpanAction::Random
        } else {
            SpanAction::Kept
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSequence {
    pub input_ids: Vec<TokenId>,
    /// Original id at span positions, [`IGNORE_LABEL`] elsewhere.
    pub labels: Vec<i64>,
    pub spans: Vec<(usize, usize, SpanAction)>,
}

fn check_plan(ids: &[TokenId], plan: &MaskPlan, vocab: &Vocabulary) -> Result<(), MaskError> {
    let mut prev_end = 0;
    for s in &plan.spans {
        if s.len == 0 || s.start < prev_end || s.start + s.len > ids.len() {
            return Err(MaskError::InvalidPlan(format!("span {}+{}", s.start, s.len)));
        }
        if ids[s.range()].iter().any(|&id| vocab.is_structural(id)) {
            return Err(MaskError::InvalidPlan(format!(
                "span {}+{} covers a special token",
                s.start, s.len
            )));
        }
        prev_end = s.start + s.len;
    }
    Ok(())
}

/// Applies the given per-span actions. Random replacements are drawn
/// independently per position from the non-special vocabulary.
pub fn apply_actions(
    ids: &[TokenId],
    plan: &MaskPlan,
    actions: &[SpanAction],
    rng: &mut Rng,
    vocab: &Vocabulary,
) -> Result<MaskedSequence, MaskError> {
    check_plan(ids, plan, vocab)?;
    if actions.len() != plan.spans.len() {
        return Err(MaskError::InvalidPlan("one action per span required".into()));
    }
    let pool = vocab.ordinary_ids();
    let mut input_ids = ids.to_vec();
    let mut labels = vec![IGNORE_LABEL; ids.len()];
    let mut spans = Vec::with_capacity(plan.spans.len());
    for (span, &action) in plan.spans.iter().zip(actions) {
        for pos in span.range() {
            labels[pos] = ids[pos] as i64;
            match action {
                SpanAction::Masked => input_ids[pos] = vocab.mask_id(),
                SpanAction::Random if !pool.is_empty() => {
                    input_ids[pos] = pool[rng.random_range(0..pool.len())];
                }
                SpanAction::Random | SpanAction::Kept => {}
            }
        }
        spans.push((span.start, span.len, action));
    }
    Ok(MaskedSequence {
        input_ids,
        labels,
        spans,
    })
}

/// Draws one action per span and applies it.
pub fn apply_masking(
    ids: &[TokenId],
    plan: &MaskPlan,
    probs: &ReplaceProbs,
    rng: &mut Rng,
    vocab: &Vocabulary,
) -> Result<MaskedSequence, MaskError> {
    let actions: Vec<SpanAction> = plan.spans.iter().map(|_| SpanAction::draw(probs, rng)).collect();
    apply_actions(ids, plan, &actions, rng, vocab)
}

/// The contiguous run of non-structural positions in a packed sequence.
pub fn maskable_region(ids: &[TokenId], vocab: &Vocabulary) -> Result<Range<usize>, MaskError> {
    let first = ids.iter().position(|&id| !vocab.is_structural(id));
    let last = ids.iter().rposition(|&id| !vocab.is_structural(id));
    match (first, last) {
        (Some(a), Some(b)) => {
            if ids[a..=b].iter().any(|&id| vocab.is_structural(id)) {
                Err(MaskError::NonContiguous)
            } else {
                Ok(a..b + 1)
            }
        }
        _ => Ok(0..0),
    }
}

/// One output line of the pretraining file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedRecord {
    pub seq_id: String,
    pub dupe_index: usize,
    pub input_ids: Vec<TokenId>,
    pub labels: Vec<i64>,
    pub spans: Vec<(usize, usize, SpanAction)>,
}

/// Validated configuration plus its sampler.
#[derive(Debug, Clone)]
pub struct MaskingEngine {
    cfg: MaskingConfig,
    sampler: SpanLengthSampler,
}

impl MaskingEngine {
    pub fn new(cfg: MaskingConfig) -> Result<Self, MaskError> {
        cfg.validate()?;
        let sampler = SpanLengthSampler::new(&cfg.length_dist)?;
        Ok(Self { cfg, sampler })
    }

    pub fn config(&self) -> &MaskingConfig {
        &self.cfg
    }

    pub fn sampler(&self) -> &SpanLengthSampler {
        &self.sampler
    }

    /// Plans and applies masking for one duplicate of a sequence, seeded by
    /// `(master seed, seq_id, dupe_index)`.
    pub fn mask_once(
        &self,
        ids: &[TokenId],
        seq_id: &str,
        dupe_index: usize,
        vocab: &Vocabulary,
    ) -> Result<MaskedRecord, MaskError> {
        let region = maskable_region(ids, vocab)?;
        let mut rng = seed::rng_for(self.cfg.seed, seq_id, dupe_index as u64);
        let plan = plan_masks(region.len(), &self.sampler, self.cfg.budget_fraction, &mut rng)?
            .shifted(region.start);
        let masked = apply_masking(ids, &plan, &self.cfg.replace_probs, &mut rng, vocab)?;
        Ok(MaskedRecord {
            seq_id: seq_id.to_string(),
            dupe_index,
            input_ids: masked.input_ids,
            labels: masked.labels,
            spans: masked.spans,
        })
    }

    /// `dupe_factor` independently masked copies of one sequence.
    pub fn generate_pretraining_examples(
        &self,
        ids: &[TokenId],
        seq_id: &str,
        vocab: &Vocabulary,
    ) -> Result<Vec<MaskedRecord>, MaskError> {
        (0..self.cfg.dupe_factor)
            .map(|d| self.mask_once(ids, seq_id, d, vocab))
            .collect()
    }
}
