//! Model-ready input sequences: `[CLS] first [SEP] second [SEP]` pairs with
//! context windowing, and single-segment packing for pretraining.

use std::ops::Range;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::corpus::char_slice;
use crate::dataset::{ClozeExample, SpanExample};
use crate::error::AssemblyError;
use crate::tokenizer::{encode, tokenize, tokenize_with_blanks, TokenId, Vocabulary};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowingPolicy {
    pub max_len: usize,
    /// Tokens shared by consecutive context windows.
    pub stride: usize,
}

impl Default for WindowingPolicy {
    fn default() -> Self {
        Self {
            max_len: 512,
            stride: 0,
        }
    }
}

impl WindowingPolicy {
    pub fn new(max_len: usize, stride: usize) -> Self {
        Self { max_len, stride }
    }

    /// Context tokens per window after a first segment of `first_len`.
    pub fn capacity(&self, first_len: usize) -> usize {
        self.max_len.saturating_sub(first_len + 3)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputSequence {
    pub origin: String,
    pub window_index: usize,
    pub ids: Vec<TokenId>,
    pub segment_ids: Vec<u8>,
    pub attention_mask: Vec<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub answer_in_window: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub option: Option<String>,
}

impl InputSequence {
    /// Number of non-padding positions.
    pub fn content_len(&self) -> usize {
        self.attention_mask.iter().filter(|&&m| m == 1).count()
    }
}

/// Window ranges over `n` context tokens. Windows start every
/// `capacity - stride` tokens until the end is covered; an empty context
/// still gets one (empty) window.
pub fn context_windows(n: usize, capacity: usize, stride: usize) -> Vec<Range<usize>> {
    let step = capacity - stride;
    let mut out = Vec::new();
    let mut start = 0;
    loop {
        let end = (start + capacity).min(n);
        out.push(start..end);
        if end >= n {
            return out;
        }
        start += step;
    }
}

fn build(
    first: &[TokenId],
    second: Option<&[TokenId]>,
    max_len: usize,
    vocab: &Vocabulary,
    origin: &str,
    window_index: usize,
) -> InputSequence {
    let mut ids = Vec::with_capacity(max_len);
    let mut segment_ids = Vec::with_capacity(max_len);
    ids.push(vocab.cls_id());
    ids.extend_from_slice(first);
    ids.push(vocab.sep_id());
    segment_ids.resize(ids.len(), 0);
    if let Some(second) = second {
        ids.extend_from_slice(second);
        ids.push(vocab.sep_id());
        segment_ids.resize(ids.len(), 1);
    }
    let content = ids.len();
    ids.resize(max_len, vocab.pad_id());
    segment_ids.resize(max_len, 0);
    let mut attention_mask = vec![1u8; content];
    attention_mask.resize(max_len, 0);
    InputSequence {
        origin: origin.to_string(),
        window_index,
        ids,
        segment_ids,
        attention_mask,
        answer_in_window: None,
        option: None,
    }
}

fn paired(
    first: &[TokenId],
    second: &[TokenId],
    policy: &WindowingPolicy,
    vocab: &Vocabulary,
    origin: &str,
    overflow: fn(usize, usize) -> AssemblyError,
) -> Result<Vec<InputSequence>, AssemblyError> {
    if first.len() + 3 >= policy.max_len {
        return Err(overflow(first.len(), policy.max_len));
    }
    let cap = policy.capacity(first.len());
    if policy.stride >= cap {
        return Err(AssemblyError::InvalidPolicy(format!(
            "stride {} must be below the context capacity {}",
            policy.stride, cap
        )));
    }
    Ok(context_windows(second.len(), cap, policy.stride)
        .into_iter()
        .enumerate()
        .map(|(i, w)| build(first, Some(&second[w]), policy.max_len, vocab, origin, i))
        .collect())
}

/// `[CLS] question [SEP] chunk [SEP] [PAD]...` for every context window.
/// The question is repeated in each window.
pub fn assemble_span_input(
    question: &[TokenId],
    context: &[TokenId],
    policy: &WindowingPolicy,
    vocab: &Vocabulary,
    origin: &str,
) -> Result<Vec<InputSequence>, AssemblyError> {
    paired(question, context, policy, vocab, origin, |len, max_len| {
        AssemblyError::QuestionOverflow { len, max_len }
    })
}

/// `[CLS] option [SEP] chunk [SEP] [PAD]...` for every passage window.
pub fn assemble_cloze_input(
    option: &[TokenId],
    passage: &[TokenId],
    policy: &WindowingPolicy,
    vocab: &Vocabulary,
    origin: &str,
) -> Result<Vec<InputSequence>, AssemblyError> {
    if !passage.iter().any(|&id| vocab.blank_number(id).is_some()) {
        return Err(AssemblyError::NoBlanks);
    }
    paired(option, passage, policy, vocab, origin, |len, max_len| {
        AssemblyError::OptionOverflow { len, max_len }
    })
}

/// Token range of the gold answer within the tokenized context, if the
/// answer boundaries fall on token boundaries.
pub fn answer_token_range(ex: &SpanExample, vocab: &Vocabulary) -> Option<Range<usize>> {
    let tokens = tokenize(&ex.context, vocab);
    let start = char_slice(&ex.context, 0, ex.answer.answer_start).nfc().count();
    let end = start + ex.answer.text.nfc().count();
    let first = tokens.iter().position(|t| t.char_start == start)?;
    let last = tokens.iter().rposition(|t| t.char_end == end)?;
    (first <= last).then_some(first..last + 1)
}

/// Tokenizes and assembles one span example, flagging which windows contain
/// the whole answer.
pub fn assemble_span_example(
    ex: &SpanExample,
    policy: &WindowingPolicy,
    vocab: &Vocabulary,
) -> Result<Vec<InputSequence>, AssemblyError> {
    let question = encode(&tokenize(&ex.question, vocab));
    let context = encode(&tokenize(&ex.context, vocab));
    let mut seqs = assemble_span_input(&question, &context, policy, vocab, &ex.id)?;
    let answer = answer_token_range(ex, vocab);
    let windows = context_windows(context.len(), policy.capacity(question.len()), policy.stride);
    for (seq, w) in seqs.iter_mut().zip(windows) {
        seq.answer_in_window = Some(
            answer
                .as_ref()
                .is_some_and(|a| a.start >= w.start && a.end <= w.end),
        );
    }
    Ok(seqs)
}

/// The nine option-first input sets of a cloze example, in letter order.
pub fn assemble_cloze_example(
    ex: &ClozeExample,
    policy: &WindowingPolicy,
    vocab: &Vocabulary,
) -> Result<Vec<InputSequence>, AssemblyError> {
    let passage = encode(&tokenize_with_blanks(&ex.passage, vocab)?);
    let mut out = Vec::new();
    for (letter, text) in &ex.options {
        let option = encode(&tokenize(text, vocab));
        for mut seq in assemble_cloze_input(&option, &passage, policy, vocab, &ex.id)? {
            seq.option = Some(letter.clone());
            out.push(seq);
        }
    }
    Ok(out)
}

/// Single-segment `[CLS] chunk [SEP]` sequences of at most `max_len`; only
/// the last one is padded.
pub fn pack_pretraining_sequences(
    tokens: &[TokenId],
    max_len: usize,
    vocab: &Vocabulary,
    origin: &str,
) -> Result<Vec<InputSequence>, AssemblyError> {
    if max_len < 3 {
        return Err(AssemblyError::InvalidPolicy(format!(
            "max_len {max_len} leaves no room for content"
        )));
    }
    Ok(tokens
        .chunks(max_len - 2)
        .enumerate()
        .map(|(i, chunk)| build(chunk, None, max_len, vocab, origin, i))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::SpanAnswer;
    use crate::tokenizer::{blank_marker, REQUIRED_SPECIALS};

    fn vocab() -> Vocabulary {
        Vocabulary::from_tokens(
            REQUIRED_SPECIALS
                .iter()
                .map(|s| s.to_string())
                .chain((1..=9).map(blank_marker))
                .chain("流行病学是研究什么的领域一二三四五".chars().map(String::from)),
        )
        .unwrap()
    }

    fn count(seq: &InputSequence, id: TokenId) -> usize {
        seq.ids.iter().filter(|&&x| x == id).count()
    }

    #[test]
    fn three_padding_tokens() {
        let v = vocab();
        let seqs = assemble_span_input(&[20, 21], &[22, 23], &WindowingPolicy::new(10, 0), &v, "q").unwrap();
        assert_eq!(seqs.len(), 1);
        let s = &seqs[0];
        assert_eq!(s.content_len(), 7);
        assert_eq!(count(s, v.pad_id()), 3);
        assert_eq!(s.segment_ids, [0, 0, 0, 0, 1, 1, 1, 0, 0, 0]);
        assert_eq!(s.attention_mask, [1, 1, 1, 1, 1, 1, 1, 0, 0, 0]);
        assert_eq!(s.ids[0], v.cls_id());
        assert_eq!(count(s, v.sep_id()), 2);
    }

    #[test]
    fn forty_tokens_four_windows() {
        let v = vocab();
        let ctx: Vec<TokenId> = (0..40).map(|i| 20 + (i % 10)).collect();
        let seqs = assemble_span_input(&[20, 21], &ctx, &WindowingPolicy::new(15, 0), &v, "q").unwrap();
        assert_eq!(seqs.len(), 4);
        let rebuilt: Vec<TokenId> = seqs.iter().flat_map(|s| s.ids[4..14].to_vec()).collect();
        assert_eq!(rebuilt, ctx);
        assert!(seqs.iter().all(|s| s.ids[1..3] == [20, 21]));
    }

    #[test]
    fn overflow_and_stride() {
        let v = vocab();
        let q = vec![20; 9];
        assert!(matches!(
            assemble_span_input(&q, &[21], &WindowingPolicy::new(10, 0), &v, "q"),
            Err(AssemblyError::QuestionOverflow { len: 9, max_len: 10 })
        ));
        assert!(matches!(
            assemble_span_input(&[20], &[21], &WindowingPolicy::new(10, 6), &v, "q"),
            Err(AssemblyError::InvalidPolicy(_))
        ));
        let w = context_windows(25, 10, 3);
        assert_eq!(w, [0..10, 7..17, 14..24, 21..25]);
        assert_eq!(context_windows(0, 10, 0), vec![Range { start: 0, end: 0 }]);
    }

    #[test]
    fn cloze_one_padding_token_and_blanks() {
        let v = vocab();
        let b1 = v.blank_id(1).unwrap();
        let seqs = assemble_cloze_input(&[20, 21, 22], &[23, b1, 24], &WindowingPolicy::new(10, 0), &v, "c").unwrap();
        assert_eq!(count(&seqs[0], v.pad_id()), 1);
        assert_eq!(
            assemble_cloze_input(&[20], &[23, 24], &WindowingPolicy::new(10, 0), &v, "c").unwrap_err().to_string(),
            AssemblyError::NoBlanks.to_string()
        );
        assert!(matches!(
            assemble_cloze_input(&[20; 7], &[b1], &WindowingPolicy::new(10, 0), &v, "c"),
            Err(AssemblyError::OptionOverflow { .. })
        ));
    }

    #[test]
    fn cloze_example_gives_nine_sets() {
        let v = vocab();
        let letters = ["A", "B", "C", "D", "E", "F", "G", "H", "I"];
        let ex = ClozeExample {
            id: "c1".into(),
            passage: (1..=9).map(|i| format!("一{}", blank_marker(i))).collect(),
            options: letters.iter().map(|l| (l.to_string(), "流行".to_string())).collect(),
            answers: letters.iter().map(|l| l.to_string()).collect(),
        };
        let seqs = assemble_cloze_example(&ex, &WindowingPolicy::new(64, 0), &v).unwrap();
        assert_eq!(seqs.len(), 9);
        assert_eq!(seqs[8].option.as_deref(), Some("I"));
        assert!(seqs.iter().all(|s| (1..=9).all(|i| s.ids.contains(&v.blank_id(i).unwrap()))));
    }

    #[test]
    fn packing() {
        let v = vocab();
        let toks: Vec<TokenId> = (0..1000).map(|i| 20 + (i % 10)).collect();
        let seqs = pack_pretraining_sequences(&toks, 512, &v, "p").unwrap();
        assert_eq!(seqs.len(), 2);
        assert_eq!(seqs[0].content_len(), 512);
        assert_eq!(seqs[1].content_len(), 492);
        let rebuilt: Vec<TokenId> = seqs
            .iter()
            .flat_map(|s| s.ids.iter().copied().filter(|&id| !v.is_structural(id)).collect::<Vec<_>>())
            .collect();
        assert_eq!(rebuilt, toks);
        let short = pack_pretraining_sequences(&toks[..5], 512, &v, "p").unwrap();
        assert_eq!(count(&short[0], v.pad_id()), 505);
        assert!(short[0].segment_ids.iter().all(|&s| s == 0));
    }

    #[test]
    fn answer_flag_per_window() {
        let v = vocab();
        let ex = SpanExample {
            id: "s".into(),
            title: None,
            context: "一二三四五流行病学是研究什么的领域".into(),
            question: "什么".into(),
            answer: SpanAnswer {
                text: "流行病学".into(),
                answer_start: 5,
            },
        };
        assert_eq!(answer_token_range(&ex, &v), Some(5..9));
        let seqs = assemble_span_example(&ex, &WindowingPolicy::new(12, 0), &v).unwrap();
        // capacity 7: windows 0..7, 7..14, 14..17
        let flags: Vec<_> = seqs.iter().map(|s| s.answer_in_window).collect();
        assert_eq!(flags, [Some(false), Some(false), Some(false)]);
        let seqs = assemble_span_example(&ex, &WindowingPolicy::new(12, 3), &v).unwrap();
        assert!(seqs.iter().any(|s| s.answer_in_window == Some(true)));
    }

    #[test]
    fn json_field_order() {
        let v = vocab();
        let s = &pack_pretraining_sequences(&[20], 4, &v, "d-p0").unwrap()[0];
        assert_eq!(
            serde_json::to_string(s).unwrap(),
            r#"{"origin":"d-p0","window_index":0,"ids":[2,20,3,0],"segment_ids":[0,0,0,0],"attention_mask":[1,1,1,0]}"#
        );
    }
}
