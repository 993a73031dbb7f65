//! Raw text cleaning and paragraph / sentence segmentation.
//!
//! All offsets are counted in Unicode scalar values, so a sentence's
//! `char_len` equals its token count under the character tokenizer.

use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SourceDomain {
    Wikipedia,
    Academic,
    Social,
    Wechat,
    News,
    #[default]
    #[serde(other)]
    Other,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    #[serde(default)]
    pub source_domain: SourceDomain,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Paragraph {
    pub doc_id: String,
    pub index: usize,
    pub text: String,
}

impl Paragraph {
    /// Stable identifier used for seeding and as the cloze record id.
    pub fn key(&self) -> String {
        format!("{}-p{}", self.doc_id, self.index)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sentence {
    pub doc_id: String,
    pub paragraph_index: usize,
    /// Char offsets into the paragraph text, end exclusive.
    pub start: usize,
    pub end: usize,
    pub text: String,
    pub char_len: usize,
}

/// Sentence delimiters: fullwidth and halfwidth comma, period, semicolon,
/// exclamation and question marks.
pub const SENTENCE_DELIMITERS: [char; 9] = ['，', ',', '。', '；', ';', '！', '!', '？', '?'];

pub fn is_sentence_delimiter(c: char) -> bool {
    SENTENCE_DELIMITERS.contains(&c)
}

struct Patterns {
    image: Regex,
    tag: Regex,
    block_break: Regex,
}

fn patterns() -> &'static Patterns {
    static P: OnceLock<Patterns> = OnceLock::new();
    P.get_or_init(|| Patterns {
        image: Regex::new(r"(?i)<img\b[^>]*>|\[图片\]|\[image\]").expect("valid regex"),
        tag: Regex::new(r"</?[A-Za-z!][^<>]*>").expect("valid regex"),
        block_break: Regex::new(r"(?i)<br\s*/?>|</(?:p|div|li|h[1-6]|tr|section|article)\s*>")
            .expect("valid regex"),
    })
}

fn clean_pass(text: &str) -> String {
    let p = patterns();
    let decoded = html_escape::decode_html_entities(text);
    let no_images = p.image.replace_all(&decoded, "");
    let no_tags = p.tag.replace_all(&no_images, "");
    no_tags.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Removes HTML markup and image markers, decodes entities, collapses
/// whitespace runs to one space and trims.
///
/// Passes repeat until nothing changes, so decoding that exposes new markup
/// (`&lt;p&gt;`) is cleaned too and the function is idempotent.
pub fn clean_text(raw: &str) -> String {
    let mut current = clean_pass(raw);
    loop {
        let next = clean_pass(&current);
        if next == current {
            return current;
        }
        current = next;
    }
}

/// Splits text on newline boundaries, cleaning each piece and dropping the
/// empty ones. Block-level closing tags and `<br>` count as line breaks.
pub fn split_paragraphs(doc: &RawDocument) -> Vec<Paragraph> {
    let expanded = patterns().block_break.replace_all(&doc.text, "\n");
    expanded
        .split('\n')
        .map(clean_text)
        .filter(|t| !t.is_empty())
        .enumerate()
        .map(|(index, text)| Paragraph {
            doc_id: doc.id.clone(),
            index,
            text,
        })
        .collect()
}

/// Splits a paragraph at sentence delimiters. Delimiters and surrounding
/// whitespace are excluded from each sentence; empty fragments are dropped.
pub fn split_sentences(p: &Paragraph) -> Vec<Sentence> {
    let chars: Vec<char> = p.text.chars().collect();
    let mut out = Vec::new();
    let mut frag_start = 0;
    for i in 0..=chars.len() {
        if i < chars.len() && !is_sentence_delimiter(chars[i]) {
            continue;
        }
        let mut start = frag_start;
        let mut end = i;
        while start < end && chars[start].is_whitespace() {
            start += 1;
        }
        while end > start && chars[end - 1].is_whitespace() {
            end -= 1;
        }
        if start < end {
            out.push(Sentence {
                doc_id: p.doc_id.clone(),
                paragraph_index: p.index,
                start,
                end,
                text: chars[start..end].iter().collect(),
                char_len: end - start,
            });
        }
        frag_start = i + 1;
    }
    out
}

/// Char-offset slice of `s`.
pub fn char_slice(s: &str, start: usize, end: usize) -> &str {
    let mut indices = s.char_indices().map(|(b, _)| b).chain(std::iter::once(s.len()));
    let b_start = indices.nth(start).unwrap_or(s.len());
    let b_end = if end > start {
        indices.nth(end - start - 1).unwrap_or(s.len())
    } else {
        b_start
    };
    &s[b_start..b_end]
}
