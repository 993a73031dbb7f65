//! Character-level Chinese WordPiece tokenization.
//!
//! CJK ideographs are split into one token per character. Everything else is
//! split on whitespace and punctuation and then segmented greedily with the
//! longest-match WordPiece rule (continuation pieces carry a `##` prefix).
//! Text is NFC-normalized first; there is no lowercasing.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};

use unicode_normalization::UnicodeNormalization;

use crate::error::TokenizerError;

pub const CLS: &str = "[CLS]";
pub const SEP: &str = "[SEP]";
pub const PAD: &str = "[PAD]";
pub const MASK: &str = "[MASK]";
pub const UNK: &str = "[UNK]";

/// Special tokens every vocabulary must contain.
pub const REQUIRED_SPECIALS: [&str; 5] = [PAD, UNK, CLS, SEP, MASK];

/// Number of reserved blank markers (`[BLANK1]`..`[BLANK9]`).
pub const BLANK_COUNT: usize = 9;

const CONTINUATION_PREFIX: &str = "##";
const MAX_CHARS_PER_WORD: usize = 100;

/// Text of the `i`-th blank marker, 1-based.
pub fn blank_marker(i: usize) -> String {
    format!("[BLANK{i}]")
}

pub type TokenId = u32;

/// An immutable token inventory. Ids are dense zero-based line positions.
#[derive(Debug, Clone)]
pub struct Vocabulary {
    entries: Vec<String>,
    index: HashMap<String, TokenId>,
    cls: TokenId,
    sep: TokenId,
    pad: TokenId,
    mask: TokenId,
    unk: TokenId,
    blanks: [Option<TokenId>; BLANK_COUNT],
    /// Ids eligible as random replacements: everything except specials and blanks.
    ordinary: Vec<TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from tokens in id order.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self, TokenizerError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for (line, tok) in tokens.into_iter().enumerate() {
            let tok: String = tok.into();
            if index.contains_key(&tok) {
                return Err(TokenizerError::DuplicateToken { line: line + 1, token: tok });
            }
            index.insert(tok.clone(), line as TokenId);
            entries.push(tok);
        }
        let find = |name: &str| {
            index
                .get(name)
                .copied()
                .ok_or_else(|| TokenizerError::MissingSpecial(name.to_string()))
        };
        let pad = find(PAD)?;
        let unk = find(UNK)?;
        let cls = find(CLS)?;
        let sep = find(SEP)?;
        let mask = find(MASK)?;
        let mut blanks = [None; BLANK_COUNT];
        for (i, slot) in blanks.iter_mut().enumerate() {
            *slot = index.get(&blank_marker(i + 1)).copied();
        }
        let mut vocab = Self {
            entries,
            index,
            cls,
            sep,
            pad,
            mask,
            unk,
            blanks,
            ordinary: Vec::new(),
        };
        vocab.ordinary = (0..vocab.len() as TokenId)
            .filter(|&id| !vocab.is_reserved(id))
            .collect();
        Ok(vocab)
    }

    /// Reads a vocabulary file: UTF-8, LF-separated, one token per line.
    ///
    /// A trailing newline does not produce an extra entry; a `\r` before the
    /// newline is stripped.
    pub fn load<R: Read>(source: R) -> Result<Self, TokenizerError> {
        let mut tokens = Vec::new();
        for (n, line) in BufReader::new(source).lines().enumerate() {
            let line = line.map_err(|e| TokenizerError::Read { line: n + 1, source: e })?;
            let line = line.strip_suffix('\r').unwrap_or(&line).to_string();
            tokens.push(line);
        }
        Self::from_tokens(tokens)
    }

    pub fn load_path(path: &std::path::Path) -> Result<Self, crate::Error> {
        let file = std::fs::File::open(path).map_err(|e| crate::Error::io(path, e))?;
        Ok(Self::load(file)?)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.entries.get(id as usize).map(String::as_str)
    }

    pub fn entries(&self) -> &[String] {
        &self.entries
    }

    pub fn cls_id(&self) -> TokenId {
        self.cls
    }
    pub fn sep_id(&self) -> TokenId {
        self.sep
    }
    pub fn pad_id(&self) -> TokenId {
        self.pad
    }
    pub fn mask_id(&self) -> TokenId {
        self.mask
    }
    pub fn unk_id(&self) -> TokenId {
        self.unk
    }

    /// Id of `[BLANKi]` (1-based), if the vocabulary reserves it.
    pub fn blank_id(&self, i: usize) -> Option<TokenId> {
        i.checked_sub(1).and_then(|k| self.blanks.get(k).copied().flatten())
    }

    /// 1-based blank number if `id` is a blank marker.
    pub fn blank_number(&self, id: TokenId) -> Option<usize> {
        self.blanks.iter().position(|b| *b == Some(id)).map(|k| k + 1)
    }

    /// Structural tokens injected by assembly or masking, never by tokenization:
    /// `[CLS]`, `[SEP]`, `[PAD]`, `[MASK]` and the blank markers.
    pub fn is_structural(&self, id: TokenId) -> bool {
        id == self.cls
            || id == self.sep
            || id == self.pad
            || id == self.mask
            || self.blank_number(id).is_some()
    }

    /// Structural tokens plus `[UNK]`.
    pub fn is_reserved(&self, id: TokenId) -> bool {
        id == self.unk || self.is_structural(id)
    }

    /// Ids usable as random replacement tokens (no specials, no blanks).
    pub fn ordinary_ids(&self) -> &[TokenId] {
        &self.ordinary
    }
}

/// One tokenizer output unit.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token {
    pub text: String,
    pub id: TokenId,
    /// True only for structural tokens (`[CLS]`, `[SEP]`, `[PAD]`, `[MASK]`,
    /// blanks). OOV material mapped to `[UNK]` is not structural.
    pub is_special: bool,
    pub is_cjk: bool,
    /// Character offsets into the NFC-normalized input.
    pub char_start: usize,
    pub char_end: usize,
}

/// CJK Unified Ideographs and Extension A.
pub fn is_cjk(c: char) -> bool {
    matches!(c as u32, 0x4E00..=0x9FFF | 0x3400..=0x4DBF)
}

pub fn is_punctuation(c: char) -> bool {
    if c.is_ascii_punctuation() {
        return true;
    }
    matches!(
        c as u32,
        0x00A1..=0x00BF
            | 0x2010..=0x2027
            | 0x2030..=0x205E
            | 0x3000..=0x303F
            | 0xFE10..=0xFE1F
            | 0xFE30..=0xFE4F
            | 0xFF01..=0xFF0F
            | 0xFF1A..=0xFF20
            | 0xFF3B..=0xFF40
            | 0xFF5B..=0xFF65
    ) && !c.is_whitespace()
}

/// A pre-WordPiece unit: a CJK character, a punctuation mark, or a maximal
/// run of other non-whitespace characters. Offsets are in chars.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Word {
    pub text: String,
    pub char_start: usize,
    pub char_end: usize,
    pub is_cjk: bool,
}

/// Splits already-normalized text into words.
pub fn split_words(text: &str) -> Vec<Word> {
    let mut words = Vec::new();
    let mut current = String::new();
    let mut current_start = 0;
    let mut pos = 0;
    let flush = |words: &mut Vec<Word>, current: &mut String, start: usize, end: usize| {
        if !current.is_empty() {
            words.push(Word {
                text: std::mem::take(current),
                char_start: start,
                char_end: end,
                is_cjk: false,
            });
        }
    };
    for c in text.chars() {
        if c.is_whitespace() || c.is_control() {
            flush(&mut words, &mut current, current_start, pos);
        } else if is_cjk(c) || is_punctuation(c) {
            flush(&mut words, &mut current, current_start, pos);
            words.push(Word {
                text: c.to_string(),
                char_start: pos,
                char_end: pos + 1,
                is_cjk: is_cjk(c),
            });
        } else {
            if current.is_empty() {
                current_start = pos;
            }
            current.push(c);
        }
        pos += 1;
    }
    flush(&mut words, &mut current, current_start, pos);
    words
}

/// Vocabulary-free split used for scoring: NFC, then [`split_words`].
pub fn basic_tokens(text: &str) -> Vec<String> {
    let normalized: String = text.nfc().collect();
    split_words(&normalized).into_iter().map(|w| w.text).collect()
}

/// Tokenizes `text` against `vocab`. Total: unknown material becomes `[UNK]`.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> Vec<Token> {
    let normalized: String = text.nfc().collect();
    let mut out = Vec::new();
    for word in split_words(&normalized) {
        wordpiece(&word, vocab, &mut out);
    }
    out
}

fn unk_token(vocab: &Vocabulary, start: usize, end: usize) -> Token {
    Token {
        text: UNK.to_string(),
        id: vocab.unk_id(),
        is_special: false,
        is_cjk: false,
        char_start: start,
        char_end: end,
    }
}

fn wordpiece(word: &Word, vocab: &Vocabulary, out: &mut Vec<Token>) {
    let chars: Vec<char> = word.text.chars().collect();
    if chars.len() > MAX_CHARS_PER_WORD {
        out.push(unk_token(vocab, word.char_start, word.char_end));
        return;
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut found = None;
        while start < end {
            let mut candidate: String = chars[start..end].iter().collect();
            if start > 0 {
                candidate.insert_str(0, CONTINUATION_PREFIX);
            }
            match vocab.id(&candidate) {
                // A piece that happens to spell a structural token is never
                // taken from corpus text.
                Some(id) if !vocab.is_reserved(id) => {
                    found = Some((candidate, id));
                    break;
                }
                _ => end -= 1,
            }
        }
        match found {
            Some((text, id)) => {
                pieces.push(Token {
                    text,
                    id,
                    is_special: false,
                    is_cjk: word.is_cjk,
                    char_start: word.char_start + start,
                    char_end: word.char_start + end,
                });
                start = end;
            }
            None => {
                out.push(unk_token(vocab, word.char_start, word.char_end));
                return;
            }
        }
    }
    out.extend(pieces);
}

/// Tokenizes text that may contain `[BLANKi]` markers, emitting each marker
/// as its reserved vocabulary token.
pub fn tokenize_with_blanks(text: &str, vocab: &Vocabulary) -> Result<Vec<Token>, TokenizerError> {
    let re = blank_regex();
    let mut out = Vec::new();
    let mut last = 0;
    let mut char_base = 0;
    for m in re.find_iter(text) {
        let before = &text[last..m.start()];
        push_shifted(&mut out, tokenize(before, vocab), char_base);
        char_base += before.chars().count();
        let n: usize = m.as_str()[6..m.as_str().len() - 1].parse().unwrap_or(0);
        let id = vocab
            .blank_id(n)
            .ok_or_else(|| TokenizerError::MissingSpecial(m.as_str().to_string()))?;
        out.push(Token {
            text: m.as_str().to_string(),
            id,
            is_special: true,
            is_cjk: false,
            char_start: char_base,
            char_end: char_base + m.as_str().chars().count(),
        });
        char_base += m.as_str().chars().count();
        last = m.end();
    }
    push_shifted(&mut out, tokenize(&text[last..], vocab), char_base);
    Ok(out)
}

fn push_shifted(out: &mut Vec<Token>, tokens: Vec<Token>, shift: usize) {
    out.extend(tokens.into_iter().map(|mut t| {
        t.char_start += shift;
        t.char_end += shift;
        t
    }));
}

pub(crate) fn blank_regex() -> &'static regex::Regex {
    static RE: std::sync::OnceLock<regex::Regex> = std::sync::OnceLock::new();
    RE.get_or_init(|| regex::Regex::new(r"\[BLANK[1-9]\]").expect("valid regex"))
}

pub fn encode(tokens: &[Token]) -> Vec<TokenId> {
    tokens.iter().map(|t| t.id).collect()
}

/// Converts ids back to text. CJK tokens join without separators, `##`
/// pieces attach to their predecessor, other adjacent words get one space.
pub fn decode(ids: &[TokenId], vocab: &Vocabulary) -> Result<String, TokenizerError> {
    let mut out = String::new();
    let mut prev_spaced = false;
    for &id in ids {
        let tok = vocab.token(id).ok_or(TokenizerError::UnknownId(id))?;
        if let Some(rest) = tok.strip_prefix(CONTINUATION_PREFIX).filter(|r| !r.is_empty()) {
            out.push_str(rest);
            continue;
        }
        let spaced = !tok.chars().all(|c| is_cjk(c) || is_punctuation(c));
        if spaced && prev_spaced {
            out.push(' ');
        }
        out.push_str(tok);
        prev_spaced = spaced;
    }
    Ok(out)
}
