//! Seeded Chinese-like fixtures: a character vocabulary, raw documents and
//! span candidates. Used by the examples, tests and benchmarks.

use rand::seq::IndexedRandom;
use rand::Rng as _;

use crate::corpus::{RawDocument, SourceDomain};
use crate::dataset::{SpanAnswer, SpanExample};
use crate::seed::{rng_for, Rng};
use crate::tokenizer::{blank_marker, TokenId, Vocabulary, BLANK_COUNT, REQUIRED_SPECIALS};

/// Characters the generated text is drawn from.
pub const CHARSET: &str = "的一是在不了有和人这中大为上个国我以要他时来用们生到作地于出就分对成会可主发年动同工也能下过子说产种面而方后多定行学法所民得经十三之进着等部度家电力里如水化高自二理起小物现实加量都两体制机当使点从业本去把性好应开它合还因由其些然前外天政四日那社义事平形相全表间样与关各重新线内数正心反你明看原又么利比或但质气第向道命此变条只没结解问意建月公无系军很情者最立代想已通并提直题党程展五果料象员革位入常文总次品式活设及管特件长求老头基资边流路级少图山统接知较将组见计别她手角期根论运农指几九区强放决西被干做必战先回则任取据处理府研质";

const DOMAINS: [SourceDomain; 5] = [
    SourceDomain::Wikipedia,
    SourceDomain::Academic,
    SourceDomain::Social,
    SourceDomain::Wechat,
    SourceDomain::News,
];

fn charset() -> Vec<char> {
    let mut chars: Vec<char> = CHARSET.chars().collect();
    chars.sort_unstable();
    chars.dedup();
    chars
}

/// Vocabulary lines: specials, blank markers, the character set, common
/// punctuation and ASCII alphanumerics.
pub fn vocab_lines() -> Vec<String> {
    let mut lines: Vec<String> = REQUIRED_SPECIALS.iter().map(|s| s.to_string()).collect();
    lines.extend((1..=BLANK_COUNT).map(blank_marker));
    lines.extend(charset().into_iter().map(String::from));
    lines.extend("，。；！？、,.;!?".chars().map(String::from));
    lines.extend(('0'..='9').chain('a'..='z').map(String::from));
    lines
}

pub fn vocabulary() -> Vocabulary {
    Vocabulary::from_tokens(vocab_lines()).expect("fixture vocabulary is well formed")
}

/// A run of `len` characters from the fixture character set.
pub fn sentence(rng: &mut Rng, len: usize) -> String {
    let chars = charset();
    (0..len).map(|_| *chars.choose(rng).expect("non-empty charset")).collect()
}

/// Shape of generated documents.
#[derive(Debug, Clone, Copy)]
pub struct CorpusShape {
    pub documents: usize,
    pub paragraphs_per_doc: usize,
    pub sentences_per_paragraph: usize,
    /// Inclusive sentence length range in characters.
    pub sentence_len: (usize, usize),
    /// Sprinkle HTML tags, entities and image markers into the raw text.
    pub noisy: bool,
}

impl Default for CorpusShape {
    fn default() -> Self {
        Self {
            documents: 20,
            paragraphs_per_doc: 4,
            sentences_per_paragraph: 40,
            sentence_len: (5, 30),
            noisy: true,
        }
    }
}

const DELIMS: [&str; 5] = ["，", "。", "；", "！", "？"];

/// Raw documents with newline-separated paragraphs.
pub fn documents(seed: u64, shape: CorpusShape) -> Vec<RawDocument> {
    (0..shape.documents)
        .map(|d| {
            let mut rng = rng_for(seed, "synthetic-doc", d as u64);
            let mut paragraphs = Vec::with_capacity(shape.paragraphs_per_doc);
            for _ in 0..shape.paragraphs_per_doc {
                let mut p = String::new();
                for s in 0..shape.sentences_per_paragraph {
                    let len = rng.random_range(shape.sentence_len.0..=shape.sentence_len.1);
                    p.push_str(&sentence(&mut rng, len));
                    let last = s + 1 == shape.sentences_per_paragraph;
                    p.push_str(if last { "。" } else { DELIMS.choose(&mut rng).expect("non-empty") });
                    if shape.noisy && rng.random_bool(0.05) {
                        p.push_str(["[图片]", "<b></b>", "&nbsp;", "  "].choose(&mut rng).expect("non-empty"));
                    }
                }
                if shape.noisy && rng.random_bool(0.3) {
                    p = format!("<p>{p}</p>");
                }
                paragraphs.push(p);
            }
            RawDocument {
                id: format!("doc{d:05}"),
                source_domain: DOMAINS[d % DOMAINS.len()],
                text: paragraphs.join("\n\n"),
            }
        })
        .collect()
}

/// Span candidates with answer lengths uniform in `answer_len` (inclusive),
/// each embedded at a random position of a fresh context.
pub fn span_candidates(seed: u64, n: usize, answer_len: (usize, usize)) -> Vec<SpanExample> {
    (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, "synthetic-span", i as u64);
            let before = rng.random_range(10..120);
            let after = rng.random_range(10..120);
            let len = rng.random_range(answer_len.0..=answer_len.1);
            let answer = sentence(&mut rng, len);
            let context = format!("{}{}{}", sentence(&mut rng, before), answer, sentence(&mut rng, after));
            SpanExample {
                id: format!("q{i:06}"),
                title: Some(format!("article{}", i / 5)),
                context,
                question: format!("{}？", sentence(&mut rng, 8)),
                answer: SpanAnswer {
                    text: answer,
                    answer_start: before,
                },
            }
        })
        .collect()
}

/// `[CLS] body [SEP]` sequences of exactly `len` ids over ordinary tokens.
pub fn packed_sequences(seed: u64, n: usize, len: usize, vocab: &Vocabulary) -> Vec<Vec<TokenId>> {
    let pool = vocab.ordinary_ids();
    (0..n)
        .map(|i| {
            let mut rng = rng_for(seed, "synthetic-seq", i as u64);
            let mut ids = Vec::with_capacity(len);
            ids.push(vocab.cls_id());
            ids.extend((0..len - 2).map(|_| *pool.choose(&mut rng).expect("non-empty vocab")));
            ids.push(vocab.sep_id());
            ids
        })
        .collect()
}
