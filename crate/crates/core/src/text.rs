//! String normalization and content-word tokenization shared by every
//! matching channel.
//!
//! Punctuation is any character that is neither alphanumeric nor whitespace.
//! Apostrophes inside a word are kept, so `don't` stays a single token.

use std::collections::HashSet;
use std::sync::OnceLock;

const DEFAULT_STOPWORDS: &str = include_str!("../data/stopwords.txt");

/// Lowercases, collapses whitespace runs and strips leading/trailing
/// punctuation. May return an empty string.
pub fn normalize(raw: &str) -> String {
    let collapsed = raw
        .split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ");
    collapsed
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_string()
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// A fixed set of lowercase function words.
#[derive(Debug, Clone)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    /// Parses one word per line; blank lines are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim().to_lowercase())
            .filter(|l| !l.is_empty())
            .collect();
        Self { words }
    }

    /// The English list shipped with the crate.
    pub fn english() -> &'static Stopwords {
        static LIST: OnceLock<Stopwords> = OnceLock::new();
        LIST.get_or_init(|| Stopwords::parse(DEFAULT_STOPWORDS))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

/// Ordered content tokens of a string: lowercase, no stopwords, no
/// punctuation-only tokens.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TokenSequence {
    tokens: Vec<String>,
}

impl TokenSequence {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn into_tokens(self) -> Vec<String> {
        self.tokens
    }
}

/// Splits on whitespace and punctuation (apostrophes inside words excepted)
/// without removing stopwords.
pub fn split_words(raw: &str) -> Vec<String> {
    normalize(raw)
        .split(|c: char| !(c.is_alphanumeric() || is_apostrophe(c)))
        .map(|t| t.trim_matches(is_apostrophe))
        .filter(|t| !t.is_empty())
        .map(|t| t.replace('\u{2019}', "'"))
        .collect()
}

pub fn tokenize_content(raw: &str) -> TokenSequence {
    tokenize_content_with(raw, Stopwords::english())
}

pub fn tokenize_content_with(raw: &str, stopwords: &Stopwords) -> TokenSequence {
    TokenSequence {
        tokens: split_words(raw)
            .into_iter()
            .filter(|t| !stopwords.contains(t))
            .collect(),
    }
}
