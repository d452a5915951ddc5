//! Tweet tokenization and token filtering.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

const BUNDLED_STOPWORDS: &str = include_str!("../../data/stopwords_en.txt");

/// Minimum token length in characters.
pub const MIN_TOKEN_CHARS: usize = 3;

/// A lowercase stopword set.
#[derive(Debug, Clone, Default)]
pub struct Stopwords {
    words: HashSet<String>,
}

impl Stopwords {
    /// The bundled English list.
    pub fn english() -> Self {
        Self::parse(BUNDLED_STOPWORDS)
    }

    pub fn empty() -> Self {
        Self::default()
    }

    /// One word per line; blank lines and `#` comments are ignored.
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(str::to_lowercase)
            .collect();
        Stopwords { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
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

impl<S: Into<String>> FromIterator<S> for Stopwords {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        Stopwords {
            words: iter.into_iter().map(|w| w.into().to_lowercase()).collect(),
        }
    }
}

fn is_punct(c: char) -> bool {
    c.is_ascii_punctuation() || (!c.is_alphanumeric() && !c.is_whitespace() && !c.is_control())
}

/// Lowercases a raw whitespace-delimited token and strips punctuation from its edges.
///
/// A leading `#` or `@` is kept so that hashtags and mentions can still be recognized.
pub fn clean_token(raw: &str) -> String {
    let lower = raw.to_lowercase();
    lower
        .trim_start_matches(|c: char| is_punct(c) && c != '#' && c != '@')
        .trim_end_matches(is_punct)
        .to_string()
}

/// Whether a cleaned token survives the filtering rules.
pub fn keep_token(token: &str, stopwords: &Stopwords) -> bool {
    !token.starts_with('#')
        && !token.starts_with('@')
        && token.chars().count() >= MIN_TOKEN_CHARS
        && !token.chars().any(char::is_numeric)
        && !stopwords.contains(token)
}

/// Cleans and filters one raw token, returning `None` when it is dropped.
pub fn normalize_token(raw: &str, stopwords: &Stopwords) -> Option<String> {
    let token = clean_token(raw);
    keep_token(&token, stopwords).then_some(token)
}

/// Tokenizes text: whitespace split, edge punctuation stripped, then stopwords, short tokens,
/// tokens with digits, hashtags and user mentions removed.
pub fn tokenize(text: &str, stopwords: &Stopwords) -> Vec<String> {
    text.split_whitespace()
        .filter_map(|raw| normalize_token(raw, stopwords))
        .collect()
}
