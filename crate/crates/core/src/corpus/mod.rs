//! Tweet corpora: JSON Lines loading, labels, preprocessing and attached dependency parses.

mod conllu;
mod preprocess;

pub use conllu::{load_conllu, parse_conllu, write_conllu_sentence, DependencyParse, ParseNode};
pub use preprocess::{
    clean_token, keep_token, normalize_token, tokenize, Stopwords, MIN_TOKEN_CHARS,
};

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Label {
    Informative,
    Uninformative,
    Unlabeled,
}

impl Label {
    pub fn as_str(self) -> Option<&'static str> {
        match self {
            Label::Informative => Some("informative"),
            Label::Uninformative => Some("uninformative"),
            Label::Unlabeled => None,
        }
    }

    pub fn is_labeled(self) -> bool {
        self != Label::Unlabeled
    }
}

/// How labels in a corpus file are treated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LabelMode {
    /// Every tweet is `Unlabeled`, whatever the file says.
    Unlabeled,
    /// The `label` field is parsed; a missing label yields `Unlabeled`.
    Labeled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Tweet {
    pub id: String,
    pub raw_text: String,
    pub label: Label,
    /// Filled by [`preprocess`]; empty before.
    pub tokens: Vec<String>,
    pub parse: Option<DependencyParse>,
}

impl Tweet {
    pub fn new(id: impl Into<String>, raw_text: impl Into<String>, label: Label) -> Self {
        Tweet {
            id: id.into(),
            raw_text: raw_text.into(),
            label,
            tokens: Vec::new(),
            parse: None,
        }
    }
}

/// Tokenizes `raw_text` into `tokens`, replacing any previous tokens.
pub fn preprocess(mut tweet: Tweet, stopwords: &Stopwords) -> Tweet {
    tweet.tokens = tokenize(&tweet.raw_text, stopwords);
    tweet
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelCounts {
    pub informative: usize,
    pub uninformative: usize,
    pub unlabeled: usize,
}

impl LabelCounts {
    pub fn total(&self) -> usize {
        self.informative + self.uninformative + self.unlabeled
    }

    fn add(&mut self, label: Label) {
        match label {
            Label::Informative => self.informative += 1,
            Label::Uninformative => self.uninformative += 1,
            Label::Unlabeled => self.unlabeled += 1,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Corpus {
    tweets: Vec<Tweet>,
    counts: LabelCounts,
    /// Lines skipped as malformed when loading.
    pub skipped: usize,
}

impl Corpus {
    pub fn new(tweets: Vec<Tweet>) -> Self {
        let mut counts = LabelCounts::default();
        tweets.iter().for_each(|t| counts.add(t.label));
        Corpus {
            tweets,
            counts,
            skipped: 0,
        }
    }

    pub fn tweets(&self) -> &[Tweet] {
        &self.tweets
    }

    pub fn counts(&self) -> LabelCounts {
        self.counts
    }

    pub fn len(&self) -> usize {
        self.tweets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tweets.is_empty()
    }

    pub fn into_tweets(self) -> Vec<Tweet> {
        self.tweets
    }

    /// Concatenates two corpora (labeled tweets appended after `self`).
    pub fn concat(mut self, other: Corpus) -> Corpus {
        self.skipped += other.skipped;
        let skipped = self.skipped;
        self.tweets.extend(other.tweets);
        let mut merged = Corpus::new(self.tweets);
        merged.skipped = skipped;
        merged
    }

    /// Tokenizes every tweet; runs in parallel, order preserved.
    pub fn preprocess(self, stopwords: &Stopwords) -> Corpus {
        let skipped = self.skipped;
        let tweets = self
            .tweets
            .into_par_iter()
            .map(|t| preprocess(t, stopwords))
            .collect();
        let mut c = Corpus::new(tweets);
        c.skipped = skipped;
        c
    }

    /// Drops tweets whose `raw_text` exactly repeats an earlier tweet.
    pub fn dedupe(self) -> Corpus {
        let skipped = self.skipped;
        let mut seen = HashSet::new();
        let tweets = self
            .tweets
            .into_iter()
            .filter(|t| seen.insert(t.raw_text.clone()))
            .collect();
        let mut c = Corpus::new(tweets);
        c.skipped = skipped;
        c
    }

    /// Attaches parses by tweet id; returns how many tweets received one.
    pub fn attach_parses(&mut self, parses: &BTreeMap<String, DependencyParse>) -> usize {
        let mut attached = 0;
        for t in &mut self.tweets {
            if let Some(p) = parses.get(&t.id) {
                t.parse = Some(p.clone());
                attached += 1;
            }
        }
        attached
    }

    /// Tweets with an informativeness label.
    pub fn labeled(&self) -> impl Iterator<Item = &Tweet> {
        self.tweets.iter().filter(|t| t.label.is_labeled())
    }
}

#[derive(Deserialize)]
struct TweetRecord {
    id: String,
    text: String,
    #[serde(default)]
    label: Option<String>,
}

#[derive(Serialize)]
struct TweetRecordOut<'a> {
    id: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
}

fn parse_label(s: &str) -> Option<Label> {
    match s.trim().to_ascii_lowercase().as_str() {
        "informative" => Some(Label::Informative),
        "uninformative" | "not_informative" | "not-informative" => Some(Label::Uninformative),
        _ => None,
    }
}

/// Parses JSON Lines corpus text. Blank lines are ignored; malformed lines are skipped and
/// counted, and more than half of the lines being malformed is an error.
pub fn parse_corpus(text: &str, mode: LabelMode, source: &str) -> Result<Corpus> {
    let mut tweets = Vec::new();
    let mut skipped = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parsed = serde_json::from_str::<TweetRecord>(line)
            .map_err(|e| e.to_string())
            .and_then(|rec| {
                let label = match (mode, rec.label.as_deref()) {
                    (LabelMode::Unlabeled, _) | (LabelMode::Labeled, None) => Label::Unlabeled,
                    (LabelMode::Labeled, Some(s)) => {
                        parse_label(s).ok_or_else(|| format!("unknown label `{s}`"))?
                    }
                };
                Ok(Tweet::new(rec.id, rec.text, label))
            });
        match parsed {
            Ok(t) => tweets.push(t),
            Err(msg) => {
                log::warn!("{source}:{}: skipping malformed line: {msg}", lineno + 1);
                skipped += 1;
            }
        }
    }
    let seen = tweets.len() + skipped;
    if skipped * 2 > seen {
        return Err(Error::format(
            source,
            format!("{skipped} of {seen} lines are malformed"),
        ));
    }
    let mut corpus = Corpus::new(tweets);
    corpus.skipped = skipped;
    Ok(corpus)
}

pub fn load_corpus(path: &Path, mode: LabelMode) -> Result<Corpus> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_corpus(&text, mode, &path.display().to_string())
}

/// Writes `(id, text, label)` for each tweet as JSON Lines.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    for t in corpus.tweets() {
        let rec = TweetRecordOut {
            id: &t.id,
            text: &t.raw_text,
            label: t.label.as_str(),
        };
        serde_json::to_writer(&mut out, &rec)?;
        out.write_all(b"\n")?;
    }
    Ok(())
}
