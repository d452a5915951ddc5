//! Candidate sub-event extraction: noun-verb pairs and two-word phrases.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{clean_token, keep_token, Corpus, Stopwords, Tweet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CandidateKind {
    NounVerb,
    Phrase,
}

impl CandidateKind {
    pub fn as_str(self) -> &'static str {
        match self {
            CandidateKind::NounVerb => "noun_verb",
            CandidateKind::Phrase => "phrase",
        }
    }
}

impl fmt::Display for CandidateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for CandidateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noun_verb" => Ok(CandidateKind::NounVerb),
            "phrase" => Ok(CandidateKind::Phrase),
            other => Err(Error::format(
                "candidate kind",
                format!("unknown kind `{other}`"),
            )),
        }
    }
}

/// A sub-event candidate. For noun-verb pairs `first` is the noun and `second` the verb;
/// for phrases they are the two words in text order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Candidate {
    pub kind: CandidateKind,
    pub first: String,
    pub second: String,
    pub frequency: u64,
}

impl Candidate {
    pub fn noun_verb(noun: impl Into<String>, verb: impl Into<String>, frequency: u64) -> Self {
        Candidate {
            kind: CandidateKind::NounVerb,
            first: noun.into(),
            second: verb.into(),
            frequency,
        }
    }

    pub fn phrase(first: impl Into<String>, second: impl Into<String>, frequency: u64) -> Self {
        Candidate {
            kind: CandidateKind::Phrase,
            first: first.into(),
            second: second.into(),
            frequency,
        }
    }

    pub fn key(&self) -> (CandidateKind, &str, &str) {
        (self.kind, &self.first, &self.second)
    }

    pub fn words(&self) -> [&str; 2] {
        [&self.first, &self.second]
    }

    /// "first second", as the candidate reads in text.
    pub fn text(&self) -> String {
        format!("{} {}", self.first, self.second)
    }
}

impl fmt::Display for Candidate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.first, self.second)
    }
}

/// Merges candidates with the same identity by summing frequencies; output sorted by identity.
pub fn aggregate<I: IntoIterator<Item = Candidate>>(items: I) -> Vec<Candidate> {
    let mut merged: BTreeMap<(CandidateKind, String, String), u64> = BTreeMap::new();
    for c in items {
        *merged.entry((c.kind, c.first, c.second)).or_default() += c.frequency;
    }
    merged
        .into_iter()
        .map(|((kind, first, second), frequency)| Candidate {
            kind,
            first,
            second,
            frequency,
        })
        .collect()
}

fn is_noun(upos: &str) -> bool {
    matches!(upos, "NOUN" | "PROPN")
}

fn is_verb(upos: &str) -> bool {
    upos == "VERB"
}

/// Noun-verb pairs from the head-dependent edges of the tweet's dependency parse.
///
/// Each edge joining a NOUN/PROPN and a VERB (either orientation) yields one pair, noun first,
/// using lowercased surface forms. Pairs where either word would be dropped by tokenization
/// are not emitted.
pub fn extract_nv_pairs(tweet: &Tweet, stopwords: &Stopwords) -> Result<Vec<Candidate>> {
    let parse = tweet.parse.as_ref().ok_or_else(|| {
        Error::InvalidArgument(format!(
            "tweet {} has no dependency parse; use extract_nv_pairs_fallback with a POS lexicon",
            tweet.id
        ))
    })?;
    let mut out = Vec::new();
    for (dep, head) in parse.edges() {
        let (noun, verb) = if is_noun(&dep.upos) && is_verb(&head.upos) {
            (dep, head)
        } else if is_verb(&dep.upos) && is_noun(&head.upos) {
            (head, dep)
        } else {
            continue;
        };
        let noun = clean_token(&noun.surface);
        let verb = clean_token(&verb.surface);
        if keep_token(&noun, stopwords) && keep_token(&verb, stopwords) {
            out.push(Candidate::noun_verb(noun, verb, 1));
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PosTags {
    pub noun: bool,
    pub verb: bool,
}

/// Word to {noun, verb} tag map used when no dependency parse is available.
#[derive(Debug, Clone, Default)]
pub struct PosLexicon {
    tags: HashMap<String, PosTags>,
}

const BUNDLED_LEXICON: &str = include_str!("../data/pos_lexicon.tsv");

impl PosLexicon {
    /// The small lexicon shipped with the crate.
    pub fn bundled() -> Self {
        Self::parse(BUNDLED_LEXICON, "bundled lexicon").expect("bundled lexicon is well formed")
    }

    /// Parses `word<TAB>tags` lines where tags is a comma-separated subset of `N`, `V`.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut tags: HashMap<String, PosTags> = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim_end();
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, spec) = line.split_once('\t').ok_or_else(|| {
                Error::format(format!("{source}:{}", i + 1), "expected `word<TAB>tags`")
            })?;
            let entry = tags.entry(word.trim().to_lowercase()).or_default();
            for t in spec.split(',').map(str::trim) {
                match t {
                    "N" => entry.noun = true,
                    "V" => entry.verb = true,
                    other => {
                        return Err(Error::format(
                            format!("{source}:{}", i + 1),
                            format!("unknown tag `{other}` (expected N or V)"),
                        ))
                    }
                }
            }
        }
        Ok(PosLexicon { tags })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn insert(&mut self, word: &str, tags: PosTags) {
        self.tags.insert(word.to_lowercase(), tags);
    }

    pub fn get(&self, word: &str) -> PosTags {
        self.tags.get(word).copied().unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }
}

pub const DEFAULT_NV_WINDOW: usize = 4;

/// Lexicon-based noun-verb pairs over the preprocessed token stream.
///
/// A noun at position `i` pairs with a verb at position `j` when `i < j` and `j - i < window`.
/// Emission is ordered by noun position, then verb position.
pub fn extract_nv_pairs_fallback(
    tweet: &Tweet,
    lexicon: &PosLexicon,
    window: usize,
) -> Vec<Candidate> {
    let toks = &tweet.tokens;
    let mut out = Vec::new();
    for (i, noun) in toks.iter().enumerate() {
        if !lexicon.get(noun).noun {
            continue;
        }
        for verb in toks.iter().take(i + window.max(1)).skip(i + 1) {
            if lexicon.get(verb).verb {
                out.push(Candidate::noun_verb(noun.clone(), verb.clone(), 1));
            }
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhraseConfig {
    pub min_count: u64,
    pub threshold: f64,
}

impl Default for PhraseConfig {
    fn default() -> Self {
        PhraseConfig {
            min_count: 2,
            threshold: 10.0,
        }
    }
}

impl PhraseConfig {
    pub fn validate(&self) -> Result<()> {
        if self.min_count < 1 {
            return Err(Error::Config("phrase.min_count must be at least 1".into()));
        }
        if !(self.threshold >= 0.0 && self.threshold.is_finite()) {
            return Err(Error::Config(
                "phrase.threshold must be a nonnegative number".into(),
            ));
        }
        Ok(())
    }
}

/// Collocation score `(count_ab - min_count) * vocab / (count_a * count_b)`.
pub fn mikolov_score(count_ab: u64, count_a: u64, count_b: u64, vocab: u64, min_count: u64) -> f64 {
    if count_a == 0 || count_b == 0 {
        return f64::NEG_INFINITY;
    }
    (count_ab as f64 - min_count as f64) * vocab as f64 / (count_a as f64 * count_b as f64)
}

/// Unigram and adjacent-bigram counts over the token streams of a corpus.
#[derive(Debug, Clone, Default)]
pub struct PhraseStats {
    unigrams: HashMap<String, u64>,
    bigrams: HashMap<(String, String), u64>,
}

impl PhraseStats {
    pub fn from_token_streams<'a, I>(streams: I) -> Self
    where
        I: IntoParallelIterator<Item = &'a [String]>,
    {
        streams
            .into_par_iter()
            .fold(PhraseStats::default, |mut acc, toks| {
                acc.add_stream(toks);
                acc
            })
            .reduce(PhraseStats::default, PhraseStats::merge)
    }

    pub fn from_corpus(corpus: &Corpus) -> Self {
        let streams: Vec<&[String]> = corpus
            .tweets()
            .iter()
            .map(|t| t.tokens.as_slice())
            .collect();
        Self::from_token_streams(streams)
    }

    fn add_stream(&mut self, toks: &[String]) {
        for t in toks {
            *self.unigrams.entry(t.clone()).or_default() += 1;
        }
        for w in toks.windows(2) {
            *self
                .bigrams
                .entry((w[0].clone(), w[1].clone()))
                .or_default() += 1;
        }
    }

    fn merge(mut self, other: PhraseStats) -> PhraseStats {
        for (k, v) in other.unigrams {
            *self.unigrams.entry(k).or_default() += v;
        }
        for (k, v) in other.bigrams {
            *self.bigrams.entry(k).or_default() += v;
        }
        self
    }

    /// Number of distinct unigrams.
    pub fn vocab_size(&self) -> u64 {
        self.unigrams.len() as u64
    }

    pub fn unigram_count(&self, w: &str) -> u64 {
        self.unigrams.get(w).copied().unwrap_or(0)
    }

    pub fn bigram_count(&self, a: &str, b: &str) -> u64 {
        self.bigrams
            .get(&(a.to_string(), b.to_string()))
            .copied()
            .unwrap_or(0)
    }

    pub fn score(&self, a: &str, b: &str, min_count: u64) -> f64 {
        mikolov_score(
            self.bigram_count(a, b),
            self.unigram_count(a),
            self.unigram_count(b),
            self.vocab_size(),
            min_count,
        )
    }

    /// Bigrams with `count >= min_count` and score strictly above the threshold, sorted.
    pub fn phrases(&self, cfg: &PhraseConfig) -> Vec<Candidate> {
        let vocab = self.vocab_size();
        let mut out: Vec<Candidate> = self
            .bigrams
            .iter()
            .filter(|(_, &n)| n >= cfg.min_count)
            .filter(|((a, b), &n)| {
                mikolov_score(n, self.unigrams[a], self.unigrams[b], vocab, cfg.min_count)
                    > cfg.threshold
            })
            .map(|((a, b), &n)| Candidate::phrase(a.clone(), b.clone(), n))
            .collect();
        out.sort_by(|x, y| x.key().cmp(&y.key()));
        out
    }
}

/// Two-word phrases over the corpus token streams.
pub fn detect_phrases(corpus: &Corpus, cfg: &PhraseConfig) -> Vec<Candidate> {
    if corpus.is_empty() {
        return Vec::new();
    }
    PhraseStats::from_corpus(corpus).phrases(cfg)
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Accounting {
    /// Distinct noun-verb pairs before frequency filtering.
    pub nv_before: usize,
    pub nv_after: usize,
    pub phrase_count: usize,
    pub total: usize,
    /// Word pairs present both as a noun-verb pair and as a phrase (kept as two candidates).
    pub shared_pairs: usize,
}

/// `1 - after / before`, the fraction removed by filtering.
pub fn reduction(before: usize, after: usize) -> f64 {
    if before == 0 {
        0.0
    } else {
        1.0 - after as f64 / before as f64
    }
}

impl Accounting {
    pub fn nv_reduction(&self) -> f64 {
        reduction(self.nv_before, self.nv_after)
    }

    /// Reduction of the total candidate count relative to the unfiltered union.
    pub fn total_reduction(&self) -> f64 {
        reduction(self.nv_before + self.phrase_count, self.total)
    }
}

impl fmt::Display for Accounting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "nv_before     {}", self.nv_before)?;
        writeln!(f, "nv_after      {}", self.nv_after)?;
        writeln!(f, "nv_reduction  {:.2}%", 100.0 * self.nv_reduction())?;
        writeln!(f, "phrases       {}", self.phrase_count)?;
        writeln!(f, "total         {}", self.total)?;
        writeln!(f, "total_reduction {:.2}%", 100.0 * self.total_reduction())?;
        write!(f, "shared_pairs  {}", self.shared_pairs)
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateSet {
    pub candidates: Vec<Candidate>,
    pub accounting: Accounting,
}

impl CandidateSet {
    pub fn len(&self) -> usize {
        self.candidates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.candidates.is_empty()
    }

    /// Wraps an already filtered candidate list (e.g. read back from disk).
    pub fn from_candidates(candidates: Vec<Candidate>) -> Self {
        let nv = candidates
            .iter()
            .filter(|c| c.kind == CandidateKind::NounVerb)
            .count();
        let accounting = Accounting {
            nv_before: nv,
            nv_after: nv,
            phrase_count: candidates.len() - nv,
            total: candidates.len(),
            shared_pairs: shared_pairs(&candidates),
        };
        CandidateSet {
            candidates,
            accounting,
        }
    }
}

fn shared_pairs(candidates: &[Candidate]) -> usize {
    let nv: BTreeSet<(&str, &str)> = candidates
        .iter()
        .filter(|c| c.kind == CandidateKind::NounVerb)
        .map(|c| (c.first.as_str(), c.second.as_str()))
        .collect();
    candidates
        .iter()
        .filter(|c| {
            c.kind == CandidateKind::Phrase && nv.contains(&(c.first.as_str(), c.second.as_str()))
        })
        .count()
}

pub const DEFAULT_MIN_NV_FREQUENCY: u64 = 2;

/// Keeps noun-verb pairs seen at least `min_nv_frequency` times plus every phrase.
pub fn filter_candidates(
    nv: Vec<Candidate>,
    phrases: Vec<Candidate>,
    min_nv_frequency: u64,
) -> CandidateSet {
    let nv = aggregate(nv.into_iter().filter(|c| c.kind == CandidateKind::NounVerb));
    let phrases = aggregate(
        phrases
            .into_iter()
            .filter(|c| c.kind == CandidateKind::Phrase),
    );
    let nv_before = nv.len();
    let kept: Vec<Candidate> = nv
        .into_iter()
        .filter(|c| c.frequency >= min_nv_frequency)
        .collect();
    let nv_after = kept.len();
    let phrase_count = phrases.len();
    let mut candidates = kept;
    candidates.extend(phrases);
    let accounting = Accounting {
        nv_before,
        nv_after,
        phrase_count,
        total: candidates.len(),
        shared_pairs: shared_pairs(&candidates),
    };
    CandidateSet {
        candidates,
        accounting,
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractionCounts {
    pub tweets: usize,
    pub parsed: usize,
    pub lexicon_fallback: usize,
    /// Tweets with neither a parse nor a lexicon to fall back on.
    pub no_nv_source: usize,
}

#[derive(Debug, Clone, Default)]
pub struct Extraction {
    /// Aggregated noun-verb pairs before frequency filtering.
    pub nv_pairs: Vec<Candidate>,
    pub phrases: Vec<Candidate>,
    pub counts: ExtractionCounts,
}

/// Runs both extractors over a preprocessed corpus. Tweets with a parse use it; the rest use
/// the lexicon when one is given.
pub fn extract_corpus(
    corpus: &Corpus,
    stopwords: &Stopwords,
    lexicon: Option<&PosLexicon>,
    window: usize,
    phrase_cfg: &PhraseConfig,
) -> Result<Extraction> {
    phrase_cfg.validate()?;
    let per_tweet: Vec<(u8, Vec<Candidate>)> = corpus
        .tweets()
        .par_iter()
        .map(|t| {
            if t.parse.is_some() {
                extract_nv_pairs(t, stopwords).map(|v| (0u8, v))
            } else if let Some(lex) = lexicon {
                Ok((1, extract_nv_pairs_fallback(t, lex, window)))
            } else {
                Ok((2, Vec::new()))
            }
        })
        .collect::<Result<_>>()?;
    let mut counts = ExtractionCounts {
        tweets: corpus.len(),
        ..Default::default()
    };
    for (src, _) in &per_tweet {
        match src {
            0 => counts.parsed += 1,
            1 => counts.lexicon_fallback += 1,
            _ => counts.no_nv_source += 1,
        }
    }
    let nv_pairs = aggregate(per_tweet.into_iter().flat_map(|(_, v)| v));
    Ok(Extraction {
        nv_pairs,
        phrases: detect_phrases(corpus, phrase_cfg),
        counts,
    })
}

#[derive(Serialize, Deserialize)]
struct CandidateRow {
    kind: String,
    first: String,
    second: String,
    frequency: u64,
}

/// Writes `kind,first,second,frequency`.
pub fn write_candidates_csv<W: Write>(candidates: &[Candidate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for c in candidates {
        w.serialize(CandidateRow {
            kind: c.kind.as_str().into(),
            first: c.first.clone(),
            second: c.second.clone(),
            frequency: c.frequency,
        })
        .map_err(|e| Error::format("candidates csv", e.to_string()))?;
    }
    w.flush()
        .map_err(|e| Error::format("candidates csv", e.to_string()))?;
    Ok(())
}

pub fn read_candidates_csv<R: Read>(input: R) -> Result<Vec<Candidate>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::format("candidates csv", e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["kind", "first", "second", "frequency"] {
        return Err(Error::format(
            "candidates csv",
            "expected header kind,first,second,frequency",
        ));
    }
    r.deserialize::<CandidateRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::format("candidates csv", e.to_string()))?;
            Ok(Candidate {
                kind: row.kind.parse()?,
                first: row.first,
                second: row.second,
                frequency: row.frequency,
            })
        })
        .collect()
}
