//! Ontology-guided candidate ranking and the overlap-coefficient baseline.

use std::cmp::Ordering;
use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embed::{compose, cosine, ComposedVector, EmbeddingStore};
use crate::error::{Error, Result};
use crate::extract::{Candidate, CandidateSet};

const BUNDLED_TERMS: &str = include_str!("../data/moac_terms.txt");

/// Score assigned to candidates whose composed vector is null.
pub const NULL_SCORE: f64 = -1.0;

/// A flat list of domain terms with their composed vectors.
#[derive(Debug, Clone)]
pub struct Ontology {
    terms: Vec<String>,
    vectors: Vec<ComposedVector>,
}

/// Term lines of an ontology file: trimmed, non-empty, not starting with `#`.
pub fn parse_terms(text: &str) -> Vec<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_string)
        .collect()
}

/// The bundled crisis-management term list.
pub fn bundled_terms() -> Vec<String> {
    parse_terms(BUNDLED_TERMS)
}

impl Ontology {
    /// Composes a vector per term (lowercased, whitespace-split). Terms with a null vector are
    /// kept but never match; at least one usable term is required.
    pub fn from_terms(terms: Vec<String>, store: &EmbeddingStore) -> Result<Self> {
        let vectors: Vec<ComposedVector> = terms
            .iter()
            .map(|t| {
                let words: Vec<String> = t.split_whitespace().map(str::to_lowercase).collect();
                compose(&words, store)
            })
            .collect();
        for (t, v) in terms.iter().zip(&vectors) {
            if v.is_null {
                log::warn!("ontology term `{t}` has no known words and is excluded from scoring");
            }
        }
        if !vectors.iter().any(|v| !v.is_null) {
            return Err(Error::format(
                "ontology",
                format!("none of the {} terms has a usable vector", terms.len()),
            ));
        }
        Ok(Ontology { terms, vectors })
    }

    pub fn bundled(store: &EmbeddingStore) -> Result<Self> {
        Self::from_terms(bundled_terms(), store)
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn vectors(&self) -> &[ComposedVector] {
        &self.vectors
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn usable_len(&self) -> usize {
        self.vectors.iter().filter(|v| !v.is_null).count()
    }

    /// Best `(score, term index)` for a composed vector; the first listed term wins exact ties.
    pub fn best_match(&self, v: &ComposedVector) -> Option<(f64, usize)> {
        if v.is_null {
            return None;
        }
        let mut best: Option<(f64, usize)> = None;
        for (i, t) in self.vectors.iter().enumerate() {
            if t.is_null {
                continue;
            }
            let s = cosine(v, t).ok()?;
            if best.is_none_or(|(b, _)| s > b) {
                best = Some((s, i));
            }
        }
        best
    }
}

pub fn load_ontology(path: &Path, store: &EmbeddingStore) -> Result<Ontology> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let terms = parse_terms(&text);
    if terms.is_empty() {
        return Err(Error::format(
            path.display().to_string(),
            "ontology file lists no terms",
        ));
    }
    Ontology::from_terms(terms, store)
        .map_err(|e| Error::format(path.display().to_string(), e.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedCandidate {
    pub candidate: Candidate,
    pub score: f64,
    pub best_term: Option<String>,
    /// 1-based position.
    pub rank: usize,
}

/// Score descending, then frequency descending, then `(first, second, kind)` ascending.
pub fn ranking_order(a: &RankedCandidate, b: &RankedCandidate) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.candidate.frequency.cmp(&a.candidate.frequency))
        .then_with(|| a.candidate.first.cmp(&b.candidate.first))
        .then_with(|| a.candidate.second.cmp(&b.candidate.second))
        .then(a.candidate.kind.cmp(&b.candidate.kind))
}

/// Sorts by [`ranking_order`] and assigns 1-based ranks.
pub fn sort_ranked(mut ranked: Vec<RankedCandidate>) -> Vec<RankedCandidate> {
    ranked.sort_by(ranking_order);
    for (i, r) in ranked.iter_mut().enumerate() {
        r.rank = i + 1;
    }
    ranked
}

/// Composed vector of a candidate's two words.
pub fn candidate_vector(c: &Candidate, store: &EmbeddingStore) -> ComposedVector {
    compose(&c.words(), store)
}

/// Ranks candidates by their maximum cosine similarity to any usable ontology term.
pub fn rank_candidates(
    set: &CandidateSet,
    onto: &Ontology,
    store: &EmbeddingStore,
) -> Vec<RankedCandidate> {
    let scored: Vec<RankedCandidate> = set
        .candidates
        .par_iter()
        .map(|c| {
            let v = candidate_vector(c, store);
            let (score, best_term) = match onto.best_match(&v) {
                Some((s, i)) => (s, Some(onto.terms[i].clone())),
                None => (NULL_SCORE, None),
            };
            RankedCandidate {
                candidate: c.clone(),
                score,
                best_term,
                rank: 0,
            }
        })
        .collect();
    sort_ranked(scored)
}

/// How co-occurrence counts are discounted in the baseline score.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Discount {
    /// `ln(1 + |A ∩ B|)`.
    #[default]
    Log1p,
    /// No discount (factor 1).
    Identity,
}

impl Discount {
    pub fn factor(self, co_occurrences: usize) -> f64 {
        match self {
            Discount::Log1p => (co_occurrences as f64).ln_1p(),
            Discount::Identity => 1.0,
        }
    }
}

/// Szymkiewicz-Simpson overlap `|A ∩ B| / min(|A|, |B|)` of two sorted id lists, together
/// with `|A ∩ B|`.
pub fn overlap_coefficient(a: &[usize], b: &[usize]) -> (f64, usize) {
    if a.is_empty() || b.is_empty() {
        return (0.0, 0);
    }
    let inter = sorted_intersection_len(a, b);
    (inter as f64 / a.len().min(b.len()) as f64, inter)
}

pub(crate) fn sorted_intersection_len(a: &[usize], b: &[usize]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Sorted ids of the tweets containing each token.
pub fn token_postings(corpus: &Corpus) -> HashMap<&str, Vec<usize>> {
    let mut postings: HashMap<&str, Vec<usize>> = HashMap::new();
    for (i, t) in corpus.tweets().iter().enumerate() {
        for tok in &t.tokens {
            let list = postings.entry(tok.as_str()).or_default();
            if list.last() != Some(&i) {
                list.push(i);
            }
        }
    }
    postings
}

/// Baseline ranking: overlap coefficient of the tweets containing each word, times a discount
/// of the co-occurrence count.
pub fn rank_baseline_overlap(
    set: &CandidateSet,
    corpus: &Corpus,
    discount: Discount,
) -> Vec<RankedCandidate> {
    let postings = token_postings(corpus);
    let empty = Vec::new();
    let scored = set
        .candidates
        .par_iter()
        .map(|c| {
            let a = postings.get(c.first.as_str()).unwrap_or(&empty);
            let b = postings.get(c.second.as_str()).unwrap_or(&empty);
            let (overlap, inter) = overlap_coefficient(a, b);
            let score = if inter == 0 {
                0.0
            } else {
                overlap * discount.factor(inter)
            };
            RankedCandidate {
                candidate: c.clone(),
                score,
                best_term: None,
                rank: 0,
            }
        })
        .collect();
    sort_ranked(scored)
}

/// First `min(k, len)` entries.
pub fn top_k(ranked: &[RankedCandidate], k: usize) -> &[RankedCandidate] {
    &ranked[..k.min(ranked.len())]
}

#[derive(Serialize, Deserialize)]
struct RankedRow {
    rank: usize,
    kind: String,
    first: String,
    second: String,
    frequency: u64,
    score: f64,
    best_term: String,
}

/// Writes `rank,kind,first,second,frequency,score,best_term`. Scores use the shortest
/// round-trip decimal form, so reading the file back reproduces them exactly.
pub fn write_ranked_csv<W: Write>(ranked: &[RankedCandidate], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in ranked {
        w.serialize(RankedRow {
            rank: r.rank,
            kind: r.candidate.kind.as_str().into(),
            first: r.candidate.first.clone(),
            second: r.candidate.second.clone(),
            frequency: r.candidate.frequency,
            score: r.score,
            best_term: r.best_term.clone().unwrap_or_default(),
        })
        .map_err(|e| Error::format("ranked csv", e.to_string()))?;
    }
    w.flush()
        .map_err(|e| Error::format("ranked csv", e.to_string()))?;
    Ok(())
}

pub fn read_ranked_csv<R: Read>(input: R) -> Result<Vec<RankedCandidate>> {
    let mut r = csv::Reader::from_reader(input);
    r.deserialize::<RankedRow>()
        .map(|row| {
            let row = row.map_err(|e| Error::format("ranked csv", e.to_string()))?;
            Ok(RankedCandidate {
                candidate: Candidate {
                    kind: row.kind.parse()?,
                    first: row.first,
                    second: row.second,
                    frequency: row.frequency,
                },
                score: row.score,
                best_term: (!row.best_term.is_empty()).then_some(row.best_term),
                rank: row.rank,
            })
        })
        .collect()
}
