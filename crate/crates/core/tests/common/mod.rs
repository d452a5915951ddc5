//! Independent reference implementations used by the integration tests.

#![allow(dead_code, clippy::needless_range_loop)]

use std::cmp::Ordering;

use subevent::corpus::{Corpus, Label, Tweet};
use subevent::embed::EmbeddingStore;
use subevent::extract::{Candidate, CandidateKind};

/// All eigenvalues of a dense symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(a: &[Vec<f64>]) -> Vec<f64> {
    let n = a.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
            }
        }
    }
    let mut values: Vec<f64> = (0..n).map(|i| m[i][i]).collect();
    values.sort_by(|a, b| b.total_cmp(a));
    values
}

fn unit_sum(words: &[&str], store: &EmbeddingStore) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; store.dim()];
    let mut any = false;
    for w in words {
        if let Some(v) = store.get(w) {
            any = true;
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
        }
    }
    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    (any && norm > 0.0).then(|| sum.into_iter().map(|x| x / norm).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct OracleRow {
    pub kind: CandidateKind,
    pub first: String,
    pub second: String,
    pub score: f64,
    pub best_term: Option<String>,
}

/// Double loop over candidates and terms, then a sort by score, frequency and words.
pub fn brute_force_ranking(
    candidates: &[Candidate],
    terms: &[String],
    store: &EmbeddingStore,
) -> Vec<OracleRow> {
    let term_vectors: Vec<Option<Vec<f64>>> = terms
        .iter()
        .map(|t| unit_sum(&t.split_whitespace().collect::<Vec<_>>(), store))
        .collect();
    let mut rows: Vec<(u64, OracleRow)> = Vec::new();
    for c in candidates {
        let mut best: Option<(f64, usize)> = None;
        if let Some(v) = unit_sum(&[&c.first, &c.second], store) {
            for (j, tv) in term_vectors.iter().enumerate() {
                let Some(tv) = tv else { continue };
                let cos: f64 = v
                    .iter()
                    .zip(tv)
                    .map(|(a, b)| a * b)
                    .sum::<f64>()
                    .clamp(-1.0, 1.0);
                if best.is_none_or(|(s, _)| cos > s) {
                    best = Some((cos, j));
                }
            }
        }
        rows.push((
            c.frequency,
            OracleRow {
                kind: c.kind,
                first: c.first.clone(),
                second: c.second.clone(),
                score: best.map_or(-1.0, |b| b.0),
                best_term: best.map(|b| terms[b.1].clone()),
            },
        ));
    }
    rows.sort_by(|(fa, a), (fb, b)| {
        b.score
            .partial_cmp(&a.score)
            .unwrap_or(Ordering::Equal)
            .then(fb.cmp(fa))
            .then_with(|| a.first.cmp(&b.first))
            .then_with(|| a.second.cmp(&b.second))
            .then(a.kind.cmp(&b.kind))
    });
    rows.into_iter().map(|(_, r)| r).collect()
}

pub fn tweet(id: &str, tokens: &[&str], label: Label) -> Tweet {
    let mut t = Tweet::new(id, tokens.join(" "), label);
    t.tokens = tokens.iter().map(|s| s.to_string()).collect();
    t
}

/// Four informative and two uninformative tweets. The candidate (power, outage) matches
/// tweets 1, 2 and 5; (road, blocked) matches tweet 3.
pub fn six_tweet_fixture() -> Corpus {
    use Label::*;
    Corpus::new(vec![
        tweet("1", &["power", "outage", "west", "kingman"], Informative),
        tweet(
            "2",
            &["outage", "leaves", "power", "lines", "down"],
            Informative,
        ),
        tweet("3", &["road", "blocked", "debris"], Informative),
        tweet("4", &["bridge", "collapsed"], Informative),
        tweet("5", &["power", "outage", "again", "lol"], Uninformative),
        tweet("6", &["pizza", "tonight"], Uninformative),
    ])
}
