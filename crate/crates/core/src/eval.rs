//! Top-k retrieval metrics: how well the leading candidates pick out informative tweets.

use std::collections::{HashMap, HashSet};
use std::io::{Read, Write};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Label, Tweet};
use crate::error::{Error, Result};
use crate::extract::{Candidate, CandidateKind};
use crate::rank::RankedCandidate;

/// How a candidate's two words must occur in a tweet to count as a match.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MatchMode {
    /// Both words appear anywhere in the tweet.
    Anywhere,
    /// The words appear next to each other, in order.
    Adjacent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchPolicy {
    pub noun_verb: MatchMode,
    pub phrase: MatchMode,
}

impl Default for MatchPolicy {
    fn default() -> Self {
        MatchPolicy {
            noun_verb: MatchMode::Anywhere,
            phrase: MatchMode::Adjacent,
        }
    }
}

impl MatchPolicy {
    pub fn mode(&self, kind: CandidateKind) -> MatchMode {
        match kind {
            CandidateKind::NounVerb => self.noun_verb,
            CandidateKind::Phrase => self.phrase,
        }
    }
}

fn contains_adjacent(tokens: &[String], first: &str, second: &str) -> bool {
    tokens.windows(2).any(|w| w[0] == first && w[1] == second)
}

/// Default matching rule for a single tweet.
pub fn tweet_matches(tweet: &Tweet, candidate: &Candidate) -> bool {
    tweet_matches_with(tweet, candidate, &MatchPolicy::default())
}

pub fn tweet_matches_with(tweet: &Tweet, candidate: &Candidate, policy: &MatchPolicy) -> bool {
    let (a, b) = (candidate.first.as_str(), candidate.second.as_str());
    match policy.mode(candidate.kind) {
        MatchMode::Anywhere => {
            tweet.tokens.iter().any(|t| t == a) && tweet.tokens.iter().any(|t| t == b)
        }
        MatchMode::Adjacent => contains_adjacent(&tweet.tokens, a, b),
    }
}

/// Inverted index over the labeled tweets of a corpus.
#[derive(Debug, Clone)]
pub struct MatchIndex {
    informative: Vec<bool>,
    tokens: HashMap<String, Vec<usize>>,
    bigrams: HashMap<(String, String), Vec<usize>>,
}

impl MatchIndex {
    /// Indexes labeled tweets only; unlabeled ones are ignored.
    pub fn build(corpus: &Corpus) -> Self {
        let labeled: Vec<&Tweet> = corpus.labeled().collect();
        let mut tokens: HashMap<String, Vec<usize>> = HashMap::new();
        let mut bigrams: HashMap<(String, String), Vec<usize>> = HashMap::new();
        for (i, t) in labeled.iter().enumerate() {
            let mut seen = HashSet::new();
            for tok in &t.tokens {
                if seen.insert(tok.as_str()) {
                    tokens.entry(tok.clone()).or_default().push(i);
                }
            }
            let mut seen = HashSet::new();
            for w in t.tokens.windows(2) {
                if seen.insert((w[0].as_str(), w[1].as_str())) {
                    bigrams
                        .entry((w[0].clone(), w[1].clone()))
                        .or_default()
                        .push(i);
                }
            }
        }
        MatchIndex {
            informative: labeled
                .iter()
                .map(|t| t.label == Label::Informative)
                .collect(),
            tokens,
            bigrams,
        }
    }

    pub fn len(&self) -> usize {
        self.informative.len()
    }

    pub fn is_empty(&self) -> bool {
        self.informative.is_empty()
    }

    pub fn informative_count(&self) -> usize {
        self.informative.iter().filter(|&&x| x).count()
    }

    pub fn uninformative_count(&self) -> usize {
        self.len() - self.informative_count()
    }

    /// Sorted indices of the labeled tweets the candidate matches.
    pub fn matches(&self, candidate: &Candidate, policy: &MatchPolicy) -> Vec<usize> {
        let (a, b) = (candidate.first.as_str(), candidate.second.as_str());
        match policy.mode(candidate.kind) {
            MatchMode::Anywhere => {
                let (Some(pa), Some(pb)) = (self.tokens.get(a), self.tokens.get(b)) else {
                    return Vec::new();
                };
                let other: HashSet<usize> = pb.iter().copied().collect();
                pa.iter().copied().filter(|i| other.contains(i)).collect()
            }
            MatchMode::Adjacent => self
                .bigrams
                .get(&(a.to_string(), b.to_string()))
                .cloned()
                .unwrap_or_default(),
        }
    }
}

/// Retrieval quality of one top-k cut.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsPoint {
    pub k: usize,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub fpr: f64,
    pub tpr: f64,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsPoint {
    pub fn from_counts(k: usize, tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        // Harmonic mean of precision and recall, written over counts to avoid rounding.
        let f1 = ratio(2 * tp, 2 * tp + fp + fn_);
        MetricsPoint {
            k,
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            fpr: ratio(fp, fp + tn),
            tpr: recall,
        }
    }
}

/// Metrics at each cut in `ks` (ascending), using the default matching rules.
pub fn evaluate_at_k(
    ranked: &[RankedCandidate],
    labeled: &Corpus,
    ks: &[usize],
) -> Result<Vec<MetricsPoint>> {
    evaluate_with(
        ranked,
        &MatchIndex::build(labeled),
        ks,
        &MatchPolicy::default(),
    )
}

/// Every cut from 0 through the full candidate list.
pub fn full_sweep(n_candidates: usize) -> Vec<usize> {
    (0..=n_candidates).collect()
}

pub fn evaluate_with(
    ranked: &[RankedCandidate],
    index: &MatchIndex,
    ks: &[usize],
    policy: &MatchPolicy,
) -> Result<Vec<MetricsPoint>> {
    let positives = index.informative_count();
    let negatives = index.uninformative_count();
    if positives == 0 || negatives == 0 {
        return Err(Error::InvalidArgument(format!(
            "evaluation needs both informative and uninformative tweets, found {positives} and {negatives}"
        )));
    }
    if ks.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::InvalidArgument(
            "evaluation cut sizes must be sorted ascending".into(),
        ));
    }
    let deepest = ks.last().map_or(0, |&k| k.min(ranked.len()));
    let hits: Vec<Vec<usize>> = ranked[..deepest]
        .par_iter()
        .map(|r| index.matches(&r.candidate, policy))
        .collect();

    let mut identified = vec![false; index.len()];
    let (mut tp, mut fp) = (0, 0);
    let mut depth = 0;
    let mut out = Vec::with_capacity(ks.len());
    for &k in ks {
        while depth < k.min(ranked.len()) {
            for &t in &hits[depth] {
                if !identified[t] {
                    identified[t] = true;
                    if index.informative[t] {
                        tp += 1;
                    } else {
                        fp += 1;
                    }
                }
            }
            depth += 1;
        }
        out.push(MetricsPoint::from_counts(
            k,
            tp,
            fp,
            positives - tp,
            negatives - fp,
        ));
    }
    Ok(out)
}

/// ROC polyline ordered by k, framed by (0, 0) and (1, 1).
pub fn roc_points(metrics: &[MetricsPoint]) -> Vec<(f64, f64)> {
    let mut pts = Vec::with_capacity(metrics.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend(metrics.iter().map(|m| (m.fpr, m.tpr)));
    pts.push((1.0, 1.0));
    pts
}

/// Trapezoidal area under a polyline.
pub fn auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0)
        .sum()
}

pub const METRICS_HEADER: [&str; 10] = [
    "k",
    "tp",
    "fp",
    "fn",
    "tn",
    "precision",
    "recall",
    "f1",
    "fpr",
    "tpr",
];

pub fn write_metrics_csv<W: Write>(metrics: &[MetricsPoint], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let csv_err = |e: csv::Error| Error::format("metrics csv", e.to_string());
    w.write_record(METRICS_HEADER).map_err(csv_err)?;
    for m in metrics {
        w.write_record([
            m.k.to_string(),
            m.tp.to_string(),
            m.fp.to_string(),
            m.fn_.to_string(),
            m.tn.to_string(),
            m.precision.to_string(),
            m.recall.to_string(),
            m.f1.to_string(),
            m.fpr.to_string(),
            m.tpr.to_string(),
        ])
        .map_err(csv_err)?;
    }
    w.flush()
        .map_err(|e| Error::format("metrics csv", e.to_string()))?;
    Ok(())
}

pub fn read_metrics_csv<R: Read>(input: R) -> Result<Vec<MetricsPoint>> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r
        .headers()
        .map_err(|e| Error::format("metrics csv", e.to_string()))?;
    if headers.iter().ne(METRICS_HEADER) {
        return Err(Error::format(
            "metrics csv",
            format!("unexpected header {headers:?}"),
        ));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec.map_err(|e| Error::format("metrics csv", e.to_string()))?;
        let bad =
            |field: &str| Error::format("metrics csv", format!("row {}: bad {field}", line + 2));
        let int = |i: usize| rec[i].parse::<usize>().map_err(|_| bad(METRICS_HEADER[i]));
        let real = |i: usize| rec[i].parse::<f64>().map_err(|_| bad(METRICS_HEADER[i]));
        out.push(MetricsPoint {
            k: int(0)?,
            tp: int(1)?,
            fp: int(2)?,
            fn_: int(3)?,
            tn: int(4)?,
            precision: real(5)?,
            recall: real(6)?,
            f1: real(7)?,
            fpr: real(8)?,
            tpr: real(9)?,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn tweet(tokens: &[&str], label: Label) -> Tweet {
        let mut t = Tweet::new("x", tokens.join(" "), label);
        t.tokens = tokens.iter().map(|s| s.to_string()).collect();
        t
    }

    fn ranked(cands: Vec<Candidate>) -> Vec<RankedCandidate> {
        cands
            .into_iter()
            .enumerate()
            .map(|(i, candidate)| RankedCandidate {
                candidate,
                score: 1.0 - i as f64 * 0.01,
                best_term: None,
                rank: i + 1,
            })
            .collect()
    }

    fn six_tweets() -> Corpus {
        use Label::*;
        Corpus::new(vec![
            tweet(&["power", "outage", "kingman"], Informative),
            tweet(&["outage", "reported", "power"], Informative),
            tweet(&["road", "blocked"], Informative),
            tweet(&["bridge", "collapsed"], Informative),
            tweet(&["power", "outage", "again", "lol"], Uninformative),
            tweet(&["pizza", "tonight"], Uninformative),
        ])
    }

    #[test]
    fn matching_rules() {
        let t = tweet(
            &["power", "outage", "west", "kingman", "flooding"],
            Label::Informative,
        );
        assert!(tweet_matches(
            &t,
            &Candidate::noun_verb("power", "outage", 1)
        ));
        let w = tweet(&["waterborne", "diseases", "rise"], Label::Informative);
        let rev = tweet(&["diseases", "waterborne"], Label::Informative);
        let p = Candidate::phrase("waterborne", "diseases", 2);
        assert!(tweet_matches(&w, &p));
        assert!(!tweet_matches(&rev, &p));
        assert!(!tweet_matches(&tweet(&[], Label::Informative), &p));
        let nv = Candidate::noun_verb("diseases", "waterborne", 2);
        assert!(tweet_matches(&rev, &nv) && tweet_matches(&w, &nv));
    }

    #[test]
    fn hand_counted_fixture() {
        let r = ranked(vec![
            Candidate::noun_verb("power", "outage", 3),
            Candidate::noun_verb("road", "blocked", 2),
        ]);
        let m = evaluate_at_k(&r, &six_tweets(), &[0, 1, 2]).unwrap();
        assert_eq!((m[0].tp, m[0].fp, m[0].precision), (0, 0, 0.0));
        assert_eq!((m[1].tp, m[1].fp, m[1].fn_, m[1].tn), (2, 1, 2, 1));
        assert_eq!(m[1].precision, 2.0 / 3.0);
        assert_eq!(m[1].recall, 0.5);
        assert_eq!(m[1].f1, 4.0 / 7.0);
        assert_eq!(m[2].tp, 3);
    }

    #[test]
    fn saturation_and_class_requirement() {
        let corpus = six_tweets();
        let all: Vec<Candidate> = corpus
            .tweets()
            .iter()
            .map(|t| Candidate::phrase(t.tokens[0].clone(), t.tokens[1].clone(), 2))
            .collect();
        let m = evaluate_at_k(&ranked(all), &corpus, &[6]).unwrap();
        assert_eq!((m[0].recall, m[0].fpr), (1.0, 1.0));

        let one_class = Corpus::new(vec![tweet(&["a", "b"], Label::Informative)]);
        assert!(evaluate_at_k(&[], &one_class, &[0]).is_err());
        assert!(evaluate_at_k(&[], &six_tweets(), &[2, 1]).is_err());
    }

    #[test]
    fn unlabeled_tweets_are_ignored() {
        let mut tweets = six_tweets().into_tweets();
        tweets.push(tweet(&["power", "outage"], Label::Unlabeled));
        let index = MatchIndex::build(&Corpus::new(tweets));
        assert_eq!(index.len(), 6);
    }

    #[test]
    fn roc_examples() {
        let single = MetricsPoint {
            fpr: 0.2,
            tpr: 0.8,
            ..MetricsPoint::from_counts(1, 0, 0, 0, 0)
        };
        let pts = roc_points(&[single]);
        assert_eq!(pts, [(0.0, 0.0), (0.2, 0.8), (1.0, 1.0)]);
        assert!((auc(&pts) - 0.8).abs() < 1e-12);
        let flat = MetricsPoint::from_counts(0, 0, 0, 3, 3);
        assert!((auc(&roc_points(&[flat, flat])) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn csv_round_trip() {
        let r = ranked(vec![Candidate::noun_verb("power", "outage", 3)]);
        let m = evaluate_at_k(&r, &six_tweets(), &[0, 1]).unwrap();
        let mut buf = Vec::new();
        write_metrics_csv(&m, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("k,tp,fp,fn,tn,precision,recall,f1,fpr,tpr\n"));
        assert_eq!(read_metrics_csv(buf.as_slice()).unwrap(), m);
    }

    const WORDS: [&str; 6] = ["aaa", "bbb", "ccc", "ddd", "eee", "fff"];

    fn arb_fixture() -> impl Strategy<Value = (Corpus, Vec<RankedCandidate>)> {
        let tweets = prop::collection::vec(
            (prop::collection::vec(0..6usize, 0..6), any::<bool>()),
            2..20,
        );
        let cands = prop::collection::vec((0..6usize, 0..6usize, any::<bool>()), 0..12);
        (tweets, cands).prop_map(|(tweets, cands)| {
            let mut ts: Vec<Tweet> = tweets
                .into_iter()
                .map(|(toks, inf)| {
                    let toks: Vec<&str> = toks.into_iter().map(|i| WORDS[i]).collect();
                    tweet(
                        &toks,
                        if inf {
                            Label::Informative
                        } else {
                            Label::Uninformative
                        },
                    )
                })
                .collect();
            ts[0].label = Label::Informative;
            ts[1].label = Label::Uninformative;
            let cs = cands
                .into_iter()
                .map(|(a, b, nv)| {
                    if nv {
                        Candidate::noun_verb(WORDS[a], WORDS[b], 2)
                    } else {
                        Candidate::phrase(WORDS[a], WORDS[b], 2)
                    }
                })
                .collect();
            (Corpus::new(ts), ranked(cs))
        })
    }

    proptest! {
        #[test]
        fn monotone_and_conserving((corpus, r) in arb_fixture()) {
            let m = evaluate_at_k(&r, &corpus, &full_sweep(r.len())).unwrap();
            for w in m.windows(2) {
                prop_assert!(w[0].tp <= w[1].tp && w[0].fp <= w[1].fp);
            }
            for p in &m {
                prop_assert_eq!(p.tp + p.fn_, m[0].tp + m[0].fn_);
                prop_assert_eq!(p.fp + p.tn, m[0].fp + m[0].tn);
            }
        }

        #[test]
        fn full_cut_equals_double_loop((corpus, r) in arb_fixture()) {
            let m = evaluate_at_k(&r, &corpus, &[r.len()]).unwrap();
            let (mut tp, mut fp) = (0, 0);
            for t in corpus.tweets() {
                if r.iter().any(|c| tweet_matches(t, &c.candidate)) {
                    if t.label == Label::Informative { tp += 1 } else { fp += 1 }
                }
            }
            prop_assert_eq!((m[0].tp, m[0].fp), (tp, fp));
        }
    }
}
