//! The single-tweet walkthrough: parse-based noun-verb pairs, phrase detection over a small
//! corpus, and ontology ranking with hand-placed vectors.
//!
//! cargo run --example worked_example

use std::path::PathBuf;

use subevent::corpus::{load_conllu, load_corpus, LabelMode, Stopwords};
use subevent::embed::load_vectors;
use subevent::extract::{detect_phrases, extract_nv_pairs, filter_candidates, PhraseConfig};
use subevent::rank::{load_ontology, rank_candidates};

fn main() -> subevent::Result<()> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/worked_example");
    let sw = Stopwords::english();
    let mut corpus = load_corpus(&dir.join("tweets.jsonl"), LabelMode::Labeled)?.preprocess(&sw);
    corpus.attach_parses(&load_conllu(&dir.join("parses.conllu"))?);

    let tweet = &corpus.tweets()[0];
    println!("tweet:  {}", tweet.raw_text);
    println!("tokens: {:?}", tweet.tokens);
    let pairs = extract_nv_pairs(tweet, &sw)?;
    for p in &pairs {
        println!("noun-verb pair: {p}");
    }

    let phrases = detect_phrases(&corpus, &PhraseConfig::default());
    for p in &phrases {
        println!("phrase: {p} (seen {} times)", p.frequency);
    }

    let (store, _) = load_vectors(&dir.join("vectors.txt"))?;
    let onto = load_ontology(&dir.join("ontology.txt"), &store)?;
    let set = filter_candidates(pairs, phrases, 1);
    println!(
        "\n{:<4} {:<22} {:>7}  best term",
        "rank", "candidate", "score"
    );
    for r in rank_candidates(&set, &onto, &store) {
        println!(
            "{:<4} {:<22} {:>7.4}  {}",
            r.rank,
            r.candidate.text(),
            r.score,
            r.best_term.as_deref().unwrap_or("-")
        );
    }
    Ok(())
}
