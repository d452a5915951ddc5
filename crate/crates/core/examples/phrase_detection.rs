//! Collocation scoring on a toy corpus: how the count threshold and vocabulary size move
//! a bigram across the emission threshold.
//!
//! cargo run --example phrase_detection

use subevent::corpus::{Corpus, Label, Tweet};
use subevent::extract::{mikolov_score, PhraseConfig, PhraseStats};

fn tweet(id: usize, tokens: &[&str]) -> Tweet {
    let mut t = Tweet::new(id.to_string(), tokens.join(" "), Label::Unlabeled);
    t.tokens = tokens.iter().map(|s| s.to_string()).collect();
    t
}

fn main() {
    let mut tweets = Vec::new();
    for i in 0..5 {
        tweets.push(tweet(i, &["power", "outage", "downtown"]));
    }
    tweets.push(tweet(5, &["power", "lines", "down"]));
    tweets.push(tweet(6, &["outage", "map", "updated"]));
    let corpus = Corpus::new(tweets);
    let stats = PhraseStats::from_corpus(&corpus);
    println!("vocabulary size {}", stats.vocab_size());

    for (a, b) in [
        ("power", "outage"),
        ("outage", "downtown"),
        ("power", "lines"),
    ] {
        println!(
            "{a} {b}: count {} score {:.3}",
            stats.bigram_count(a, b),
            stats.score(a, b, 2)
        );
    }
    for threshold in [0.5, 1.0, 10.0] {
        let cfg = PhraseConfig {
            min_count: 2,
            threshold,
        };
        let found: Vec<String> = stats.phrases(&cfg).iter().map(|c| c.text()).collect();
        println!("threshold {threshold}: {found:?}");
    }

    // Same counts, two vocabulary sizes.
    println!("V=6:   {:.2}", mikolov_score(5, 5, 5, 6, 2));
    println!("V=100: {:.2}", mikolov_score(5, 5, 5, 100, 2));
}
