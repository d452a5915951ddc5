//! Ranks synthetic candidates against the bundled crisis term list and compares the
//! embedding ranking with the co-occurrence baseline.
//!
//! cargo run --example ontology_ranking

use subevent::corpus::Stopwords;
use subevent::extract::{extract_corpus, filter_candidates, PhraseConfig, DEFAULT_NV_WINDOW};
use subevent::rank::{rank_baseline_overlap, rank_candidates, top_k, Discount, Ontology};
use subevent::synth::{generate, SynthConfig};

fn main() -> subevent::Result<()> {
    let world = generate(&SynthConfig::fixture(5))?;
    let sw = Stopwords::english();
    let corpus = world
        .unlabeled
        .clone()
        .concat(world.labeled.clone())
        .preprocess(&sw);
    let ex = extract_corpus(
        &corpus,
        &sw,
        Some(&world.lexicon),
        DEFAULT_NV_WINDOW,
        &PhraseConfig::default(),
    )?;
    let set = filter_candidates(ex.nv_pairs, ex.phrases, 2);
    println!("{}\n", set.accounting);

    let onto = Ontology::bundled(&world.store)?;
    println!(
        "{} of {} ontology terms usable",
        onto.usable_len(),
        onto.len()
    );
    let signal: Vec<&str> = world.signal_pairs.iter().map(|p| p.0.as_str()).collect();
    let mark = |first: &str| {
        if signal.contains(&first) {
            "planted"
        } else {
            ""
        }
    };

    println!("\nembedding ranking");
    for r in top_k(&rank_candidates(&set, &onto, &world.store), 8) {
        println!(
            "{:>3} {:<20} {:.3} {:<22} {}",
            r.rank,
            r.candidate.text(),
            r.score,
            r.best_term.as_deref().unwrap_or("-"),
            mark(&r.candidate.first)
        );
    }
    println!("\nco-occurrence baseline");
    for r in top_k(&rank_baseline_overlap(&set, &corpus, Discount::Log1p), 8) {
        println!(
            "{:>3} {:<20} {:.3} {}",
            r.rank,
            r.candidate.text(),
            r.score,
            mark(&r.candidate.first)
        );
    }
    Ok(())
}
