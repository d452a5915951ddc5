//! F1 at k and ROC for the embedding ranking versus shuffled rankings on a balanced
//! synthetic corpus.
//!
//! cargo run --example retrieval_metrics

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subevent::corpus::Stopwords;
use subevent::eval::{auc, evaluate_at_k, full_sweep, roc_points};
use subevent::extract::{extract_corpus, filter_candidates, PhraseConfig, DEFAULT_NV_WINDOW};
use subevent::rank::{rank_candidates, Ontology};
use subevent::synth::{generate, SynthConfig};

fn main() -> subevent::Result<()> {
    let world = generate(&SynthConfig::balanced(1))?;
    let sw = Stopwords::english();
    let labeled = world.labeled.clone().preprocess(&sw);
    let ex = extract_corpus(
        &labeled,
        &sw,
        None,
        DEFAULT_NV_WINDOW,
        &PhraseConfig::default(),
    )?;
    let set = filter_candidates(ex.nv_pairs, ex.phrases, 2);
    let ranked = rank_candidates(&set, &Ontology::bundled(&world.store)?, &world.store);
    let ks = full_sweep(ranked.len());

    let metrics = evaluate_at_k(&ranked, &labeled, &ks)?;
    println!("{:>4} {:>9} {:>9} {:>9}", "k", "precision", "recall", "f1");
    for m in metrics.iter().step_by(10) {
        println!(
            "{:>4} {:>9.4} {:>9.4} {:>9.4}",
            m.k, m.precision, m.recall, m.f1
        );
    }

    let mut shuffled = ranked.clone();
    let mut aucs = Vec::new();
    for seed in 0..20 {
        shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        aucs.push(auc(&roc_points(&evaluate_at_k(&shuffled, &labeled, &ks)?)));
    }
    let mean = aucs.iter().sum::<f64>() / aucs.len() as f64;
    println!("\nembedding ranking AUC {:.3}", auc(&roc_points(&metrics)));
    println!("shuffled ranking AUC  {mean:.3} (mean of 20)");
    Ok(())
}
