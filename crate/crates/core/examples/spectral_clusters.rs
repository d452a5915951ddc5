//! Spectral clustering on a noisy three-block affinity, then on ranked candidates.
//!
//! cargo run --example spectral_clusters

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use subevent::cluster::{
    adjusted_rand_index, cluster_ranked, eig_topk, spectral_cluster, AffinityMatrix,
    SpectralConfig, SymmetricMatrix,
};
use subevent::corpus::Stopwords;
use subevent::extract::{extract_corpus, filter_candidates, PhraseConfig, DEFAULT_NV_WINDOW};
use subevent::rank::{rank_candidates, Ontology};
use subevent::synth::{generate, SynthConfig};

fn main() -> subevent::Result<()> {
    let sizes = [10, 15, 20];
    let truth: Vec<usize> = sizes
        .iter()
        .enumerate()
        .flat_map(|(b, &s)| vec![b; s])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = truth.len();
    let noise: Vec<f64> = (0..n * n).map(|_| rng.random_range(0.0..0.15)).collect();
    let m = SymmetricMatrix::from_fn(n, |i, j| match (i == j, truth[i] == truth[j]) {
        (true, _) => 0.0,
        (false, true) => 0.8 + noise[i * n + j],
        (false, false) => noise[i * n + j],
    });
    let eig: Vec<String> = eig_topk(&m, 4)?
        .iter()
        .map(|p| format!("{:.3}", p.value))
        .collect();
    println!("leading eigenvalues of the affinity: {}", eig.join(", "));
    let a = AffinityMatrix::from_matrix(m)?;
    let got = spectral_cluster(&a, 3, 0)?;
    println!(
        "ARI against the planted blocks: {:.3}",
        adjusted_rand_index(&got.labels, &truth)
    );

    let world = generate(&SynthConfig::fixture(3))?;
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
    let ranked = rank_candidates(&set, &Ontology::bundled(&world.store)?, &world.store);
    let (clusters, _) = cluster_ranked(&ranked, &world.store, 40, &SpectralConfig::new(6, 0))?;
    for c in clusters {
        let members: Vec<String> = c
            .members
            .iter()
            .map(|m| format!("{} {}", m.first, m.second))
            .collect();
        println!(
            "cluster {} [medoid {} {}]: {}",
            c.cluster_id,
            c.medoid.first,
            c.medoid.second,
            members.join(", ")
        );
    }
    Ok(())
}
