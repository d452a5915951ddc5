//! Writes a synthetic corpus to a scratch directory and runs every stage through the
//! file-based pipeline, printing the manifest.
//!
//! cargo run --example end_to_end

use subevent::pipeline::{cmd_pipeline, Paths, PipelineConfig};
use subevent::synth::{generate, SynthConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = tempfile::tempdir()?;
    let root = dir.path();
    generate(&SynthConfig::fixture(42))?.write_to(root)?;

    let mut cfg = PipelineConfig {
        paths: Paths {
            corpus_labeled: Some(root.join("labeled.jsonl")),
            corpus_unlabeled: Some(root.join("unlabeled.jsonl")),
            parses: Some(root.join("parses.conllu")),
            lexicon: Some(root.join("lexicon.tsv")),
            vectors: Some(root.join("vectors.txt")),
            ontology: Some(root.join("ontology.txt")),
            stopwords: None,
            out_dir: root.join("out"),
        },
        ..PipelineConfig::default()
    };
    cfg.cluster.k = 8;

    let manifest = cmd_pipeline(&cfg)?;
    println!("{}", serde_json::to_string_pretty(&manifest)?);
    print!("{}", std::fs::read_to_string(root.join("out/report.txt"))?);
    Ok(())
}
