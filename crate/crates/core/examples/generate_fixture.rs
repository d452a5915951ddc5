//! Regenerates the bundled 200-tweet fixture and its golden accounting.
//!
//! cargo run --example generate_fixture -- [out_dir] [seed]

use std::path::PathBuf;

use subevent::pipeline::{cmd_extract, PipelineConfig};
use subevent::synth::{generate, SynthConfig};

const CONFIG: &str = r#"{
  "paths": {
    "corpus_labeled": "labeled.jsonl",
    "corpus_unlabeled": "unlabeled.jsonl",
    "parses": "parses.conllu",
    "lexicon": "lexicon.tsv",
    "vectors": "vectors.txt",
    "ontology": "ontology.txt",
    "out_dir": "out"
  },
  "cluster": { "k": 8, "top_m": 1000, "seed": 0 }
}
"#;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let dir = args
        .next()
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/fixture"));
    let seed: u64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(2017);

    let world = generate(&SynthConfig::fixture(seed))?;
    world.write_to(&dir)?;
    std::fs::write(dir.join("pipeline.json"), CONFIG)?;

    let scratch = tempfile::tempdir()?;
    let cfg = PipelineConfig::load(&dir.join("pipeline.json"))?
        .with_overrides(&[format!("paths.out_dir={}", scratch.path().display())])?;
    let summary = cmd_extract(&cfg)?;
    std::fs::write(
        dir.join("golden_accounting.json"),
        serde_json::to_string_pretty(&summary.accounting)? + "\n",
    )?;
    println!("wrote fixture (seed {seed}) to {}", dir.display());
    println!("{}", summary.accounting);
    Ok(())
}
