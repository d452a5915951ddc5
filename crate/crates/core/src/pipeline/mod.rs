//! Stage commands over on-disk artifacts, plus the end-to-end run and its manifest.
//!
//! Each stage reads the previous stage's files from `paths.out_dir`, so any stage can be
//! re-run on its own.

mod config;

pub use config::{ClusterSection, EvalSection, Paths, PipelineConfig, RankMethod, RankSection};

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{info, warn};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::cluster::{cluster_ranked, ClusterSummary, SpectralConfig};
use crate::corpus::{load_conllu, load_corpus, Corpus, LabelMode, Stopwords};
use crate::embed::{load_vectors, ComposeOptions, EmbeddingStore, OovPolicy, SubwordConfig};
use crate::error::{Error, Result};
use crate::eval::{
    evaluate_with, full_sweep, read_metrics_csv, write_metrics_csv, MatchIndex, MetricsPoint,
};
use crate::extract::{
    extract_corpus, filter_candidates, read_candidates_csv, write_candidates_csv, Accounting,
    CandidateSet, ExtractionCounts, PosLexicon,
};
use crate::rank::{
    load_ontology, rank_baseline_overlap, rank_candidates, read_ranked_csv, write_ranked_csv,
    Ontology, RankedCandidate,
};
use crate::report::{render_svg, render_text};

pub const CANDIDATES_FILE: &str = "candidates.csv";
pub const ACCOUNTING_FILE: &str = "accounting.json";
pub const RANKED_FILE: &str = "ranked.csv";
pub const CLUSTERS_FILE: &str = "clusters.json";
pub const METRICS_FILE: &str = "metrics.csv";
pub const REPORT_SVG_FILE: &str = "report.svg";
pub const REPORT_TEXT_FILE: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn required<'a>(p: &'a Option<PathBuf>, key: &str) -> Result<&'a Path> {
    p.as_deref()
        .ok_or_else(|| Error::Config(format!("paths.{key} is required for this command")))
}

fn stopwords(cfg: &PipelineConfig) -> Result<Stopwords> {
    match &cfg.paths.stopwords {
        Some(p) => Stopwords::load(p),
        None => Ok(Stopwords::english()),
    }
}

fn parses_for(
    cfg: &PipelineConfig,
) -> Result<Option<BTreeMap<String, crate::corpus::DependencyParse>>> {
    cfg.paths.parses.as_deref().map(load_conllu).transpose()
}

fn prepare(corpus: Corpus, cfg: &PipelineConfig, sw: &Stopwords) -> Corpus {
    let corpus = if cfg.dedupe { corpus.dedupe() } else { corpus };
    corpus.preprocess(sw)
}

/// The labeled corpus, preprocessed, as used for evaluation and the baseline ranker.
pub fn load_labeled(cfg: &PipelineConfig) -> Result<Corpus> {
    let path = required(&cfg.paths.corpus_labeled, "corpus_labeled")?;
    let sw = stopwords(cfg)?;
    Ok(prepare(load_corpus(path, LabelMode::Labeled)?, cfg, &sw))
}

/// Unlabeled followed by labeled tweets, preprocessed, with parses attached.
pub fn load_combined(cfg: &PipelineConfig) -> Result<Corpus> {
    let p = &cfg.paths;
    if p.corpus_labeled.is_none() && p.corpus_unlabeled.is_none() {
        return Err(Error::Config(
            "no corpus configured; set paths.corpus_labeled and/or paths.corpus_unlabeled".into(),
        ));
    }
    let mut corpus = Corpus::new(Vec::new());
    if let Some(u) = &p.corpus_unlabeled {
        corpus = corpus.concat(load_corpus(u, LabelMode::Unlabeled)?);
    }
    if let Some(l) = &p.corpus_labeled {
        corpus = corpus.concat(load_corpus(l, LabelMode::Labeled)?);
    }
    let sw = stopwords(cfg)?;
    let mut corpus = prepare(corpus, cfg, &sw);
    if let Some(parses) = parses_for(cfg)? {
        let attached = corpus.attach_parses(&parses);
        info!("attached {attached} of {} parses", parses.len());
    }
    Ok(corpus)
}

pub fn load_store(cfg: &PipelineConfig) -> Result<EmbeddingStore> {
    let path = required(&cfg.paths.vectors, "vectors")?;
    let (store, report) = load_vectors(path)?;
    if report.rejected_rows > 0 || report.duplicate_words > 0 {
        warn!(
            "{}: {} rows rejected, {} duplicate words ignored",
            path.display(),
            report.rejected_rows,
            report.duplicate_words
        );
    }
    let options = ComposeOptions {
        oov_policy: cfg.rank.oov_policy,
        normalize_words: cfg.rank.normalize_words,
        subword: (cfg.rank.oov_policy == OovPolicy::SubwordHash).then(|| SubwordConfig {
            seed: cfg.cluster.seed,
            ..SubwordConfig::default()
        }),
    };
    Ok(store.with_options(options))
}

pub fn load_terms(cfg: &PipelineConfig, store: &EmbeddingStore) -> Result<Ontology> {
    match &cfg.paths.ontology {
        Some(p) => load_ontology(p, store),
        None => Ontology::bundled(store),
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ExtractSummary {
    pub accounting: Accounting,
    pub counts: ExtractionCounts,
}

/// Extracts and filters candidates, writing `candidates.csv` and `accounting.json`.
pub fn cmd_extract(cfg: &PipelineConfig) -> Result<ExtractSummary> {
    cfg.validate()?;
    if cfg.paths.parses.is_none() && cfg.paths.lexicon.is_none() {
        return Err(Error::Config(
            "no noun-verb source: set paths.parses to a CoNLL-U file, or paths.lexicon to a \
             word<TAB>tags lexicon (data/pos_lexicon.tsv is a small bundled one)"
                .into(),
        ));
    }
    let corpus = load_combined(cfg)?;
    let lexicon = cfg
        .paths
        .lexicon
        .as_deref()
        .map(PosLexicon::load)
        .transpose()?;
    let sw = stopwords(cfg)?;
    let extraction = extract_corpus(&corpus, &sw, lexicon.as_ref(), cfg.nv_window, &cfg.phrase)?;
    if extraction.counts.no_nv_source > 0 {
        warn!(
            "{} tweets have neither a parse nor a lexicon; they contribute phrases only",
            extraction.counts.no_nv_source
        );
    }
    let set = filter_candidates(extraction.nv_pairs, extraction.phrases, cfg.filter_min_freq);
    let out = &cfg.paths.out_dir;
    let mut buf = Vec::new();
    write_candidates_csv(&set.candidates, &mut buf)?;
    write_file(&out.join(CANDIDATES_FILE), &buf)?;
    let summary = ExtractSummary {
        accounting: set.accounting,
        counts: extraction.counts,
    };
    let mut json = serde_json::to_string_pretty(&summary).expect("summary serializes");
    json.push('\n');
    write_file(&out.join(ACCOUNTING_FILE), json.as_bytes())?;
    Ok(summary)
}

fn read_candidates(cfg: &PipelineConfig) -> Result<CandidateSet> {
    let path = cfg.paths.out_dir.join(CANDIDATES_FILE);
    let bytes = read_file(&path)?;
    Ok(CandidateSet::from_candidates(read_candidates_csv(
        bytes.as_slice(),
    )?))
}

fn read_ranked(cfg: &PipelineConfig) -> Result<Vec<RankedCandidate>> {
    let path = cfg.paths.out_dir.join(RANKED_FILE);
    read_ranked_csv(read_file(&path)?.as_slice())
}

/// Ranks `candidates.csv` into `ranked.csv`.
pub fn cmd_rank(cfg: &PipelineConfig) -> Result<Vec<RankedCandidate>> {
    cfg.validate()?;
    let set = read_candidates(cfg)?;
    let ranked = match cfg.rank.method {
        RankMethod::Moac => {
            let store = load_store(cfg)?;
            let onto = load_terms(cfg, &store)?;
            info!(
                "ontology: {} of {} terms usable",
                onto.usable_len(),
                onto.len()
            );
            rank_candidates(&set, &onto, &store)
        }
        RankMethod::Baseline => {
            rank_baseline_overlap(&set, &load_combined(cfg)?, cfg.rank.discount)
        }
    };
    let mut buf = Vec::new();
    write_ranked_csv(&ranked, &mut buf)?;
    write_file(&cfg.paths.out_dir.join(RANKED_FILE), &buf)?;
    Ok(ranked)
}

/// Clusters the top of `ranked.csv` into `clusters.json`.
pub fn cmd_cluster(cfg: &PipelineConfig) -> Result<Vec<ClusterSummary>> {
    cfg.validate()?;
    let ranked = read_ranked(cfg)?;
    let store = load_store(cfg)?;
    let spectral = SpectralConfig {
        laplacian: cfg.cluster.laplacian,
        ..SpectralConfig::new(cfg.cluster.k, cfg.cluster.seed)
    };
    let (summaries, _) = cluster_ranked(&ranked, &store, cfg.cluster.top_m, &spectral)?;
    let mut json = serde_json::to_string_pretty(&summaries).expect("clusters serialize");
    json.push('\n');
    write_file(&cfg.paths.out_dir.join(CLUSTERS_FILE), json.as_bytes())?;
    Ok(summaries)
}

/// Scores `ranked.csv` against the labeled corpus into `metrics.csv`.
pub fn cmd_evaluate(cfg: &PipelineConfig) -> Result<Vec<MetricsPoint>> {
    cfg.validate()?;
    let ranked = read_ranked(cfg)?;
    let labeled = load_labeled(cfg)?;
    let ks = cfg
        .eval
        .ks
        .clone()
        .unwrap_or_else(|| full_sweep(ranked.len()));
    let metrics = evaluate_with(
        &ranked,
        &MatchIndex::build(&labeled),
        &ks,
        &cfg.eval.policy(),
    )?;
    let mut buf = Vec::new();
    write_metrics_csv(&metrics, &mut buf)?;
    write_file(&cfg.paths.out_dir.join(METRICS_FILE), &buf)?;
    Ok(metrics)
}

/// Renders `metrics.csv` into `report.svg` and `report.txt`; returns the text report.
pub fn cmd_report(cfg: &PipelineConfig) -> Result<String> {
    let out = &cfg.paths.out_dir;
    let metrics = read_metrics_csv(read_file(&out.join(METRICS_FILE))?.as_slice())?;
    write_file(&out.join(REPORT_SVG_FILE), render_svg(&metrics).as_bytes())?;
    let text = render_text(&metrics);
    write_file(&out.join(REPORT_TEXT_FILE), text.as_bytes())?;
    Ok(text)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub name: String,
    pub status: String,
    pub seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub status: String,
    pub config: PipelineConfig,
    pub inputs: BTreeMap<String, FileRecord>,
    pub stages: Vec<StageRecord>,
    pub artifacts: BTreeMap<String, FileRecord>,
    pub wall_seconds: f64,
    pub accounting: Option<Accounting>,
}

impl RunManifest {
    fn new(cfg: &PipelineConfig) -> Self {
        RunManifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            status: "running".into(),
            config: cfg.clone(),
            inputs: BTreeMap::new(),
            stages: Vec::new(),
            artifacts: BTreeMap::new(),
            wall_seconds: 0.0,
            accounting: None,
        }
    }

    pub fn completed_stages(&self) -> usize {
        self.stages
            .iter()
            .filter(|s| s.status == "completed")
            .count()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = read_file(path)?;
        serde_json::from_slice(&bytes)
            .map_err(|e| Error::format(path.display().to_string(), e.to_string()))
    }
}

fn record_inputs(cfg: &PipelineConfig, manifest: &mut RunManifest) -> Result<()> {
    let p = &cfg.paths;
    for (name, path) in [
        ("corpus_labeled", &p.corpus_labeled),
        ("corpus_unlabeled", &p.corpus_unlabeled),
        ("parses", &p.parses),
        ("vectors", &p.vectors),
        ("ontology", &p.ontology),
        ("stopwords", &p.stopwords),
        ("lexicon", &p.lexicon),
    ] {
        if let Some(path) = path {
            let bytes = read_file(path)?;
            manifest.inputs.insert(
                name.into(),
                FileRecord {
                    path: path.clone(),
                    sha256: sha256_hex(&bytes),
                },
            );
        }
    }
    Ok(())
}

fn record_artifacts(out: &Path, manifest: &mut RunManifest) {
    for name in [
        CANDIDATES_FILE,
        ACCOUNTING_FILE,
        RANKED_FILE,
        CLUSTERS_FILE,
        METRICS_FILE,
        REPORT_SVG_FILE,
        REPORT_TEXT_FILE,
    ] {
        let path = out.join(name);
        if let Ok(bytes) = fs::read(&path) {
            manifest.artifacts.insert(
                name.into(),
                FileRecord {
                    sha256: sha256_hex(&bytes),
                    path,
                },
            );
        }
    }
}

fn run_stage<T>(
    manifest: &mut RunManifest,
    name: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> Result<T> {
    let start = Instant::now();
    info!("stage {name}: start");
    let result = f();
    let seconds = start.elapsed().as_secs_f64();
    manifest.stages.push(StageRecord {
        name: name.into(),
        status: if result.is_ok() {
            "completed"
        } else {
            "failed"
        }
        .into(),
        seconds,
        error: result.as_ref().err().map(|e| e.to_string()),
    });
    info!("stage {name}: {seconds:.3}s");
    result.map_err(|e| e.in_stage(name))
}

fn write_manifest(out: &Path, manifest: &RunManifest) -> Result<()> {
    let mut json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    json.push('\n');
    write_file(&out.join(MANIFEST_FILE), json.as_bytes())
}

/// Runs extract, rank, cluster and evaluate (plus the report files), then writes
/// `manifest.json`. The manifest is written even when a stage fails; artifacts from
/// completed stages stay on disk.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> Result<RunManifest> {
    cfg.validate()?;
    let start = Instant::now();
    let out = cfg.paths.out_dir.clone();
    let mut manifest = RunManifest::new(cfg);
    let result = (|| -> Result<()> {
        record_inputs(cfg, &mut manifest)?;
        let summary = run_stage(&mut manifest, "extract", || cmd_extract(cfg))?;
        manifest.accounting = Some(summary.accounting);
        run_stage(&mut manifest, "rank", || cmd_rank(cfg))?;
        run_stage(&mut manifest, "cluster", || cmd_cluster(cfg))?;
        run_stage(&mut manifest, "evaluate", || {
            cmd_evaluate(cfg)?;
            cmd_report(cfg)
        })?;
        Ok(())
    })();
    manifest.wall_seconds = start.elapsed().as_secs_f64();
    manifest.status = if result.is_ok() {
        "completed"
    } else {
        "failed"
    }
    .into();
    record_artifacts(&out, &mut manifest);
    write_manifest(&out, &manifest)?;
    result.map(|_| manifest)
}

/// Runs `f` on a dedicated pool of `threads` workers (the global pool when `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::Config("--threads must be at least 1".into())),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::Config(format!("cannot start {n} threads: {e}")))?;
            Ok(pool.install(f))
        }
    }
}
