use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::cluster::Laplacian;
use crate::embed::OovPolicy;
use crate::error::{Error, Result};
use crate::eval::{MatchMode, MatchPolicy};
use crate::extract::{PhraseConfig, DEFAULT_MIN_NV_FREQUENCY, DEFAULT_NV_WINDOW};
use crate::rank::Discount;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus_labeled: Option<PathBuf>,
    pub corpus_unlabeled: Option<PathBuf>,
    /// CoNLL-U parses keyed by `# tweet_id`.
    pub parses: Option<PathBuf>,
    pub vectors: Option<PathBuf>,
    /// Ontology terms, one per line; the bundled list when absent.
    pub ontology: Option<PathBuf>,
    /// Stopword list; the bundled English list when absent.
    pub stopwords: Option<PathBuf>,
    /// `word<TAB>tags` lexicon for tweets without a parse.
    pub lexicon: Option<PathBuf>,
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankMethod {
    #[default]
    Moac,
    Baseline,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RankSection {
    pub method: RankMethod,
    pub normalize_words: bool,
    pub oov_policy: OovPolicy,
    /// Baseline co-occurrence discount.
    pub discount: Discount,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterSection {
    pub k: usize,
    pub top_m: usize,
    pub seed: u64,
    pub laplacian: Laplacian,
}

impl Default for ClusterSection {
    fn default() -> Self {
        ClusterSection {
            k: 40,
            top_m: 1000,
            seed: 0,
            laplacian: Laplacian::Normalized,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Cut sizes to evaluate; every k from 0 to the number of candidates when absent.
    pub ks: Option<Vec<usize>>,
    pub noun_verb: MatchMode,
    pub phrase: MatchMode,
}

impl Default for EvalSection {
    fn default() -> Self {
        let p = MatchPolicy::default();
        EvalSection {
            ks: None,
            noun_verb: p.noun_verb,
            phrase: p.phrase,
        }
    }
}

impl EvalSection {
    pub fn policy(&self) -> MatchPolicy {
        MatchPolicy {
            noun_verb: self.noun_verb,
            phrase: self.phrase,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub paths: Paths,
    pub phrase: PhraseConfig,
    pub filter_min_freq: u64,
    pub rank: RankSection,
    pub cluster: ClusterSection,
    pub eval: EvalSection,
    /// Drop exact duplicate tweet texts before extraction.
    pub dedupe: bool,
    /// Lexicon fallback: a noun pairs with a verb fewer than this many tokens after it.
    pub nv_window: usize,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            paths: Paths {
                out_dir: PathBuf::from("out"),
                ..Paths::default()
            },
            phrase: PhraseConfig::default(),
            filter_min_freq: DEFAULT_MIN_NV_FREQUENCY,
            rank: RankSection::default(),
            cluster: ClusterSection::default(),
            eval: EvalSection::default(),
            dedupe: false,
            nv_window: DEFAULT_NV_WINDOW,
        }
    }
}

fn resolve(base: &Path, p: &mut Option<PathBuf>) {
    if let Some(path) = p {
        if path.is_relative() {
            *path = base.join(&*path);
        }
    }
}

impl PipelineConfig {
    pub fn from_json(text: &str, source: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("{source}: {e}")))
    }

    /// Reads a JSON config; relative paths inside it are taken relative to the file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_json(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        let p = &mut cfg.paths;
        for slot in [
            &mut p.corpus_labeled,
            &mut p.corpus_unlabeled,
            &mut p.parses,
            &mut p.vectors,
            &mut p.ontology,
            &mut p.stopwords,
            &mut p.lexicon,
        ] {
            resolve(base, slot);
        }
        if p.out_dir.is_relative() {
            p.out_dir = base.join(&p.out_dir);
        }
        Ok(cfg)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Applies `group.key=value` overrides. Values are parsed as JSON when possible and taken
    /// as plain strings otherwise, so `cluster.k=8` and `paths.out_dir=run1` both work.
    pub fn with_overrides<S: AsRef<str>>(self, overrides: &[S]) -> Result<Self> {
        if overrides.is_empty() {
            return Ok(self);
        }
        let mut tree = serde_json::to_value(&self).expect("config serializes");
        for o in overrides {
            let o = o.as_ref();
            let (key, raw) = o.split_once('=').ok_or_else(|| {
                Error::Config(format!("override `{o}` is not of the form key=value"))
            })?;
            let value =
                serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
            let mut node = &mut tree;
            for part in key.split('.') {
                node = node
                    .as_object_mut()
                    .and_then(|m| m.get_mut(part))
                    .ok_or_else(|| Error::Config(format!("unknown config key `{key}`")))?;
            }
            *node = value;
        }
        serde_json::from_value(tree).map_err(|e| Error::Config(format!("invalid override: {e}")))
    }

    /// Range checks that do not touch the filesystem.
    pub fn validate(&self) -> Result<()> {
        self.phrase.validate()?;
        if self.filter_min_freq == 0 {
            return Err(Error::Config("filter_min_freq must be at least 1".into()));
        }
        if self.nv_window < 2 {
            return Err(Error::Config("nv_window must be at least 2".into()));
        }
        if self.cluster.k < 2 {
            return Err(Error::Config("cluster.k must be at least 2".into()));
        }
        if self.cluster.top_m < self.cluster.k {
            return Err(Error::Config(
                "cluster.top_m must be at least cluster.k".into(),
            ));
        }
        if let Some(ks) = &self.eval.ks {
            if ks.windows(2).any(|w| w[0] > w[1]) {
                return Err(Error::Config("eval.ks must be sorted ascending".into()));
            }
        }
        Ok(())
    }
}
