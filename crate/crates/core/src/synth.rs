//! Deterministic synthetic crisis corpora with a matching embedding space.
//!
//! Informative tweets carry noun-verb pairs whose word vectors sit close to an ontology term;
//! uninformative tweets carry pairs with unrelated vectors. Both classes share filler words,
//! stopwords, hashtags and mentions, and have the same shape, so any ranking that ignores the
//! embeddings retrieves both classes at the same rate.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::corpus::{
    write_conllu_sentence, write_corpus, Corpus, DependencyParse, Label, ParseNode, Stopwords,
    Tweet,
};
use crate::embed::EmbeddingStore;
use crate::error::{Error, Result};
use crate::extract::{PosLexicon, PosTags};
use crate::rank::bundled_terms;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub dim: usize,
    /// Distinct noun-verb pairs per class.
    pub pairs_per_class: usize,
    pub informative: usize,
    pub uninformative: usize,
    pub unlabeled: usize,
    /// Filler vocabulary shared by both classes.
    pub fillers: usize,
    /// Probability that a tweet carries a pair from the other class instead of its own.
    pub crossover: f64,
    /// Standard deviation-like spread of signal words around their ontology term.
    pub spread: f64,
    /// Share of unlabeled tweets written without a dependency parse.
    pub unparsed_share: f64,
    /// Probability that a tweet carries a fresh pair seen nowhere else.
    pub one_off: f64,
}

impl SynthConfig {
    /// 200 tweets: 80 informative, 80 uninformative, 40 unlabeled.
    pub fn fixture(seed: u64) -> Self {
        SynthConfig {
            seed,
            dim: 32,
            pairs_per_class: 16,
            informative: 80,
            uninformative: 80,
            unlabeled: 40,
            fillers: 60,
            crossover: 0.1,
            spread: 0.35,
            unparsed_share: 0.25,
            one_off: 0.15,
        }
    }

    /// A larger balanced labeled corpus for retrieval experiments.
    pub fn balanced(seed: u64) -> Self {
        SynthConfig {
            pairs_per_class: 30,
            informative: 300,
            uninformative: 300,
            unlabeled: 0,
            fillers: 120,
            crossover: 0.05,
            one_off: 0.05,
            ..SynthConfig::fixture(seed)
        }
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticWorld {
    pub labeled: Corpus,
    pub unlabeled: Corpus,
    pub store: EmbeddingStore,
    pub ontology: Vec<String>,
    pub lexicon: PosLexicon,
    /// Pairs planted in informative tweets.
    pub signal_pairs: Vec<(String, String)>,
    /// Pairs planted in uninformative tweets.
    pub noise_pairs: Vec<(String, String)>,
}

const CONSONANTS: &[u8] = b"bdfgklmnprstvz";
const VOWELS: &[u8] = b"aeiou";
const STOPWORDS: &[&str] = &["the", "and", "in", "of", "is", "our", "all", "this"];

fn pseudo_word(rng: &mut impl Rng, taken: &mut HashSet<String>) -> String {
    let stopwords = Stopwords::english();
    loop {
        let syllables = rng.random_range(2..=3);
        let mut w = String::new();
        for _ in 0..syllables {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
            w.push(*VOWELS.choose(rng).unwrap() as char);
        }
        if rng.random_bool(0.5) {
            w.push(*CONSONANTS.choose(rng).unwrap() as char);
        }
        if !stopwords.contains(&w) && taken.insert(w.clone()) {
            return w;
        }
    }
}

fn random_unit(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn near(rng: &mut impl Rng, centre: &[f64], spread: f64) -> Vec<f64> {
    let noise = random_unit(rng, centre.len());
    centre
        .iter()
        .zip(noise)
        .map(|(c, e)| c + spread * e)
        .collect()
}

fn term_centre(term: &str, store: &EmbeddingStore) -> Vec<f64> {
    let mut sum = vec![0.0; store.dim()];
    for w in term.split_whitespace() {
        if let Some(v) = store.get(w) {
            sum.iter_mut().zip(v).for_each(|(s, x)| *s += x);
        }
    }
    let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
    sum.into_iter().map(|x| x / norm).collect()
}

struct Token {
    surface: String,
    upos: &'static str,
}

fn build_tweet(
    rng: &mut impl Rng,
    id: String,
    label: Label,
    pair: &(String, String),
    fillers: &[String],
) -> (Tweet, DependencyParse) {
    let mut tokens: Vec<Token> = Vec::new();
    let lead = rng.random_range(0..=2);
    for _ in 0..lead {
        tokens.push(Token {
            surface: fillers.choose(rng).unwrap().clone(),
            upos: "ADJ",
        });
    }
    if rng.random_bool(0.5) {
        tokens.push(Token {
            surface: STOPWORDS.choose(rng).unwrap().to_string(),
            upos: "DET",
        });
    }
    let noun_at = tokens.len();
    tokens.push(Token {
        surface: pair.0.clone(),
        upos: "NOUN",
    });
    let gap = usize::from(rng.random_bool(0.35));
    if gap == 1 {
        tokens.push(Token {
            surface: fillers.choose(rng).unwrap().clone(),
            upos: "ADJ",
        });
    }
    tokens.push(Token {
        surface: pair.1.clone(),
        upos: "VERB",
    });
    for _ in 0..rng.random_range(1..=3) {
        tokens.push(Token {
            surface: fillers.choose(rng).unwrap().clone(),
            upos: "ADJ",
        });
    }
    if rng.random_bool(0.3) {
        tokens.push(Token {
            surface: format!("#{}", fillers.choose(rng).unwrap()),
            upos: "X",
        });
    }
    if rng.random_bool(0.2) {
        tokens.insert(
            0,
            Token {
                surface: format!("@{}", fillers.choose(rng).unwrap()),
                upos: "PROPN",
            },
        );
    }
    let noun_idx = noun_at + usize::from(tokens[0].surface.starts_with('@'));
    let verb_idx = noun_idx + 1 + gap;
    if rng.random_bool(0.3) {
        let t = &mut tokens[noun_idx];
        let mut chars = t.surface.chars();
        let first = chars.next().unwrap().to_uppercase().collect::<String>();
        t.surface = first + chars.as_str();
    }
    if rng.random_bool(0.3) {
        tokens.last_mut().unwrap().surface.push('!');
    }

    // The verb is the root; everything else hangs off it.
    let nodes: Vec<ParseNode> = tokens
        .iter()
        .enumerate()
        .map(|(i, t)| ParseNode {
            index: i + 1,
            surface: t.surface.clone(),
            upos: t.upos.to_string(),
            head: if i == verb_idx { 0 } else { verb_idx + 1 },
        })
        .collect();
    let text = tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ");
    let parse = DependencyParse::new(nodes).expect("synthetic parse is a valid tree");
    (Tweet::new(id, text, label), parse)
}

/// Builds a synthetic world from `cfg`; identical configs give identical worlds.
pub fn generate(cfg: &SynthConfig) -> Result<SyntheticWorld> {
    if cfg.pairs_per_class == 0 || cfg.fillers == 0 || cfg.dim == 0 {
        return Err(Error::InvalidArgument(
            "synthetic config needs pairs, fillers and dim > 0".into(),
        ));
    }
    if [cfg.crossover, cfg.unparsed_share, cfg.one_off]
        .iter()
        .any(|p| !(0.0..=1.0).contains(p))
    {
        return Err(Error::InvalidArgument(
            "probabilities must lie in [0, 1]".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let ontology = bundled_terms();
    let mut store = EmbeddingStore::new(cfg.dim)?;
    let mut taken: HashSet<String> = HashSet::new();
    for term in &ontology {
        for w in term.split_whitespace() {
            if taken.insert(w.to_string()) {
                store.insert(w, &random_unit(&mut rng, cfg.dim))?;
            }
        }
    }
    taken.extend(STOPWORDS.iter().map(|s| s.to_string()));

    let mut lexicon = PosLexicon::default();
    let mut signal_pairs = Vec::new();
    for i in 0..cfg.pairs_per_class {
        let centre = term_centre(&ontology[i % ontology.len()], &store);
        let noun = pseudo_word(&mut rng, &mut taken);
        let verb = pseudo_word(&mut rng, &mut taken);
        store.insert(&noun, &near(&mut rng, &centre, cfg.spread))?;
        store.insert(&verb, &near(&mut rng, &centre, cfg.spread))?;
        signal_pairs.push((noun, verb));
    }
    let mut noise_pairs = Vec::new();
    for _ in 0..cfg.pairs_per_class {
        let noun = pseudo_word(&mut rng, &mut taken);
        let verb = pseudo_word(&mut rng, &mut taken);
        store.insert(&noun, &random_unit(&mut rng, cfg.dim))?;
        store.insert(&verb, &random_unit(&mut rng, cfg.dim))?;
        noise_pairs.push((noun, verb));
    }
    for (n, v) in signal_pairs.iter().chain(&noise_pairs) {
        lexicon.insert(
            n,
            PosTags {
                noun: true,
                verb: false,
            },
        );
        lexicon.insert(
            v,
            PosTags {
                noun: false,
                verb: true,
            },
        );
    }
    let fillers: Vec<String> = (0..cfg.fillers)
        .map(|_| {
            let w = pseudo_word(&mut rng, &mut taken);
            store.insert(&w, &random_unit(&mut rng, cfg.dim)).map(|_| w)
        })
        .collect::<Result<_>>()?;

    let mut labeled = Vec::new();
    let mut unlabeled = Vec::new();
    let plan = std::iter::repeat_n(Label::Informative, cfg.informative)
        .chain(std::iter::repeat_n(Label::Uninformative, cfg.uninformative))
        .chain(std::iter::repeat_n(Label::Unlabeled, cfg.unlabeled));
    let mut plan: Vec<Label> = plan.collect();
    // Interleave classes deterministically so file order carries no label signal.
    for i in (1..plan.len()).rev() {
        let j = rng.random_range(0..=i);
        plan.swap(i, j);
    }
    for (i, label) in plan.into_iter().enumerate() {
        let own_signal = match label {
            Label::Informative => true,
            Label::Uninformative => false,
            Label::Unlabeled => rng.random_bool(0.5),
        };
        let signal = if rng.random_bool(cfg.crossover) {
            !own_signal
        } else {
            own_signal
        };
        let pair = if rng.random_bool(cfg.one_off) {
            let noun = pseudo_word(&mut rng, &mut taken);
            let verb = pseudo_word(&mut rng, &mut taken);
            store.insert(&noun, &random_unit(&mut rng, cfg.dim))?;
            store.insert(&verb, &random_unit(&mut rng, cfg.dim))?;
            (noun, verb)
        } else {
            let pool = if signal { &signal_pairs } else { &noise_pairs };
            pool.choose(&mut rng).unwrap().clone()
        };
        let (mut tweet, parse) = build_tweet(&mut rng, format!("t{i:05}"), label, &pair, &fillers);
        if label == Label::Unlabeled {
            if !rng.random_bool(cfg.unparsed_share) {
                tweet.parse = Some(parse);
            }
            unlabeled.push(tweet);
        } else {
            tweet.parse = Some(parse);
            labeled.push(tweet);
        }
    }

    Ok(SyntheticWorld {
        labeled: Corpus::new(labeled),
        unlabeled: Corpus::new(unlabeled),
        store,
        ontology,
        lexicon,
        signal_pairs,
        noise_pairs,
    })
}

impl SyntheticWorld {
    /// All parses, keyed by tweet id.
    pub fn parses(&self) -> BTreeMap<String, DependencyParse> {
        self.labeled
            .tweets()
            .iter()
            .chain(self.unlabeled.tweets())
            .filter_map(|t| t.parse.clone().map(|p| (t.id.clone(), p)))
            .collect()
    }

    /// Writes `labeled.jsonl`, `unlabeled.jsonl`, `parses.conllu`, `vectors.txt`,
    /// `ontology.txt` and `lexicon.tsv` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let put = |name: &str, bytes: &[u8]| {
            let path = dir.join(name);
            fs::write(&path, bytes).map_err(|e| Error::io(path, e))
        };
        let mut buf = Vec::new();
        write_corpus(&self.labeled, &mut buf)
            .map_err(|e| Error::io(dir.join("labeled.jsonl"), e))?;
        put("labeled.jsonl", &buf)?;
        buf.clear();
        write_corpus(&self.unlabeled, &mut buf)
            .map_err(|e| Error::io(dir.join("unlabeled.jsonl"), e))?;
        put("unlabeled.jsonl", &buf)?;

        let mut conllu = String::new();
        for (id, parse) in self.parses() {
            write_conllu_sentence(&mut conllu, &id, &parse);
        }
        put("parses.conllu", conllu.as_bytes())?;

        buf.clear();
        self.store
            .write_text(&mut buf)
            .map_err(|e| Error::io(dir.join("vectors.txt"), e))?;
        put("vectors.txt", &buf)?;

        let mut terms = self.ontology.join("\n");
        terms.push('\n');
        put("ontology.txt", terms.as_bytes())?;

        let mut lex = String::from("# word\ttags\n");
        for (n, v) in self.signal_pairs.iter().chain(&self.noise_pairs) {
            let _ = writeln!(lex, "{n}\tN");
            let _ = writeln!(lex, "{v}\tV");
        }
        put("lexicon.tsv", lex.as_bytes())
    }
}
