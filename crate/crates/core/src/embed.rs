//! Word vectors in word2vec text format and composition of multiword vectors.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// What to do with words missing from the vocabulary.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OovPolicy {
    /// Unknown words contribute nothing.
    #[default]
    SkipWord,
    /// Unknown words get the average of hashed character n-gram vectors.
    SubwordHash,
}

/// Character n-gram bucket table backing [`OovPolicy::SubwordHash`]. Bucket vectors are drawn
/// lazily from a ChaCha stream keyed by `(seed, bucket)`, so the table never has to be stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubwordConfig {
    pub buckets: u32,
    pub seed: u64,
    pub min_n: usize,
    pub max_n: usize,
}

impl Default for SubwordConfig {
    fn default() -> Self {
        SubwordConfig {
            buckets: 200_000,
            seed: 0,
            min_n: 3,
            max_n: 6,
        }
    }
}

/// 32-bit FNV-1a, the hash fastText uses for character n-grams.
fn fnv1a(bytes: &[u8]) -> u32 {
    let mut h: u32 = 2_166_136_261;
    for &b in bytes {
        h ^= b as u32;
        h = h.wrapping_mul(16_777_619);
    }
    h
}

impl SubwordConfig {
    fn bucket_vector(&self, bucket: u32, dim: usize) -> Vec<f64> {
        let key = self.seed ^ (bucket as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
        let mut rng = ChaCha8Rng::seed_from_u64(key);
        let scale = 1.0 / dim as f64;
        (0..dim).map(|_| rng.random_range(-scale..scale)).collect()
    }

    /// Average of the bucket vectors of the `<word>` character n-grams.
    pub fn word_vector(&self, word: &str, dim: usize) -> Vec<f64> {
        let chars: Vec<char> = format!("<{word}>").chars().collect();
        let mut sum = vec![0.0; dim];
        let mut count = 0usize;
        for n in self.min_n..=self.max_n {
            for gram in chars.windows(n) {
                let s: String = gram.iter().collect();
                let bucket = fnv1a(s.as_bytes()) % self.buckets.max(1);
                for (acc, v) in sum.iter_mut().zip(self.bucket_vector(bucket, dim)) {
                    *acc += v;
                }
                count += 1;
            }
        }
        if count > 0 {
            sum.iter_mut().for_each(|x| *x /= count as f64);
        }
        sum
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComposeOptions {
    pub oov_policy: OovPolicy,
    /// L2-normalize each word vector before summation.
    pub normalize_words: bool,
    pub subword: Option<SubwordConfig>,
}

/// Dense word vectors of a fixed dimension.
#[derive(Debug, Clone)]
pub struct EmbeddingStore {
    dim: usize,
    index: HashMap<String, usize>,
    words: Vec<String>,
    data: Vec<f64>,
    pub options: ComposeOptions,
}

/// Counts reported while loading a vector file.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct LoadReport {
    pub rejected_rows: usize,
    pub duplicate_words: usize,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument(
                "embedding dimension must be positive".into(),
            ));
        }
        Ok(EmbeddingStore {
            dim,
            index: HashMap::new(),
            words: Vec::new(),
            data: Vec::new(),
            options: ComposeOptions::default(),
        })
    }

    pub fn with_options(mut self, options: ComposeOptions) -> Self {
        self.options = options;
        self
    }

    /// Adds a vector; returns `false` (and keeps the existing one) if the word is present.
    pub fn insert(&mut self, word: &str, vector: &[f64]) -> Result<bool> {
        if vector.len() != self.dim {
            return Err(Error::InvalidArgument(format!(
                "vector for `{word}` has {} components, expected {}",
                vector.len(),
                self.dim
            )));
        }
        if vector.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "vector for `{word}` is not finite"
            )));
        }
        if self.index.contains_key(word) {
            return Ok(false);
        }
        self.index.insert(word.to_string(), self.words.len());
        self.words.push(word.to_string());
        self.data.extend_from_slice(vector);
        Ok(true)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index
            .get(word)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    /// Words in insertion order.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Copy with every vector multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|x| *x *= factor);
        out
    }

    /// Writes the word2vec text format.
    pub fn write_text<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "{} {}", self.len(), self.dim)?;
        for (i, w) in self.words.iter().enumerate() {
            write!(out, "{w}")?;
            for x in &self.data[i * self.dim..(i + 1) * self.dim] {
                write!(out, " {x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Parses the word2vec text format: a `<vocab_size> <dim>` header followed by one
/// `<word> <f1> ... <f_dim>` row per word.
///
/// Rows with the wrong arity or non-finite values are rejected with a warning; a repeated
/// word keeps its first vector. The number of rows must match the header.
pub fn parse_vectors(text: &str, source: &str) -> Result<(EmbeddingStore, LoadReport)> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::format(source, "missing `<vocab_size> <dim>` header"))?;
    let fields: Vec<&str> = header.split_whitespace().collect();
    let (vocab, dim) = match fields.as_slice() {
        [v, d] => (
            v.parse::<usize>()
                .map_err(|_| Error::format(source, format!("bad vocabulary size `{v}`")))?,
            d.parse::<usize>()
                .map_err(|_| Error::format(source, format!("bad dimension `{d}`")))?,
        ),
        _ => return Err(Error::format(source, "header must be `<vocab_size> <dim>`")),
    };
    let mut store = EmbeddingStore::new(dim).map_err(|e| Error::format(source, e.to_string()))?;
    let mut report = LoadReport::default();
    let mut rows = 0usize;
    for (lineno, line) in lines {
        rows += 1;
        let mut parts = line.split_whitespace();
        let word = parts.next().unwrap_or_default();
        let values: std::result::Result<Vec<f64>, _> = parts.map(str::parse::<f64>).collect();
        let values = match values {
            Ok(v) if v.len() == dim && v.iter().all(|x| x.is_finite()) => v,
            Ok(v) if v.len() != dim => {
                log::warn!(
                    "{source}:{}: rejecting `{word}`: {} values, expected {dim}",
                    lineno + 1,
                    v.len()
                );
                report.rejected_rows += 1;
                continue;
            }
            _ => {
                log::warn!(
                    "{source}:{}: rejecting `{word}`: unparsable or non-finite values",
                    lineno + 1
                );
                report.rejected_rows += 1;
                continue;
            }
        };
        if !store.insert(word, &values)? {
            log::warn!(
                "{source}:{}: duplicate word `{word}`, keeping the first vector",
                lineno + 1
            );
            report.duplicate_words += 1;
        }
    }
    if rows != vocab {
        return Err(Error::format(
            source,
            format!("header declares {vocab} rows but the file has {rows}"),
        ));
    }
    Ok((store, report))
}

pub fn load_vectors(path: &Path) -> Result<(EmbeddingStore, LoadReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_vectors(&text, &path.display().to_string())
}

/// L2-normalized sum of word vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct ComposedVector {
    pub values: Vec<f64>,
    /// In-vocabulary words that contributed.
    pub n_known: usize,
    pub is_null: bool,
}

impl ComposedVector {
    pub fn null(dim: usize) -> Self {
        ComposedVector {
            values: vec![0.0; dim],
            n_known: 0,
            is_null: true,
        }
    }

    /// Normalizes an arbitrary vector; the zero vector yields a null result.
    pub fn from_sum(sum: Vec<f64>, n_known: usize) -> Self {
        let norm = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return ComposedVector {
                values: vec![0.0; sum.len()],
                n_known,
                is_null: true,
            };
        }
        ComposedVector {
            values: sum.into_iter().map(|x| x / norm).collect(),
            n_known,
            is_null: false,
        }
    }

    pub fn dim(&self) -> usize {
        self.values.len()
    }
}

fn add_scaled(acc: &mut [f64], v: &[f64], normalize: bool) {
    let scale = if normalize {
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n == 0.0 {
            return;
        }
        1.0 / n
    } else {
        1.0
    };
    for (a, x) in acc.iter_mut().zip(v) {
        *a += x * scale;
    }
}

/// Sums the vectors of `words` and normalizes the result to unit length.
pub fn compose<S: AsRef<str>>(words: &[S], store: &EmbeddingStore) -> ComposedVector {
    let opts = store.options;
    let mut sum = vec![0.0; store.dim];
    let mut n_known = 0;
    let mut contributed = 0;
    for w in words {
        let w = w.as_ref();
        if let Some(v) = store.get(w) {
            add_scaled(&mut sum, v, opts.normalize_words);
            n_known += 1;
            contributed += 1;
        } else if opts.oov_policy == OovPolicy::SubwordHash {
            let cfg = opts.subword.unwrap_or_default();
            add_scaled(
                &mut sum,
                &cfg.word_vector(w, store.dim),
                opts.normalize_words,
            );
            contributed += 1;
        }
    }
    if contributed == 0 {
        return ComposedVector::null(store.dim);
    }
    ComposedVector::from_sum(sum, n_known)
}

/// Dot product of two unit vectors.
pub fn cosine(u: &ComposedVector, v: &ComposedVector) -> Result<f64> {
    if u.is_null || v.is_null {
        return Err(Error::NullVector("cosine of a null composed vector".into()));
    }
    if u.dim() != v.dim() {
        return Err(Error::InvalidArgument(format!(
            "dimension mismatch: {} vs {}",
            u.dim(),
            v.dim()
        )));
    }
    Ok(dot(&u.values, &v.values).clamp(-1.0, 1.0))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn store2(words: &[(&str, [f64; 2])]) -> EmbeddingStore {
        let mut s = EmbeddingStore::new(2).unwrap();
        for (w, v) in words {
            s.insert(w, v).unwrap();
        }
        s
    }

    #[test]
    fn loads_small_file() {
        let (s, rep) = parse_vectors("2 3\na 1 0 0\nb 0 1 0\n", "t").unwrap();
        assert_eq!(s.dim(), 3);
        assert_eq!(s.len(), 2);
        assert_eq!(s.get("b").unwrap(), &[0.0, 1.0, 0.0]);
        assert_eq!(rep, LoadReport::default());
    }

    #[test]
    fn short_row_rejected() {
        let (s, rep) = parse_vectors("2 3\na 1 0 0\nc 1 2\n", "t").unwrap();
        assert_eq!(s.len(), 1);
        assert!(!s.contains("c"));
        assert_eq!(rep.rejected_rows, 1);
    }

    #[test]
    fn empty_vocabulary() {
        let (s, _) = parse_vectors("0 3\n", "t").unwrap();
        assert!(s.is_empty());
        assert_eq!(s.dim(), 3);
    }

    #[test]
    fn duplicate_keeps_first() {
        let (s, rep) = parse_vectors("2 2\na 1 0\na 0 1\n", "t").unwrap();
        assert_eq!(s.get("a").unwrap(), &[1.0, 0.0]);
        assert_eq!(rep.duplicate_words, 1);
    }

    #[test]
    fn header_mismatch_is_fatal() {
        assert!(parse_vectors("3 2\na 1 0\n", "t").is_err());
        assert!(parse_vectors("x 2\n", "t").is_err());
        assert!(parse_vectors("", "t").is_err());
        assert!(parse_vectors("1 0\n", "t").is_err());
    }

    #[test]
    fn compose_single_word() {
        let s = store2(&[("a", [3.0, 4.0])]);
        let v = compose(&["a"], &s);
        assert!(!v.is_null);
        assert!((v.values[0] - 0.6).abs() < 1e-15 && (v.values[1] - 0.8).abs() < 1e-15);
        let vv = compose(&["a", "a"], &s);
        assert!((vv.values[0] - 0.6).abs() < 1e-15 && (vv.values[1] - 0.8).abs() < 1e-15);
        assert_eq!(vv.n_known, 2);
    }

    #[test]
    fn all_oov_is_null() {
        let s = store2(&[("a", [3.0, 4.0])]);
        let v = compose(&["zzz_unknown"], &s);
        assert!(v.is_null);
        assert_eq!(v.n_known, 0);
        assert!(cosine(&v, &v).is_err());
    }

    #[test]
    fn cancelling_vectors_are_null() {
        let s = store2(&[("a", [1.0, 0.0]), ("b", [-1.0, 0.0])]);
        assert!(compose(&["a", "b"], &s).is_null);
    }

    #[test]
    fn cosine_examples() {
        let s = store2(&[("a", [3.0, 4.0]), ("x", [1.0, 0.0]), ("y", [0.0, 2.0])]);
        let a = compose(&["a"], &s);
        let x = compose(&["x"], &s);
        let y = compose(&["y"], &s);
        assert_eq!(cosine(&a, &a).unwrap(), 1.0);
        assert_eq!(cosine(&x, &y).unwrap(), 0.0);
        assert!((cosine(&a, &x).unwrap() - 0.6).abs() < 1e-15);
    }

    #[test]
    fn per_word_normalization_flag() {
        let mut s = store2(&[("a", [10.0, 0.0]), ("b", [0.0, 1.0])]);
        let plain = compose(&["a", "b"], &s);
        assert!(plain.values[0] > 0.99);
        s.options.normalize_words = true;
        let norm = compose(&["a", "b"], &s);
        assert!((norm.values[0] - norm.values[1]).abs() < 1e-15);
    }

    #[test]
    fn subword_hash_is_deterministic() {
        let mut s = store2(&[("a", [1.0, 0.0])]);
        s.options.oov_policy = OovPolicy::SubwordHash;
        let v1 = compose(&["floodwaters"], &s);
        let v2 = compose(&["floodwaters"], &s.clone());
        assert!(!v1.is_null);
        assert_eq!(v1, v2);
        assert_eq!(v1.n_known, 0);
        s.options.subword = Some(SubwordConfig {
            seed: 7,
            ..Default::default()
        });
        assert_ne!(compose(&["floodwaters"], &s), v1);
    }

    #[test]
    fn write_then_parse() {
        let s = store2(&[("a", [0.1, -2.5]), ("b", [1e-300, 3.0])]);
        let mut buf = Vec::new();
        s.write_text(&mut buf).unwrap();
        let (back, _) = parse_vectors(std::str::from_utf8(&buf).unwrap(), "t").unwrap();
        assert_eq!(back.get("a"), s.get("a"));
        assert_eq!(back.get("b"), s.get("b"));
    }

    fn vec3() -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(-10.0f64..10.0, 3)
    }

    proptest! {
        #[test]
        fn cosine_symmetric_and_bounded(a in vec3(), b in vec3()) {
            let u = ComposedVector::from_sum(a, 1);
            let v = ComposedVector::from_sum(b, 1);
            prop_assume!(!u.is_null && !v.is_null);
            let c1 = cosine(&u, &v).unwrap();
            let c2 = cosine(&v, &u).unwrap();
            prop_assert_eq!(c1, c2);
            prop_assert!(c1.abs() <= 1.0 + 1e-12);
            let norm: f64 = u.values.iter().map(|x| x * x).sum::<f64>().sqrt();
            prop_assert!((norm - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn compose_ignores_word_order(vs in proptest::collection::vec(vec3(), 1..6), seed in any::<u64>()) {
            use rand::seq::SliceRandom;
            let mut s = EmbeddingStore::new(3).unwrap();
            let words: Vec<String> = (0..vs.len()).map(|i| format!("w{i}")).collect();
            for (w, v) in words.iter().zip(&vs) {
                s.insert(w, v).unwrap();
            }
            let mut shuffled = words.clone();
            shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let a = compose(&words, &s);
            let b = compose(&shuffled, &s);
            prop_assert_eq!(a.is_null, b.is_null);
            for (x, y) in a.values.iter().zip(&b.values) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }
    }
}
