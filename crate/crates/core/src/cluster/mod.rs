//! Spectral clustering of ranked candidates over a cosine affinity matrix.

mod eigen;
mod kmeans;

pub use eigen::{canonical_sign, eig_topk, EigenPair, SymmetricMatrix};
pub use kmeans::{init_plus_plus, kmeans, KMeansConfig, KMeansResult};

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embed::{cosine, dot, ComposedVector, EmbeddingStore};
use crate::error::{Error, Result};
use crate::extract::CandidateKind;
use crate::rank::{candidate_vector, RankedCandidate};

/// Symmetric, nonnegative similarity matrix with zero diagonal and entries in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    matrix: SymmetricMatrix,
}

impl AffinityMatrix {
    /// Validates a dense matrix against the affinity invariants.
    pub fn from_matrix(matrix: SymmetricMatrix) -> Result<Self> {
        let n = matrix.n();
        for i in 0..n {
            if matrix.get(i, i) != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "affinity diagonal ({i}, {i}) is not zero"
                )));
            }
            for j in 0..n {
                let v = matrix.get(i, j);
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidArgument(format!(
                        "affinity entry ({i}, {j}) = {v} outside [0, 1]"
                    )));
                }
            }
        }
        Ok(AffinityMatrix { matrix })
    }

    pub fn n(&self) -> usize {
        self.matrix.n()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix.get(i, j)
    }

    pub fn matrix(&self) -> &SymmetricMatrix {
        &self.matrix
    }

    pub fn degrees(&self) -> Vec<f64> {
        (0..self.n())
            .map(|i| self.matrix.row(i).iter().sum())
            .collect()
    }
}

/// Clamped cosine affinity: `max(0, cos(v_i, v_j))` off the diagonal, zero on it.
pub fn build_affinity(vectors: &[ComposedVector]) -> Result<AffinityMatrix> {
    let n = vectors.len();
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "affinity needs at least 2 vectors, got {n}"
        )));
    }
    if let Some(i) = vectors.iter().position(|v| v.is_null) {
        return Err(Error::NullVector(format!(
            "vector {i} is null; filter null candidates first"
        )));
    }
    let dim = vectors[0].dim();
    if vectors.iter().any(|v| v.dim() != dim) {
        return Err(Error::InvalidArgument("vectors differ in dimension".into()));
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else {
                        cosine(&vectors[i], &vectors[j]).map_or(0.0, |c| c.max(0.0))
                    }
                })
                .collect()
        })
        .collect();
    // Fill from the upper triangle so the result is exactly symmetric.
    let matrix = SymmetricMatrix::from_fn(n, |i, j| rows[i][j]);
    Ok(AffinityMatrix { matrix })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Laplacian {
    /// `D^{-1/2} A D^{-1/2}`, leading eigenvectors, rows normalized to unit length.
    #[default]
    Normalized,
    /// `D - A`, trailing eigenvectors, no row normalization.
    Unnormalized,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralConfig {
    pub k: usize,
    pub seed: u64,
    pub laplacian: Laplacian,
    pub max_iter: usize,
    pub tol: f64,
}

impl SpectralConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        SpectralConfig {
            k,
            seed,
            laplacian: Laplacian::Normalized,
            max_iter: 300,
            tol: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    pub k: usize,
    /// Cluster id per point, numbered by first appearance.
    pub labels: Vec<usize>,
}

/// Renumbers labels in order of first appearance.
pub fn canonical_labels(labels: &[usize]) -> Vec<usize> {
    let mut map = HashMap::new();
    labels
        .iter()
        .map(|l| {
            let next = map.len();
            *map.entry(*l).or_insert(next)
        })
        .collect()
}

/// Normalized spectral clustering with default k-means settings.
pub fn spectral_cluster(a: &AffinityMatrix, k: usize, seed: u64) -> Result<ClusterAssignment> {
    spectral_cluster_with(a, &SpectralConfig::new(k, seed))
}

/// Points with zero degree become singleton clusters; the rest are embedded with the
/// eigenvectors of the chosen Laplacian and grouped by k-means.
pub fn spectral_cluster_with(
    a: &AffinityMatrix,
    cfg: &SpectralConfig,
) -> Result<ClusterAssignment> {
    let n = a.n();
    let k = cfg.k;
    if k < 2 {
        return Err(Error::InvalidArgument(format!(
            "spectral clustering needs k >= 2, got {k}"
        )));
    }
    if k > n {
        return Err(Error::InvalidArgument(format!(
            "k = {k} exceeds the number of points ({n})"
        )));
    }
    if k == n {
        return Ok(ClusterAssignment {
            k,
            labels: (0..n).collect(),
        });
    }

    let degrees = a.degrees();
    let isolated: Vec<usize> = (0..n).filter(|&i| degrees[i] == 0.0).collect();
    let connected: Vec<usize> = (0..n).filter(|&i| degrees[i] > 0.0).collect();
    let remaining_k = k.saturating_sub(isolated.len());
    if !connected.is_empty() && remaining_k == 0 {
        return Err(Error::InvalidArgument(format!(
            "{} isolated points each need their own cluster, leaving none of the k = {k} clusters \
             for the other {} points",
            isolated.len(),
            connected.len()
        )));
    }

    let mut raw = vec![usize::MAX; n];
    for (c, &i) in isolated.iter().enumerate() {
        raw[i] = c;
    }
    let offset = isolated.len();
    let sub_labels = if connected.len() <= remaining_k {
        (0..connected.len()).collect()
    } else if remaining_k == 1 {
        vec![0; connected.len()]
    } else {
        let embedding = spectral_embedding(a, &connected, &degrees, remaining_k, cfg.laplacian)?;
        let km = kmeans(
            &embedding,
            &KMeansConfig {
                k: remaining_k,
                max_iter: cfg.max_iter,
                tol: cfg.tol,
                seed: cfg.seed,
            },
        )?;
        km.labels
    };
    for (&i, l) in connected.iter().zip(sub_labels) {
        raw[i] = offset + l;
    }
    Ok(ClusterAssignment {
        k,
        labels: canonical_labels(&raw),
    })
}

/// Rows of the spectral embedding for the points in `idx` (all with positive degree).
pub fn spectral_embedding(
    a: &AffinityMatrix,
    idx: &[usize],
    degrees: &[f64],
    k: usize,
    laplacian: Laplacian,
) -> Result<Vec<Vec<f64>>> {
    let m = idx.len();
    let op = match laplacian {
        Laplacian::Normalized => {
            let inv_sqrt: Vec<f64> = idx.iter().map(|&i| 1.0 / degrees[i].sqrt()).collect();
            SymmetricMatrix::from_fn(m, |r, c| a.get(idx[r], idx[c]) * inv_sqrt[r] * inv_sqrt[c])
        }
        // Leading eigenvectors of A - D are the trailing ones of D - A.
        Laplacian::Unnormalized => SymmetricMatrix::from_fn(m, |r, c| {
            let v = a.get(idx[r], idx[c]);
            if r == c {
                v - degrees[idx[r]]
            } else {
                v
            }
        }),
    };
    let pairs = eig_topk(&op, k)?;
    let mut rows: Vec<Vec<f64>> = (0..m)
        .map(|r| pairs.iter().map(|p| p.vector[r]).collect())
        .collect();
    if laplacian == Laplacian::Normalized {
        for row in &mut rows {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm > 0.0 {
                row.iter_mut().for_each(|x| *x /= norm);
            }
        }
    }
    Ok(rows)
}

/// Adjusted Rand index between two labelings of the same points.
pub fn adjusted_rand_index(a: &[usize], b: &[usize]) -> f64 {
    assert_eq!(a.len(), b.len(), "labelings differ in length");
    let n = a.len();
    let choose2 = |x: usize| (x * x.saturating_sub(1)) as f64 / 2.0;
    let mut table: HashMap<(usize, usize), usize> = HashMap::new();
    let mut rows: HashMap<usize, usize> = HashMap::new();
    let mut cols: HashMap<usize, usize> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *table.entry((x, y)).or_default() += 1;
        *rows.entry(x).or_default() += 1;
        *cols.entry(y).or_default() += 1;
    }
    let index: f64 = table.values().map(|&c| choose2(c)).sum();
    let sum_a: f64 = rows.values().map(|&c| choose2(c)).sum();
    let sum_b: f64 = cols.values().map(|&c| choose2(c)).sum();
    let total = choose2(n);
    if total == 0.0 {
        return 1.0;
    }
    let expected = sum_a * sum_b / total;
    let max = (sum_a + sum_b) / 2.0;
    if max == expected {
        // Both labelings are trivial (all singletons or a single cluster).
        return if sum_a == sum_b { 1.0 } else { 0.0 };
    }
    (index - expected) / (max - expected)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterMember {
    pub kind: CandidateKind,
    pub first: String,
    pub second: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub cluster_id: usize,
    pub members: Vec<ClusterMember>,
    /// Member most similar to the cluster centroid.
    pub medoid: ClusterMember,
}

/// Groups members by cluster (members keep their input order) and picks medoids.
pub fn summarize_clusters(
    ranked: &[RankedCandidate],
    vectors: &[ComposedVector],
    assignment: &ClusterAssignment,
) -> Vec<ClusterSummary> {
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); assignment.k];
    for (i, &l) in assignment.labels.iter().enumerate() {
        groups[l].push(i);
    }
    groups
        .into_iter()
        .enumerate()
        .filter(|(_, g)| !g.is_empty())
        .map(|(cluster_id, members)| {
            let dim = vectors[members[0]].dim();
            let mut centroid = vec![0.0; dim];
            for &i in &members {
                for (c, x) in centroid.iter_mut().zip(&vectors[i].values) {
                    *c += x;
                }
            }
            let mut medoid = members[0];
            let mut best = f64::NEG_INFINITY;
            for &i in &members {
                let s = dot(&vectors[i].values, &centroid);
                if s > best {
                    best = s;
                    medoid = i;
                }
            }
            let member = |i: usize| ClusterMember {
                kind: ranked[i].candidate.kind,
                first: ranked[i].candidate.first.clone(),
                second: ranked[i].candidate.second.clone(),
                score: ranked[i].score,
            };
            ClusterSummary {
                cluster_id,
                members: members.iter().map(|&i| member(i)).collect(),
                medoid: member(medoid),
            }
        })
        .collect()
}

/// Clusters the first `top_m` ranked candidates that have a vector.
pub fn cluster_ranked(
    ranked: &[RankedCandidate],
    store: &EmbeddingStore,
    top_m: usize,
    cfg: &SpectralConfig,
) -> Result<(Vec<ClusterSummary>, ClusterAssignment)> {
    let (chosen, vectors): (Vec<RankedCandidate>, Vec<ComposedVector>) = ranked
        .iter()
        .map(|r| (r, candidate_vector(&r.candidate, store)))
        .filter(|(_, v)| !v.is_null)
        .take(top_m)
        .map(|(r, v)| (r.clone(), v))
        .unzip();
    if chosen.len() < cfg.k {
        return Err(Error::InvalidArgument(format!(
            "k = {} exceeds the {} candidates available for clustering",
            cfg.k,
            chosen.len()
        )));
    }
    let affinity = build_affinity(&vectors)?;
    let assignment = spectral_cluster_with(&affinity, cfg)?;
    let summaries = summarize_clusters(&chosen, &vectors, &assignment);
    Ok((summaries, assignment))
}
