//! Lloyd's k-means with k-means++ seeding.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KMeansConfig {
    pub k: usize,
    pub max_iter: usize,
    /// Stop once an iteration improves inertia by no more than `tol` times the previous value.
    pub tol: f64,
    pub seed: u64,
}

impl KMeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        KMeansConfig {
            k,
            max_iter: 300,
            tol: 1e-6,
            seed,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansResult {
    pub labels: Vec<usize>,
    pub centroids: Vec<Vec<f64>>,
    /// Inertia after each assignment step; non-increasing.
    pub inertia_history: Vec<f64>,
}

impl KMeansResult {
    pub fn inertia(&self) -> f64 {
        self.inertia_history.last().copied().unwrap_or(0.0)
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// k-means++ seeding: the first centroid uniformly, each next one with probability
/// proportional to the squared distance to the nearest chosen centroid.
pub fn init_plus_plus(points: &[Vec<f64>], k: usize, rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let n = points.len();
    let mut centroids = Vec::with_capacity(k);
    if k == 0 || n == 0 {
        return centroids;
    }
    centroids.push(points[rng.random_range(0..n)].clone());
    let mut nearest: Vec<f64> = points.iter().map(|p| sq_dist(p, &centroids[0])).collect();
    while centroids.len() < k {
        let next = match WeightedIndex::new(&nearest) {
            Ok(dist) => dist.sample(rng),
            // All points coincide with a centroid already.
            Err(_) => rng.random_range(0..n),
        };
        let c = points[next].clone();
        for (d, p) in nearest.iter_mut().zip(points) {
            *d = d.min(sq_dist(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

fn assign(points: &[Vec<f64>], centroids: &[Vec<f64>], labels: &mut [usize]) -> f64 {
    let mut inertia = 0.0;
    for (p, label) in points.iter().zip(labels.iter_mut()) {
        let mut best = (f64::INFINITY, 0);
        for (j, c) in centroids.iter().enumerate() {
            let d = sq_dist(p, c);
            if d < best.0 {
                best = (d, j);
            }
        }
        *label = best.1;
        inertia += best.0;
    }
    inertia
}

fn update(points: &[Vec<f64>], labels: &[usize], centroids: &mut [Vec<f64>]) {
    let dim = points.first().map_or(0, Vec::len);
    let mut sums = vec![vec![0.0; dim]; centroids.len()];
    let mut counts = vec![0usize; centroids.len()];
    for (p, &l) in points.iter().zip(labels) {
        counts[l] += 1;
        for (s, x) in sums[l].iter_mut().zip(p) {
            *s += x;
        }
    }
    for ((c, s), &n) in centroids.iter_mut().zip(sums).zip(&counts) {
        // An empty cluster keeps its previous centroid.
        if n > 0 {
            *c = s.into_iter().map(|x| x / n as f64).collect();
        }
    }
}

pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> Result<KMeansResult> {
    if cfg.k == 0 || cfg.k > points.len() {
        return Err(Error::InvalidArgument(format!(
            "k-means needs 1 <= k <= n, got k = {} for n = {}",
            cfg.k,
            points.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut centroids = init_plus_plus(points, cfg.k, &mut rng);
    let mut labels = vec![0; points.len()];
    let mut history: Vec<f64> = Vec::new();
    let mut final_centroids = centroids.clone();
    for _ in 0..cfg.max_iter.max(1) {
        let inertia = assign(points, &centroids, &mut labels);
        final_centroids.clone_from(&centroids);
        let converged = history
            .last()
            .is_some_and(|&prev| prev - inertia <= cfg.tol * prev);
        history.push(inertia);
        if converged || inertia == 0.0 {
            break;
        }
        update(points, &labels, &mut centroids);
    }
    Ok(KMeansResult {
        labels,
        centroids: final_centroids,
        inertia_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blobs() -> Vec<Vec<f64>> {
        let mut pts = Vec::new();
        for (cx, cy) in [(0.0, 0.0), (10.0, 0.0), (0.0, 10.0)] {
            for i in 0..5 {
                let d = i as f64 * 0.1;
                pts.push(vec![cx + d, cy - d]);
            }
        }
        pts
    }

    #[test]
    fn separates_blobs() {
        let pts = blobs();
        let r = kmeans(&pts, &KMeansConfig::new(3, 1)).unwrap();
        for chunk in r.labels.chunks(5) {
            assert!(chunk.iter().all(|&l| l == chunk[0]));
        }
        assert_ne!(r.labels[0], r.labels[5]);
        assert_ne!(r.labels[5], r.labels[10]);
    }

    #[test]
    fn inertia_never_increases() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pts: Vec<Vec<f64>> = (0..200)
            .map(|_| (0..4).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        for seed in 0..10 {
            let r = kmeans(&pts, &KMeansConfig::new(7, seed)).unwrap();
            for w in r.inertia_history.windows(2) {
                assert!(w[1] <= w[0] + 1e-12, "{:?}", r.inertia_history);
            }
        }
    }

    #[test]
    fn deterministic_for_seed() {
        let pts = blobs();
        let a = kmeans(&pts, &KMeansConfig::new(3, 42)).unwrap();
        let b = kmeans(&pts, &KMeansConfig::new(3, 42)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn duplicate_points_do_not_break_seeding() {
        let pts = vec![vec![1.0, 1.0]; 4];
        let r = kmeans(&pts, &KMeansConfig::new(2, 0)).unwrap();
        assert_eq!(r.inertia(), 0.0);
    }

    #[test]
    fn k_out_of_range() {
        assert!(kmeans(&blobs(), &KMeansConfig::new(0, 0)).is_err());
        assert!(kmeans(&blobs(), &KMeansConfig::new(16, 0)).is_err());
    }
}
