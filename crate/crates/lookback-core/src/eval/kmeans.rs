//! Seeded k-means with k-means++ initialization.
//!
//! Small and exact on purpose: MAUVE needs a deterministic quantizer, not
//! a fast one. Same seed, same data, same result - on every platform.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone)]
pub struct KMeansConfig {
    pub clusters: usize,
    /// Lloyd iterations per restart (stops early once assignments settle).
    pub iters: usize,
    /// Independent restarts; the fit with the lowest inertia wins.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        Self {
            clusters: 8,
            iters: 50,
            restarts: 4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Sum of squared distances to the assigned centroids.
    pub inertia: f64,
}

fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(point: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centroids.iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    (best, best_d)
}

/// k-means++ seeding: first center uniform, later centers drawn with
/// probability proportional to squared distance from the chosen set.
fn plus_plus_init(points: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(points[rng.random_range(0..points.len())].clone());
    let mut d2: Vec<f64> = points
        .iter()
        .map(|p| squared_distance(p, &centroids[0]))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total <= 0.0 {
            // All remaining points coincide with a centroid.
            rng.random_range(0..points.len())
        } else {
            let mut u = rng.random::<f64>() * total;
            let mut chosen = points.len() - 1;
            for (i, &w) in d2.iter().enumerate() {
                u -= w;
                if u <= 0.0 {
                    chosen = i;
                    break;
                }
            }
            chosen
        };
        centroids.push(points[next].clone());
        for (i, p) in points.iter().enumerate() {
            let d = squared_distance(p, centroids.last().unwrap());
            if d < d2[i] {
                d2[i] = d;
            }
        }
    }
    centroids
}

fn lloyd(points: &[Vec<f64>], mut centroids: Vec<Vec<f64>>, iters: usize) -> KMeansFit {
    let dim = points[0].len();
    let k = centroids.len();
    let mut assignments = vec![0usize; points.len()];
    for _ in 0..iters {
        let mut changed = false;
        for (i, p) in points.iter().enumerate() {
            let (a, _) = nearest(p, &centroids);
            if assignments[i] != a {
                assignments[i] = a;
                changed = true;
            }
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in points.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, x) in sums[a].iter_mut().zip(p) {
                *s += x;
            }
        }
        for (c, (sum, count)) in centroids.iter_mut().zip(sums.into_iter().zip(counts)) {
            if count > 0 {
                *c = sum.into_iter().map(|s| s / count as f64).collect();
            }
            // Empty clusters keep their previous centroid.
        }
        if !changed {
            break;
        }
    }
    // Final assignment pass against the updated centroids.
    let mut inertia = 0.0;
    for (i, p) in points.iter().enumerate() {
        let (a, d) = nearest(p, &centroids);
        assignments[i] = a;
        inertia += d;
    }
    KMeansFit {
        centroids,
        assignments,
        inertia,
    }
}

/// Cluster `points` into `cfg.clusters` groups. Panics on empty input or
/// `clusters == 0`; callers are expected to have clamped the cluster count
/// to the sample count.
pub fn kmeans(points: &[Vec<f64>], cfg: &KMeansConfig) -> KMeansFit {
    assert!(!points.is_empty(), "kmeans over no points");
    assert!(cfg.clusters >= 1, "kmeans needs at least one cluster");
    let k = cfg.clusters.min(points.len());
    let mut best: Option<KMeansFit> = None;
    for restart in 0..cfg.restarts.max(1) as u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(restart));
        let fit = lloyd(points, plus_plus_init(points, k, &mut rng), cfg.iters);
        if best.as_ref().is_none_or(|b| fit.inertia < b.inertia) {
            best = Some(fit);
        }
    }
    best.expect("at least one restart ran")
}
