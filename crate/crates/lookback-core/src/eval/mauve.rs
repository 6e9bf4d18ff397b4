//! Divergence-frontier score between two text collections (MAUVE).
//!
//! Procedure: embed both sides, quantize the joint embedding cloud with
//! seeded k-means, histogram each side over the clusters, and trace the
//! divergence curve of the mixtures `r = lambda * p + (1 - lambda) * q`:
//! each grid point contributes `(exp(-c KL(q || r)), exp(-c KL(p || r)))`.
//! The score is the trapezoid area under the curve with the endpoints
//! `(0, 1)` and `(1, 0)` appended. Identical collections score 1; fully
//! separated ones approach 0.

use crate::dist::ProbDist;
use crate::divergence::kl_divergence;
use crate::error::{Error, Result};
use crate::eval::kmeans::{kmeans, KMeansConfig};
use crate::eval::Embedder;
use crate::vocab::TokenSeq;

#[derive(Debug, Clone)]
pub struct MauveConfig {
    /// Number of k-means clusters; `None` derives
    /// `max(2, (|P| + |Q|) / 10)` capped at 500.
    pub num_clusters: Option<usize>,
    pub kmeans_iters: usize,
    pub kmeans_restarts: usize,
    /// Scaling constant `c` in `exp(-c * KL)`.
    pub scaling_c: f64,
    /// Number of interior mixture weights on the divergence curve.
    pub grid_size: usize,
    /// Additive smoothing applied to the cluster histograms.
    pub smoothing_eps: f64,
    pub seed: u64,
}

impl Default for MauveConfig {
    fn default() -> Self {
        Self {
            num_clusters: None,
            kmeans_iters: 50,
            kmeans_restarts: 4,
            scaling_c: 5.0,
            grid_size: 25,
            smoothing_eps: 1e-6,
            seed: 0,
        }
    }
}

impl MauveConfig {
    fn validate(&self) -> Result<()> {
        if self.num_clusters == Some(0) {
            return Err(Error::InvalidConfig(
                "mauve needs at least one cluster".into(),
            ));
        }
        if self.grid_size < 2 {
            return Err(Error::InvalidConfig(format!(
                "mauve mixture grid must have at least 2 points, got {}",
                self.grid_size
            )));
        }
        if self.smoothing_eps <= 0.0 {
            return Err(Error::InvalidConfig(
                "mauve histogram smoothing must be positive".into(),
            ));
        }
        Ok(())
    }

    fn clusters_for(&self, samples: usize) -> usize {
        let wanted = self
            .num_clusters
            .unwrap_or_else(|| (samples / 10).clamp(2, 500));
        if wanted > samples {
            eprintln!(
                "warning: mauve cluster count {wanted} exceeds {samples} embeddings; using {samples}"
            );
            samples
        } else {
            wanted
        }
    }
}

/// MAUVE between human and model texts under an embedder.
pub fn mauve(
    human: &[TokenSeq],
    model: &[TokenSeq],
    embedder: &dyn Embedder,
    cfg: &MauveConfig,
) -> Result<f64> {
    if human.is_empty() || model.is_empty() {
        return Err(Error::EmptyCorpus("mauve needs nonempty text sets".into()));
    }
    let p: Vec<Vec<f64>> = human.iter().map(|t| embedder.embed(t)).collect();
    let q: Vec<Vec<f64>> = model.iter().map(|t| embedder.embed(t)).collect();
    mauve_from_embeddings(&p, &q, cfg)
}

/// MAUVE on raw embedding vectors (`p` human side, `q` model side).
pub fn mauve_from_embeddings(p: &[Vec<f64>], q: &[Vec<f64>], cfg: &MauveConfig) -> Result<f64> {
    cfg.validate()?;
    if p.is_empty() || q.is_empty() {
        return Err(Error::EmptyCorpus(
            "mauve needs nonempty embedding sets".into(),
        ));
    }
    let mut joint: Vec<Vec<f64>> = Vec::with_capacity(p.len() + q.len());
    joint.extend(p.iter().cloned());
    joint.extend(q.iter().cloned());
    let clusters = cfg.clusters_for(joint.len());
    let fit = kmeans(
        &joint,
        &KMeansConfig {
            clusters,
            iters: cfg.kmeans_iters,
            restarts: cfg.kmeans_restarts,
            seed: cfg.seed,
        },
    );
    let p_hist = histogram(&fit.assignments[..p.len()], clusters, cfg.smoothing_eps)?;
    let q_hist = histogram(&fit.assignments[p.len()..], clusters, cfg.smoothing_eps)?;
    frontier_area(&p_hist, &q_hist, cfg)
}

fn histogram(assignments: &[usize], clusters: usize, eps: f64) -> Result<ProbDist> {
    let mut counts = vec![eps; clusters];
    for &a in assignments {
        counts[a] += 1.0;
    }
    ProbDist::normalize(&counts)
}

fn frontier_area(p: &ProbDist, q: &ProbDist, cfg: &MauveConfig) -> Result<f64> {
    let c = cfg.scaling_c;
    let mut points = Vec::with_capacity(cfg.grid_size + 2);
    points.push((0.0, 1.0));
    points.push((1.0, 0.0));
    for i in 1..=cfg.grid_size {
        let lambda = i as f64 / (cfg.grid_size + 1) as f64;
        let mixture: Vec<f64> = p
            .probs()
            .iter()
            .zip(q.probs())
            .map(|(&pi, &qi)| lambda * pi + (1.0 - lambda) * qi)
            .collect();
        let r = ProbDist::normalize(&mixture)?;
        let x = (-c * kl_divergence(q, &r)?).exp();
        let y = (-c * kl_divergence(p, &r)?).exp();
        points.push((x, y));
    }
    // Monotone curve from (0, 1) down to (1, 0): sort by x, tie-break on
    // descending y, and integrate with the trapezoid rule.
    points.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .expect("finite")
            .then(b.1.partial_cmp(&a.1).expect("finite"))
    });
    let mut area = 0.0;
    for w in points.windows(2) {
        let (x0, y0) = w[0];
        let (x1, y1) = w[1];
        area += (x1 - x0) * (y0 + y1) / 2.0;
    }
    Ok(area)
}
