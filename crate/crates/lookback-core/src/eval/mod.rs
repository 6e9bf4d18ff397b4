//! Automatic evaluation metrics: rep-n, diversity, coherence, and a
//! divergence-frontier score over quantized embeddings (MAUVE).
//!
//! All metrics are pure functions. rep-n and diversity are plain n-gram
//! statistics; coherence and MAUVE depend on a pluggable [`Embedder`]
//! (TF-IDF by default), so their absolute values are only comparable
//! under a fixed embedder.

mod embed;
mod kmeans;
mod mauve;

pub use embed::{Embedder, TfIdfEmbedder};
pub use kmeans::{kmeans, KMeansConfig, KMeansFit};
pub use mauve::{mauve, mauve_from_embeddings, MauveConfig};

use std::collections::HashSet;

use crate::error::{Error, Result};
use crate::vocab::TokenSeq;

/// Fraction of duplicate n-grams: `1 - unique / total` over contiguous
/// n-grams. Sequences shorter than `n` have no n-grams and score 0.
pub fn rep_n(tokens: &TokenSeq, n: usize) -> f64 {
    assert!(n >= 1, "rep-n needs n >= 1");
    if tokens.len() < n {
        return 0.0;
    }
    let total = tokens.len() - n + 1;
    let unique: HashSet<&[u32]> = tokens.ids.windows(n).collect();
    1.0 - unique.len() as f64 / total as f64
}

/// `prod_{n=2..4} (1 - rep_n)`: one when all n-gram levels are duplicate
/// free, zero when some level is fully repetitive.
pub fn diversity(tokens: &TokenSeq) -> f64 {
    diversity_from_reps([rep_n(tokens, 2), rep_n(tokens, 3), rep_n(tokens, 4)])
}

/// Diversity from precomputed rep-2..rep-4 fractions; the report layer
/// uses this so the diversity column is always consistent with the rep-n
/// columns it sits next to.
pub fn diversity_from_reps(reps: [f64; 3]) -> f64 {
    reps.iter().map(|r| 1.0 - r).product()
}

/// Cosine similarity between the embeddings of two texts.
pub fn coherence(
    prefix: &TokenSeq,
    continuation: &TokenSeq,
    embedder: &dyn Embedder,
) -> Result<f64> {
    let a = embedder.embed(prefix);
    let b = embedder.embed(continuation);
    let norm_a = norm(&a);
    let norm_b = norm(&b);
    if norm_a == 0.0 || norm_b == 0.0 {
        return Err(Error::DegenerateEmbedding);
    }
    let dot: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
    Ok(dot / (norm_a * norm_b))
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}
