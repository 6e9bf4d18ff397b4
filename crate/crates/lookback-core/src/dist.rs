//! Full-support probability distributions over the vocabulary.
//!
//! Every distribution is floored at [`PROB_FLOOR`] before normalization,
//! so KL divergences stay finite everywhere. All entropies and divergences
//! in this crate use natural log.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vocab::TokenId;

/// Smallest probability any vocabulary entry can carry.
pub const PROB_FLOOR: f64 = 1e-12;

/// Tolerance on the sum-to-one invariant.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Dense probability vector over the vocabulary: entries in `(0, 1]`,
/// each at least [`PROB_FLOOR`], summing to one within [`SUM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ProbDist {
    probs: Vec<f64>,
}

impl ProbDist {
    /// Normalize a nonnegative raw vector into a full-support distribution:
    /// entries are floored at [`PROB_FLOOR`], then divided by their sum.
    pub fn normalize(raw: &[f64]) -> Result<Self> {
        if let Some((index, &value)) = raw.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Err(Error::NegativeMass { index, value });
        }
        if !raw.iter().any(|&v| v > 0.0) {
            return Err(Error::DegenerateDistribution);
        }
        let floored: Vec<f64> = raw.iter().map(|&v| v.max(PROB_FLOOR)).collect();
        let sum: f64 = floored.iter().sum();
        Ok(Self {
            probs: floored.into_iter().map(|v| v / sum).collect(),
        })
    }

    /// Uniform distribution over `n` entries.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::normalize(&vec![1.0; n])
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    pub fn prob(&self, id: TokenId) -> f64 {
        self.probs[id as usize]
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Shannon entropy in nats: `H = -sum_i p_i ln p_i`.
    pub fn entropy(&self) -> f64 {
        -self.probs.iter().map(|&p| p * p.ln()).sum::<f64>()
    }

    /// The `k` most probable entries, probability descending, ties broken
    /// by ascending token id.
    pub fn top_k(&self, k: usize) -> Result<Vec<(TokenId, f64)>> {
        if k == 0 || k > self.probs.len() {
            return Err(Error::TopKOutOfRange {
                k,
                vocab: self.probs.len(),
            });
        }
        let mut order: Vec<TokenId> = (0..self.probs.len() as TokenId).collect();
        // Stable sort on descending probability keeps the ascending-id tie rule.
        order.sort_by(|&a, &b| {
            self.probs[b as usize]
                .partial_cmp(&self.probs[a as usize])
                .expect("probabilities are finite")
        });
        Ok(order
            .into_iter()
            .take(k)
            .map(|id| (id, self.probs[id as usize]))
            .collect())
    }

    /// Most probable token id, ties broken by ascending id.
    pub fn argmax(&self) -> TokenId {
        let mut best = 0usize;
        for (i, &p) in self.probs.iter().enumerate().skip(1) {
            if p > self.probs[best] {
                best = i;
            }
        }
        best as TokenId
    }

    /// Maximum absolute elementwise difference against another distribution.
    pub fn max_abs_diff(&self, other: &ProbDist) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}
