//! Support-truncation rules for sampling decoders.

use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::vocab::TokenId;

/// Result of truncating a distribution: the renormalized full-support
/// distribution (dropped entries sit at the probability floor) plus the
/// kept token ids with their exact renormalized probabilities, in
/// ascending id order. Samplers draw from `kept`; diagnostics and tests
/// read `dist`.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub dist: ProbDist,
    pub kept: Vec<(TokenId, f64)>,
}

fn build(p: &ProbDist, mut kept_ids: Vec<TokenId>) -> Result<Truncation> {
    kept_ids.sort_unstable();
    let mut raw = vec![0.0; p.len()];
    let mut kept_mass = 0.0;
    for &id in &kept_ids {
        raw[id as usize] = p.prob(id);
        kept_mass += p.prob(id);
    }
    let kept = kept_ids
        .into_iter()
        .map(|id| (id, p.prob(id) / kept_mass))
        .collect();
    Ok(Truncation {
        dist: ProbDist::normalize(&raw)?,
        kept,
    })
}

/// Nucleus (top-p): keep the smallest probability-descending set whose
/// cumulative mass reaches `top_p`, renormalize. `top_p` at or below the
/// maximum probability keeps only the argmax.
pub fn truncate_nucleus(p: &ProbDist, top_p: f64) -> Result<Truncation> {
    if !(top_p > 0.0 && top_p <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "nucleus top_p must be in (0, 1], got {top_p}"
        )));
    }
    let ranked = p.top_k(p.len())?;
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for (id, prob) in ranked {
        kept.push(id);
        mass += prob;
        if mass >= top_p {
            break;
        }
    }
    build(p, kept)
}

/// Typical decoding: rank tokens by how far their surprisal sits from the
/// distribution's entropy, keep the closest-ranked prefix whose cumulative
/// mass reaches `tau`, renormalize.
pub fn truncate_typical(p: &ProbDist, tau: f64) -> Result<Truncation> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "typical tau must be in (0, 1], got {tau}"
        )));
    }
    let entropy = p.entropy();
    let mut ranked: Vec<TokenId> = (0..p.len() as TokenId).collect();
    let deviation = |id: TokenId| (-p.prob(id).ln() - entropy).abs();
    // Stable sort keeps the ascending-id tie rule.
    ranked.sort_by(|&a, &b| deviation(a).partial_cmp(&deviation(b)).expect("finite"));
    let mut kept = Vec::new();
    let mut mass = 0.0;
    for id in ranked {
        kept.push(id);
        mass += p.prob(id);
        if mass >= tau {
            break;
        }
    }
    build(p, kept)
}

/// Eta sampling: drop every token whose probability falls below
/// `min(eta, sqrt(eta) * exp(-H(p)))`. If that would drop everything,
/// keep the argmax.
pub fn truncate_eta(p: &ProbDist, eta: f64) -> Result<Truncation> {
    if !(eta > 0.0 && eta.is_finite()) {
        return Err(Error::InvalidConfig(format!(
            "eta must be positive and finite, got {eta}"
        )));
    }
    let threshold = eta.min(eta.sqrt() * (-p.entropy()).exp());
    let kept: Vec<TokenId> = (0..p.len() as TokenId)
        .filter(|&id| p.prob(id) >= threshold)
        .collect();
    if kept.is_empty() {
        return build(p, vec![p.argmax()]);
    }
    build(p, kept)
}
