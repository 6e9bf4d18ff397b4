//! KL-divergence signals between decoding steps.
//!
//! Two signals drive the look-back decoder:
//!
//! - the minimum KL divergence from the current step's distribution to any
//!   previous step's distribution (the repetition signal): values falling
//!   towards zero mean the model is about to reproduce an earlier step;
//! - the minimum KL divergence to the distributions at the prefix
//!   positions (the drift signal): values staying high mean the
//!   continuation has wandered off the prefix topic.

use serde::{Deserialize, Serialize};

use crate::dist::{ProbDist, PROB_FLOOR};
use crate::error::{Error, Result};
use crate::lm::ConditionalLM;
use crate::vocab::{TokenId, TokenSeq};

/// `KL(p || q) = sum_i p_i ln(p_i / q_i)` in nats.
///
/// Both arguments are full-support by construction (entries at least
/// [`PROB_FLOOR`]), so the sum is always finite. Nonnegative; zero iff
/// `p == q` elementwise up to floor effects.
pub fn kl_divergence(p: &ProbDist, q: &ProbDist) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::LengthMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let kl = p
        .probs()
        .iter()
        .zip(q.probs())
        .map(|(&pi, &qi)| pi * (pi / qi.max(PROB_FLOOR)).ln())
        .sum::<f64>();
    // Rounding can push an exact zero a hair negative; KL is nonnegative.
    Ok(kl.max(0.0))
}

/// Per-generation store of next-token distributions.
///
/// `prefix_dists[j]` is the distribution at prefix position `j + 1`, i.e.
/// `p(. | x_1 .. x_j)` with the empty context at `j = 0`. Generated-step
/// distributions are appended by the decoding loop, one per emitted token.
/// Single writer; snapshots may be read concurrently.
#[derive(Debug, Clone)]
pub struct DistHistory {
    prefix_dists: Vec<ProbDist>,
    generated: Vec<ProbDist>,
    include_prefix: bool,
}

impl DistHistory {
    /// `include_prefix` controls whether the repetition signal minimizes
    /// over prefix positions as well as generated steps (the default
    /// everywhere in this crate) or over generated steps only.
    pub fn new(prefix_dists: Vec<ProbDist>, include_prefix: bool) -> Self {
        Self {
            prefix_dists,
            generated: Vec::new(),
            include_prefix,
        }
    }

    pub fn push_generated(&mut self, dist: ProbDist) {
        self.generated.push(dist);
    }

    pub fn prefix_dists(&self) -> &[ProbDist] {
        &self.prefix_dists
    }

    pub fn generated(&self) -> &[ProbDist] {
        &self.generated
    }

    pub fn includes_prefix(&self) -> bool {
        self.include_prefix
    }

    /// Distributions visible to the repetition signal, each tagged with
    /// its global step index (prefix positions first, then generated).
    fn repetition_scope(&self) -> impl Iterator<Item = (usize, &ProbDist)> {
        let offset = self.prefix_dists.len();
        let prefix = if self.include_prefix {
            &self.prefix_dists[..]
        } else {
            &[]
        };
        prefix.iter().enumerate().chain(
            self.generated
                .iter()
                .enumerate()
                .map(move |(i, d)| (offset + i, d)),
        )
    }
}

/// Signals recorded at one decoding step.
///
/// `kl_min_history` is positive infinity when the history is empty (only
/// possible when prefix positions are excluded, at the first generated
/// step); infinities serialize as JSON `null`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSignals {
    #[serde(with = "serde_nonfinite")]
    pub kl_min_history: f64,
    pub argmin_history: Option<usize>,
    #[serde(with = "serde_nonfinite")]
    pub kl_min_prefix: f64,
    pub alarm: bool,
}

/// Minimum KL divergence from `current` to every distribution in the
/// repetition scope, with the argmin's global step index. Ties resolve to
/// the earliest index; an empty scope yields `(inf, None)` so the alarm
/// can never fire on it.
pub fn min_kl_history(current: &ProbDist, history: &DistHistory) -> Result<(f64, Option<usize>)> {
    let mut best = f64::INFINITY;
    let mut arg = None;
    for (index, dist) in history.repetition_scope() {
        let kl = kl_divergence(current, dist)?;
        if kl < best {
            best = kl;
            arg = Some(index);
        }
    }
    Ok((best, arg))
}

/// Minimum KL divergence from `current` to the prefix-position
/// distributions. Infinity if no prefix distribution is available.
pub fn min_kl_prefix(current: &ProbDist, history: &DistHistory) -> Result<f64> {
    let mut best = f64::INFINITY;
    for dist in &history.prefix_dists {
        best = best.min(kl_divergence(current, dist)?);
    }
    Ok(best)
}

/// Drift signal for one candidate continuation token: append `candidate`
/// to the context, query the model once, and take the min KL against the
/// prefix distributions. Pure; the history is not modified.
pub fn lookahead_prefix_kl(
    lm: &dyn ConditionalLM,
    context: &TokenSeq,
    candidate: TokenId,
    history: &DistHistory,
) -> Result<f64> {
    if candidate as usize >= lm.vocab().len() {
        return Err(Error::TokenOutOfRange {
            id: candidate,
            vocab: lm.vocab().len(),
        });
    }
    let next = lm.next_dist(&context.extended(candidate))?;
    min_kl_prefix(&next, history)
}

/// `M[i][j] = KL(dists[i] || dists[j])`. Zero diagonal; not symmetric.
pub fn pairwise_kl_matrix(dists: &[ProbDist]) -> Result<Vec<Vec<f64>>> {
    let mut matrix = vec![vec![0.0; dists.len()]; dists.len()];
    for (i, p) in dists.iter().enumerate() {
        for (j, q) in dists.iter().enumerate() {
            if i != j {
                matrix[i][j] = kl_divergence(p, q)?;
            }
        }
    }
    Ok(matrix)
}

/// Distributions and signals along a forced token sequence.
///
/// Replays `tokens` after `prefix` without any decoding decisions; used to
/// analyze a given continuation (human text, another decoder's output, or
/// a pseudo-continuation) exactly the way the decoding loop would have
/// seen it.
#[derive(Debug, Clone)]
pub struct SequenceTrace {
    pub prefix_dists: Vec<ProbDist>,
    pub step_dists: Vec<ProbDist>,
    pub signals: Vec<StepSignals>,
}

/// Compute the per-position distributions for the prefix. Position 1 uses
/// the empty context; if the backend rejects the empty context (some
/// remote servers do), that position is skipped and the trace starts at
/// position 2.
pub fn prefix_distributions(lm: &dyn ConditionalLM, prefix: &TokenSeq) -> Result<Vec<ProbDist>> {
    let mut dists = Vec::with_capacity(prefix.len());
    for j in 1..=prefix.len() {
        match lm.next_dist(&prefix.head(j - 1)) {
            Ok(d) => dists.push(d),
            Err(_) if j == 1 => continue,
            Err(e) => return Err(e),
        }
    }
    Ok(dists)
}

pub fn trace_sequence(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    tokens: &TokenSeq,
    include_prefix: bool,
) -> Result<SequenceTrace> {
    if prefix.is_empty() {
        return Err(Error::EmptyPrefix);
    }
    let mut history = DistHistory::new(prefix_distributions(lm, prefix)?, include_prefix);
    let mut context = prefix.clone();
    let mut step_dists = Vec::with_capacity(tokens.len());
    let mut signals = Vec::with_capacity(tokens.len());
    for &token in &tokens.ids {
        let dist = lm.next_dist(&context)?;
        let (kl_min_history, argmin_history) = min_kl_history(&dist, &history)?;
        let kl_min_prefix = min_kl_prefix(&dist, &history)?;
        signals.push(StepSignals {
            kl_min_history,
            argmin_history,
            kl_min_prefix,
            alarm: false,
        });
        step_dists.push(dist.clone());
        history.push_generated(dist);
        context.push(token);
    }
    Ok(SequenceTrace {
        prefix_dists: history.prefix_dists,
        step_dists,
        signals,
    })
}

/// JSON-safe (de)serialization for possibly non-finite f64 signals.
mod serde_nonfinite {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &f64, serializer: S) -> Result<S::Ok, S::Error> {
        if value.is_finite() {
            serializer.serialize_some(value)
        } else {
            serializer.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(deserializer)?.unwrap_or(f64::INFINITY))
    }
}
