//! Token-selection strategies behind the public decode functions.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::decode::engine::{sample_index, StepView, Strategy};
use crate::decode::truncate::{truncate_eta, truncate_nucleus, truncate_typical};
use crate::decode::{Candidate, CandidateMode, TruncationRule};
use crate::divergence::lookahead_prefix_kl;
use crate::error::{Error, Result};
use crate::lm::ConditionalLM;
use crate::vocab::{TokenId, TokenSeq};

/// `p_i = exp(-v_i) / sum_j exp(-v_j)`, computed with a min-shift so large
/// values cannot overflow. Monotone: a smaller input value gets a larger
/// probability. Infinite inputs get zero weight; if no input is finite
/// the result is uniform.
pub fn softmax_neg(values: &[f64]) -> Vec<f64> {
    assert!(!values.is_empty(), "softmax over an empty list");
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if !min.is_finite() {
        return vec![1.0 / values.len() as f64; values.len()];
    }
    let weights: Vec<f64> = values.iter().map(|&v| (min - v).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights.into_iter().map(|w| w / total).collect()
}

pub(crate) struct Greedy;

impl Strategy for Greedy {
    fn choose(
        &mut self,
        _lm: &dyn ConditionalLM,
        step: &StepView<'_>,
        _rng: &mut ChaCha8Rng,
    ) -> Result<(TokenId, Vec<Candidate>)> {
        Ok((step.dist.argmax(), Vec::new()))
    }
}

pub(crate) struct Sampling {
    rule: TruncationRule,
}

impl Sampling {
    pub(crate) fn new(rule: TruncationRule) -> Self {
        Self { rule }
    }
}

impl Strategy for Sampling {
    fn choose(
        &mut self,
        _lm: &dyn ConditionalLM,
        step: &StepView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(TokenId, Vec<Candidate>)> {
        let truncation = match self.rule {
            TruncationRule::Nucleus { top_p } => truncate_nucleus(step.dist, top_p)?,
            TruncationRule::Typical { tau } => truncate_typical(step.dist, tau)?,
            TruncationRule::Eta { eta } => truncate_eta(step.dist, eta)?,
        };
        let probs: Vec<f64> = truncation.kept.iter().map(|&(_, q)| q).collect();
        let index = sample_index(&probs, rng.random::<f64>());
        Ok((truncation.kept[index].0, Vec::new()))
    }
}

pub(crate) struct Contrastive {
    k: usize,
    penalty: f64,
    past_reps: Vec<Vec<f64>>,
}

impl Contrastive {
    pub(crate) fn new(k: usize, penalty: f64) -> Self {
        Self {
            k,
            penalty,
            past_reps: Vec::new(),
        }
    }

    fn representation(lm: &dyn ConditionalLM, context: &TokenSeq) -> Result<Vec<f64>> {
        lm.representation(context)?
            .ok_or_else(|| Error::MissingRepresentations {
                backend: lm.backend_id(),
            })
    }
}

impl Strategy for Contrastive {
    fn init(&mut self, lm: &dyn ConditionalLM, prefix: &TokenSeq) -> Result<()> {
        // One representation per prefix position, each for the context
        // ending at that token.
        for j in 1..=prefix.len() {
            self.past_reps
                .push(Self::representation(lm, &prefix.head(j))?);
        }
        Ok(())
    }

    fn choose(
        &mut self,
        lm: &dyn ConditionalLM,
        step: &StepView<'_>,
        _rng: &mut ChaCha8Rng,
    ) -> Result<(TokenId, Vec<Candidate>)> {
        let k = self.k.min(step.dist.len());
        let mut top = step.dist.top_k(k)?;
        // Ascending id, so score ties resolve to the lowest token id.
        top.sort_unstable_by_key(|&(id, _)| id);
        let mut best: Option<(TokenId, f64)> = None;
        for (id, prob) in top {
            let rep = Self::representation(lm, &step.context.extended(id))?;
            let max_sim = self
                .past_reps
                .iter()
                .map(|past| cosine(&rep, past))
                .fold(f64::NEG_INFINITY, f64::max);
            let score = (1.0 - self.penalty) * prob - self.penalty * max_sim;
            if best.is_none_or(|(_, s)| score > s) {
                best = Some((id, score));
            }
        }
        Ok((best.expect("top-k is nonempty").0, Vec::new()))
    }

    fn observe(&mut self, lm: &dyn ConditionalLM, context: &TokenSeq) -> Result<()> {
        self.past_reps.push(Self::representation(lm, context)?);
        Ok(())
    }
}

pub(crate) struct Lookback {
    k: usize,
    alpha: f64,
    mode: CandidateMode,
}

impl Lookback {
    pub(crate) fn new(k: usize, alpha: f64, mode: CandidateMode) -> Self {
        Self { k, alpha, mode }
    }
}

impl Strategy for Lookback {
    fn alarm_threshold(&self) -> Option<f64> {
        Some(self.alpha)
    }

    fn choose(
        &mut self,
        lm: &dyn ConditionalLM,
        step: &StepView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(TokenId, Vec<Candidate>)> {
        if !step.signals.alarm {
            return Ok((step.dist.argmax(), Vec::new()));
        }
        let mut top = step.dist.top_k(self.k)?;
        // Candidate list and its CDF live in ascending id order.
        top.sort_unstable_by_key(|&(id, _)| id);
        let candidates: Vec<Candidate> = match self.mode {
            CandidateMode::Uniform => {
                let q = 1.0 / top.len() as f64;
                top.iter()
                    .map(|&(token, _)| Candidate {
                        token,
                        prob: q,
                        lookahead_kl: None,
                    })
                    .collect()
            }
            CandidateMode::Softmax => {
                let mut lookahead = Vec::with_capacity(top.len());
                for &(token, _) in &top {
                    lookahead.push(lookahead_prefix_kl(lm, step.context, token, step.history)?);
                }
                let probs = softmax_neg(&lookahead);
                top.iter()
                    .zip(lookahead)
                    .zip(probs)
                    .map(|((&(token, _), kl), prob)| Candidate {
                        token,
                        prob,
                        lookahead_kl: Some(kl),
                    })
                    .collect()
            }
        };
        let probs: Vec<f64> = candidates.iter().map(|c| c.prob).collect();
        let index = sample_index(&probs, rng.random::<f64>());
        Ok((candidates[index].token, candidates))
    }
}

/// Cosine similarity; zero when either vector has zero norm.
fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}
