//! The shared decoding loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::decode::{Candidate, DecodeConfig, GenerationRecord, StepRecord, SUMMARY_TOP};
use crate::dist::ProbDist;
use crate::divergence::{
    min_kl_history, min_kl_prefix, prefix_distributions, DistHistory, StepSignals,
};
use crate::error::{Error, Result};
use crate::lm::ConditionalLM;
use crate::vocab::{TokenId, TokenSeq, EOT_ID};

/// Everything a strategy may look at when choosing the next token.
pub(crate) struct StepView<'a> {
    pub dist: &'a ProbDist,
    pub signals: &'a StepSignals,
    pub context: &'a TokenSeq,
    pub history: &'a DistHistory,
}

/// A decoding strategy plugged into [`run`]. The engine owns the loop,
/// the history, and the record; the strategy only picks tokens.
pub(crate) trait Strategy {
    /// Repetition-alarm threshold, if this strategy uses one.
    fn alarm_threshold(&self) -> Option<f64> {
        None
    }

    /// Called once before decoding starts.
    fn init(&mut self, _lm: &dyn ConditionalLM, _prefix: &TokenSeq) -> Result<()> {
        Ok(())
    }

    /// Pick the next token; returns the candidate set when one was
    /// sampled from (must be empty unless the alarm fired).
    fn choose(
        &mut self,
        lm: &dyn ConditionalLM,
        step: &StepView<'_>,
        rng: &mut ChaCha8Rng,
    ) -> Result<(TokenId, Vec<Candidate>)>;

    /// Called after the chosen token has been appended to the context.
    fn observe(&mut self, _lm: &dyn ConditionalLM, _context: &TokenSeq) -> Result<()> {
        Ok(())
    }
}

/// Inverse-CDF draw over probabilities aligned with a candidate list.
/// Falls back to the last entry if rounding leaves `u` past the total.
pub(crate) fn sample_index(probs: &[f64], u: f64) -> usize {
    let mut cumulative = 0.0;
    for (i, &p) in probs.iter().enumerate() {
        cumulative += p;
        if u < cumulative {
            return i;
        }
    }
    probs.len() - 1
}

pub(crate) fn run(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    config: &DecodeConfig,
    strategy: &mut dyn Strategy,
) -> Result<GenerationRecord> {
    config.validate()?;
    if prefix.is_empty() {
        return Err(Error::EmptyPrefix);
    }
    prefix.validate(lm.vocab())?;

    strategy.init(lm, prefix)?;
    let mut history = DistHistory::new(
        prefix_distributions(lm, prefix)?,
        config.history_includes_prefix,
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let summary_k = SUMMARY_TOP.min(lm.vocab().len());

    let mut context = prefix.clone();
    let mut continuation = TokenSeq::empty();
    let mut steps = Vec::new();
    for _ in 0..config.max_new_tokens {
        let dist = lm.next_dist(&context)?;
        let (kl_min_history, argmin_history) = min_kl_history(&dist, &history)?;
        let kl_min_prefix = min_kl_prefix(&dist, &history)?;
        let alarm = strategy
            .alarm_threshold()
            .is_some_and(|alpha| kl_min_history <= alpha);
        let signals = StepSignals {
            kl_min_history,
            argmin_history,
            kl_min_prefix,
            alarm,
        };
        let (token, candidates) = strategy.choose(
            lm,
            &StepView {
                dist: &dist,
                signals: &signals,
                context: &context,
                history: &history,
            },
            &mut rng,
        )?;
        debug_assert_eq!(alarm, !candidates.is_empty());
        steps.push(StepRecord {
            token,
            entropy: dist.entropy(),
            top: dist.top_k(summary_k)?,
            signals,
            candidates,
        });
        history.push_generated(dist);
        context.push(token);
        continuation.push(token);
        strategy.observe(lm, &context)?;
        if token == EOT_ID {
            break;
        }
    }

    Ok(GenerationRecord {
        backend: lm.backend_id(),
        config: *config,
        prefix: prefix.clone(),
        continuation,
        steps,
    })
}
