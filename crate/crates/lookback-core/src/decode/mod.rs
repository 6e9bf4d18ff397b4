//! Decoding strategies over a [`ConditionalLM`].
//!
//! Implemented decoders: greedy, truncation sampling (nucleus, typical,
//! eta), degeneration-penalty contrastive search, and look-back decoding
//! with uniform or softmax candidate selection. All of them run through
//! one loop that records the per-step distribution summary and KL signals,
//! so any generation can be analyzed after the fact.
//!
//! Determinism contract: decoding is a pure function of
//! `(model, prefix, config)`. Randomness comes from a ChaCha8 stream
//! seeded with `config.seed`, and sampling is inverse-CDF over the
//! candidate list in ascending token-id order, so records reproduce
//! bit-for-bit across platforms.

mod engine;
mod strategies;
mod truncate;

pub use strategies::softmax_neg;
pub use truncate::{truncate_eta, truncate_nucleus, truncate_typical, Truncation};

use serde::{Deserialize, Serialize};

use crate::divergence::StepSignals;
use crate::error::{Error, Result};
use crate::lm::ConditionalLM;
use crate::vocab::{TokenId, TokenSeq};

/// How look-back picks from the candidate set once the repetition alarm
/// has fired.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CandidateMode {
    /// Sample uniformly over the top-k tokens.
    Uniform,
    /// Weight each candidate by `softmax(-lookahead_kl)`: tokens whose
    /// next-step distribution lands farther from the prefix are less
    /// likely to be picked.
    Softmax,
}

impl std::fmt::Display for CandidateMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CandidateMode::Uniform => write!(f, "uniform"),
            CandidateMode::Softmax => write!(f, "softmax"),
        }
    }
}

/// Truncation rule for sampling decoders.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "lowercase")]
pub enum TruncationRule {
    Nucleus { top_p: f64 },
    Typical { tau: f64 },
    Eta { eta: f64 },
}

/// Which decoder to run, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "lowercase")]
pub enum Algorithm {
    Greedy,
    Nucleus {
        top_p: f64,
    },
    Typical {
        tau: f64,
    },
    Eta {
        eta: f64,
    },
    Contrastive {
        k: usize,
        penalty: f64,
    },
    Lookback {
        k: usize,
        alpha: f64,
        mode: CandidateMode,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecodeConfig {
    pub algorithm: Algorithm,
    /// Maximum continuation length; generation also stops at `<eot>`.
    pub max_new_tokens: usize,
    pub seed: u64,
    /// Whether the repetition signal minimizes over prefix positions as
    /// well as generated steps.
    pub history_includes_prefix: bool,
}

impl DecodeConfig {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            max_new_tokens: 256,
            seed: 0,
            history_includes_prefix: true,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_max_new_tokens(mut self, max_new_tokens: usize) -> Self {
        self.max_new_tokens = max_new_tokens;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidConfig(msg));
        match self.algorithm {
            Algorithm::Greedy => Ok(()),
            Algorithm::Nucleus { top_p } => {
                if top_p > 0.0 && top_p <= 1.0 {
                    Ok(())
                } else {
                    bad(format!("nucleus top_p must be in (0, 1], got {top_p}"))
                }
            }
            Algorithm::Typical { tau } => {
                if tau > 0.0 && tau <= 1.0 {
                    Ok(())
                } else {
                    bad(format!("typical tau must be in (0, 1], got {tau}"))
                }
            }
            Algorithm::Eta { eta } => {
                if eta > 0.0 && eta.is_finite() {
                    Ok(())
                } else {
                    bad(format!("eta must be positive, got {eta}"))
                }
            }
            Algorithm::Contrastive { k, penalty } => {
                if k < 1 {
                    bad("contrastive k must be >= 1".into())
                } else if !(0.0..=1.0).contains(&penalty) {
                    bad(format!(
                        "contrastive penalty must be in [0, 1], got {penalty}"
                    ))
                } else {
                    Ok(())
                }
            }
            Algorithm::Lookback { k, alpha, .. } => {
                if k < 1 {
                    bad("look-back k must be >= 1".into())
                } else if alpha.is_nan() {
                    bad("look-back alpha must not be NaN".into())
                } else {
                    // A negative alpha is allowed: KL is nonnegative, so the
                    // alarm never fires and the decoder degenerates to greedy.
                    Ok(())
                }
            }
        }
    }
}

/// One candidate considered at an alarm step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub token: TokenId,
    /// Sampling probability; the probabilities of one step's candidate
    /// list sum to one.
    pub prob: f64,
    /// Lookahead min KL to the prefix, recorded in softmax mode.
    pub lookahead_kl: Option<f64>,
}

/// Per-step trace: chosen token, distribution summary, signals, and the
/// candidate set when the alarm fired (empty otherwise).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub token: TokenId,
    pub entropy: f64,
    /// Top of the full distribution (up to [`SUMMARY_TOP`] entries),
    /// probability descending.
    pub top: Vec<(TokenId, f64)>,
    pub signals: StepSignals,
    pub candidates: Vec<Candidate>,
}

/// Number of (token, prob) pairs kept in each step's summary.
pub const SUMMARY_TOP: usize = 5;

/// A complete decoding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    pub backend: String,
    pub config: DecodeConfig,
    pub prefix: TokenSeq,
    pub continuation: TokenSeq,
    pub steps: Vec<StepRecord>,
}

/// Greedy decoding: the argmax token at every step, ties broken by the
/// lowest token id.
pub fn decode_greedy(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    config: &DecodeConfig,
) -> Result<GenerationRecord> {
    let config = DecodeConfig {
        algorithm: Algorithm::Greedy,
        ..*config
    };
    engine::run(lm, prefix, &config, &mut strategies::Greedy)
}

/// Truncation sampling: truncate the distribution with `rule`, renormalize
/// over the kept set, and sample.
pub fn decode_sampling(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    config: &DecodeConfig,
    rule: TruncationRule,
) -> Result<GenerationRecord> {
    let algorithm = match rule {
        TruncationRule::Nucleus { top_p } => Algorithm::Nucleus { top_p },
        TruncationRule::Typical { tau } => Algorithm::Typical { tau },
        TruncationRule::Eta { eta } => Algorithm::Eta { eta },
    };
    let config = DecodeConfig {
        algorithm,
        ..*config
    };
    engine::run(lm, prefix, &config, &mut strategies::Sampling::new(rule))
}

/// Contrastive search: over the top-k candidates, trade model confidence
/// against the maximum representation similarity to any past step, and
/// take the argmax of the combined score. Requires a backend with a
/// representation hook.
pub fn decode_contrastive(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    k: usize,
    penalty: f64,
    config: &DecodeConfig,
) -> Result<GenerationRecord> {
    let config = DecodeConfig {
        algorithm: Algorithm::Contrastive { k, penalty },
        ..*config
    };
    engine::run(
        lm,
        prefix,
        &config,
        &mut strategies::Contrastive::new(k, penalty),
    )
}

/// Look-back decoding.
///
/// Each step computes the repetition signal `kl_min_history`. While it
/// stays above `alpha` the decoder emits the argmax token. Once it drops
/// to `alpha` or below, the step switches to sampling from the top-k
/// candidates (argmax deliberately included): uniformly in
/// [`CandidateMode::Uniform`], or weighted by `softmax(-lookahead_kl)`
/// in [`CandidateMode::Softmax`] so that candidates leading away from the
/// prefix topic are less likely.
pub fn decode_lookback(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    k: usize,
    alpha: f64,
    mode: CandidateMode,
    config: &DecodeConfig,
) -> Result<GenerationRecord> {
    if k > lm.vocab().len() {
        return Err(Error::TopKOutOfRange {
            k,
            vocab: lm.vocab().len(),
        });
    }
    let config = DecodeConfig {
        algorithm: Algorithm::Lookback { k, alpha, mode },
        ..*config
    };
    engine::run(
        lm,
        prefix,
        &config,
        &mut strategies::Lookback::new(k, alpha, mode),
    )
}

/// Run whatever `config.algorithm` selects.
pub fn decode(
    lm: &dyn ConditionalLM,
    prefix: &TokenSeq,
    config: &DecodeConfig,
) -> Result<GenerationRecord> {
    match config.algorithm {
        Algorithm::Greedy => decode_greedy(lm, prefix, config),
        Algorithm::Nucleus { top_p } => {
            decode_sampling(lm, prefix, config, TruncationRule::Nucleus { top_p })
        }
        Algorithm::Typical { tau } => {
            decode_sampling(lm, prefix, config, TruncationRule::Typical { tau })
        }
        Algorithm::Eta { eta } => decode_sampling(lm, prefix, config, TruncationRule::Eta { eta }),
        Algorithm::Contrastive { k, penalty } => decode_contrastive(lm, prefix, k, penalty, config),
        Algorithm::Lookback { k, alpha, mode } => {
            decode_lookback(lm, prefix, k, alpha, mode, config)
        }
    }
}
