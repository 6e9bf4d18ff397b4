//! Decoding toolkit for open-ended text generation.
//!
//! The crate is built around one idea: the KL divergence between the
//! next-token distribution at the current decoding step and the
//! distributions seen at earlier steps is a usable signal for the two
//! classic failure modes of autoregressive decoding. A distribution that
//! drifts very close to some past step's distribution announces an
//! upcoming repetition; a distribution that stays far from every prefix
//! position's distribution announces topic drift. The look-back decoder
//! watches both signals and switches from argmax to constrained candidate
//! sampling when the repetition signal fires.
//!
//! Modules:
//!
//! - [`vocab`] / [`dist`]: vocabulary, token sequences, and full-support
//!   probability distributions (the atoms of every KL computation).
//! - [`lm`]: the [`ConditionalLM`] abstraction with a trainable smoothed
//!   n-gram backend and a remote HTTP log-prob client.
//! - [`divergence`]: KL divergence, per-step distribution history, and
//!   the min-KL signals to history and prefix.
//! - [`decode`]: greedy, nucleus, typical, eta, contrastive search, and
//!   look-back decoding over any [`ConditionalLM`].
//! - [`eval`]: rep-n, diversity, coherence, and a quantized-embedding
//!   divergence-frontier score (MAUVE) with pluggable embedders.
//! - [`fixtures`]: deterministic toy corpora and models shared by tests
//!   and benchmarks.

pub mod decode;
pub mod dist;
pub mod divergence;
pub mod error;
pub mod eval;
pub mod fixtures;
pub mod lm;
pub mod vocab;

pub use decode::{
    decode, decode_contrastive, decode_greedy, decode_lookback, decode_sampling, softmax_neg,
    truncate_eta, truncate_nucleus, truncate_typical, Algorithm, Candidate, CandidateMode,
    DecodeConfig, GenerationRecord, StepRecord, Truncation, TruncationRule,
};
pub use dist::ProbDist;
pub use divergence::{kl_divergence, DistHistory, StepSignals};
pub use error::{Error, Result};
pub use eval::{coherence, diversity, rep_n, Embedder, MauveConfig, TfIdfEmbedder};
pub use lm::{ConditionalLM, NGramModel, RemoteLm, RemoteLmConfig};
pub use vocab::{
    detokenize, tokenize, TokenId, TokenSeq, Vocabulary, EOT_ID, EOT_TOKEN, UNK_ID, UNK_TOKEN,
};
