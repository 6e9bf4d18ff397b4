//! Conditional language models.
//!
//! A [`ConditionalLM`] maps a context to the next-token distribution. Two
//! backends ship with the crate: a trainable interpolated add-k n-gram
//! model ([`NGramModel`]) and a remote HTTP log-prob client ([`RemoteLm`]).

mod ngram;
mod remote;

pub use ngram::NGramModel;
pub use remote::{RemoteLm, RemoteLmConfig};

use crate::dist::ProbDist;
use crate::error::Result;
use crate::vocab::{TokenSeq, Vocabulary};

/// A conditional language model over a fixed vocabulary.
///
/// `next_dist` must be a pure function of the context: equal contexts
/// return elementwise-equal distributions. Implementations are immutable
/// once constructed, so they can be shared across concurrent decoders.
pub trait ConditionalLM: Send + Sync {
    /// The vocabulary the model's distributions are defined over.
    fn vocab(&self) -> &Vocabulary;

    /// Next-token distribution given the context.
    fn next_dist(&self, context: &TokenSeq) -> Result<ProbDist>;

    /// Optional fixed-dimension context representation, used by
    /// contrastive search. Backends without one return `Ok(None)`.
    fn representation(&self, _context: &TokenSeq) -> Result<Option<Vec<f64>>> {
        Ok(None)
    }

    /// Short stable identifier for records and reports.
    fn backend_id(&self) -> String;
}
