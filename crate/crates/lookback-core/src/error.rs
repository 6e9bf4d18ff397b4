//! Crate-wide error type.

use thiserror::Error;

use crate::vocab::TokenId;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate distribution: no positive mass")]
    DegenerateDistribution,

    #[error("negative entry {value} at index {index} in raw distribution")]
    NegativeMass { index: usize, value: f64 },

    #[error("distribution length mismatch: {left} vs {right}")]
    LengthMismatch { left: usize, right: usize },

    #[error("top-k out of range: k={k}, vocabulary size {vocab}")]
    TopKOutOfRange { k: usize, vocab: usize },

    #[error("token id {id} out of range for vocabulary of size {vocab}")]
    TokenOutOfRange { id: TokenId, vocab: usize },

    #[error("empty corpus: {0}")]
    EmptyCorpus(String),

    #[error("empty prefix: decoding requires at least one prefix token")]
    EmptyPrefix,

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate embedding: zero vector")]
    DegenerateEmbedding,

    #[error("contrastive search requires representations, backend {backend} provides none")]
    MissingRepresentations { backend: String },

    #[error("model file version mismatch: found {found}, expected {expected}")]
    VersionMismatch { found: u32, expected: u32 },

    #[error("malformed model file {path} at byte offset {offset}: {detail}")]
    MalformedModel {
        path: String,
        offset: usize,
        detail: String,
    },

    #[error("malformed vocabulary file {path}: {detail}")]
    MalformedVocabulary { path: String, detail: String },

    #[error("remote LM request to {endpoint} failed after {attempts} attempt(s): {detail}")]
    RemoteUnavailable {
        endpoint: String,
        attempts: u32,
        detail: String,
    },

    #[error("remote LM at {endpoint} returned a malformed response: {detail}")]
    RemoteMalformed { endpoint: String, detail: String },

    #[error(
        "remote LM at {endpoint} is inconsistent: listed probabilities sum to {mass}, exceeding 1"
    )]
    RemoteExcessMass { endpoint: String, mass: f64 },

    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
