//! HTTP log-prob client.
//!
//! Wire protocol: `POST` to the endpoint with JSON body
//! `{"context": [token ids], "top_n": n}`; the server answers
//! `{"logprobs": [[id, logprob], ...]}` with natural-log probabilities for
//! the `top_n` most likely next tokens. Servers rarely expose the full
//! distribution, so the unlisted tail mass `1 - sum(exp(logprob))` is
//! spread uniformly over every unlisted vocabulary id. That keeps the
//! result full-support; KL values computed against this backend are
//! approximations whose quality grows with `top_n`.

use std::time::Duration;

use serde::{Deserialize, Serialize};

use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::lm::ConditionalLM;
use crate::vocab::{TokenId, TokenSeq, Vocabulary};

/// Tolerance when checking that listed probabilities do not exceed one.
const EXCESS_MASS_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RemoteLmConfig {
    /// Full URL of the log-prob endpoint.
    pub endpoint: String,
    /// Number of log-probs requested per call.
    pub top_n: usize,
    /// Per-request timeout.
    pub timeout: Duration,
    /// Extra attempts after the first failure.
    pub retries: u32,
}

impl RemoteLmConfig {
    pub fn new(endpoint: impl Into<String>, top_n: usize) -> Self {
        Self {
            endpoint: endpoint.into(),
            top_n,
            timeout: Duration::from_secs(10),
            retries: 2,
        }
    }
}

#[derive(Serialize)]
struct LogProbRequest<'a> {
    context: &'a [TokenId],
    top_n: usize,
}

#[derive(Deserialize)]
struct LogProbResponse {
    logprobs: Vec<(TokenId, f64)>,
}

/// Remote conditional LM. The vocabulary is supplied locally; the server
/// only ever sees and returns token ids.
pub struct RemoteLm {
    cfg: RemoteLmConfig,
    vocab: Vocabulary,
    agent: ureq::Agent,
}

impl RemoteLm {
    pub fn new(cfg: RemoteLmConfig, vocab: Vocabulary) -> Result<Self> {
        if cfg.top_n < 1 {
            return Err(Error::InvalidConfig("remote top_n must be >= 1".into()));
        }
        let agent = ureq::AgentBuilder::new().timeout(cfg.timeout).build();
        Ok(Self { cfg, vocab, agent })
    }

    pub fn config(&self) -> &RemoteLmConfig {
        &self.cfg
    }

    fn fetch(&self, context: &TokenSeq) -> Result<LogProbResponse> {
        let body = LogProbRequest {
            context: &context.ids,
            top_n: self.cfg.top_n,
        };
        let attempts = self.cfg.retries + 1;
        let mut last_error = String::new();
        for _ in 0..attempts {
            match self
                .agent
                .post(&self.cfg.endpoint)
                .send_json(serde_json::json!({
                    "context": body.context,
                    "top_n": body.top_n,
                })) {
                Ok(response) => {
                    return response.into_json::<LogProbResponse>().map_err(|e| {
                        Error::RemoteMalformed {
                            endpoint: self.cfg.endpoint.clone(),
                            detail: e.to_string(),
                        }
                    });
                }
                Err(e) => last_error = e.to_string(),
            }
        }
        Err(Error::RemoteUnavailable {
            endpoint: self.cfg.endpoint.clone(),
            attempts,
            detail: last_error,
        })
    }

    /// Convert listed log-probs plus the uniform tail into a distribution.
    fn to_dist(&self, listed: &[(TokenId, f64)]) -> Result<ProbDist> {
        let vocab_size = self.vocab.len();
        let malformed = |detail: String| Error::RemoteMalformed {
            endpoint: self.cfg.endpoint.clone(),
            detail,
        };
        if listed.is_empty() {
            return Err(malformed("empty logprobs list".into()));
        }
        let mut raw = vec![f64::NAN; vocab_size];
        let mut listed_mass = 0.0;
        for &(id, logprob) in listed {
            if id as usize >= vocab_size {
                return Err(malformed(format!("token id {id} out of range")));
            }
            if !raw[id as usize].is_nan() {
                return Err(malformed(format!("duplicate token id {id}")));
            }
            if !logprob.is_finite() || logprob > 0.0 {
                return Err(malformed(format!("invalid logprob {logprob} for id {id}")));
            }
            let p = logprob.exp();
            raw[id as usize] = p;
            listed_mass += p;
        }
        if listed_mass > 1.0 + EXCESS_MASS_TOLERANCE {
            return Err(Error::RemoteExcessMass {
                endpoint: self.cfg.endpoint.clone(),
                mass: listed_mass,
            });
        }
        let unlisted = vocab_size - listed.len();
        let tail_share = if unlisted > 0 {
            (1.0 - listed_mass).max(0.0) / unlisted as f64
        } else {
            0.0
        };
        for slot in raw.iter_mut() {
            if slot.is_nan() {
                *slot = tail_share;
            }
        }
        ProbDist::normalize(&raw)
    }
}

impl ConditionalLM for RemoteLm {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_dist(&self, context: &TokenSeq) -> Result<ProbDist> {
        context.validate(&self.vocab)?;
        let response = self.fetch(context)?;
        self.to_dist(&response.logprobs)
    }

    fn backend_id(&self) -> String {
        format!("remote({},top_n={})", self.cfg.endpoint, self.cfg.top_n)
    }
}
