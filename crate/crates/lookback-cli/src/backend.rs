//! Backend resolution: train or load the n-gram model, or connect the
//! remote client.

use std::path::Path;

use anyhow::{Context, Result};
use lookback_core::{ConditionalLM, NGramModel, RemoteLm, RemoteLmConfig, Vocabulary};

use crate::config::{BackendSpec, ExperimentConfig};

/// Train an n-gram model from a text corpus. Prompts-format lines are
/// trained on both fields (the tab counts as whitespace).
pub fn train_ngram_from_corpus(
    path: impl AsRef<Path>,
    order: usize,
    add_k: f64,
    lambdas: Option<&[f64]>,
) -> Result<NGramModel> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    let uniform = NGramModel::uniform_lambdas(order);
    let lambdas = lambdas.unwrap_or(&uniform);
    NGramModel::train_from_text(&lines, order, add_k, lambdas)
        .with_context(|| format!("training on {}", path.display()))
}

/// Build the conditional LM the experiment config asks for.
pub fn resolve_backend(cfg: &ExperimentConfig) -> Result<Box<dyn ConditionalLM>> {
    match &cfg.backend {
        BackendSpec::Ngram {
            order,
            add_k,
            lambdas,
            model,
        } => {
            let model = match model {
                Some(path) => NGramModel::load(path)
                    .with_context(|| format!("loading model {}", path.display()))?,
                // Prompts corpora train fine as plain lines: the tab is
                // whitespace to the tokenizer.
                None => {
                    train_ngram_from_corpus(&cfg.corpus.train, *order, *add_k, lambdas.as_deref())?
                }
            };
            Ok(Box::new(model))
        }
        BackendSpec::Remote {
            endpoint,
            top_n,
            timeout,
            retries,
            vocab,
        } => {
            let vocab = Vocabulary::load(vocab)?;
            let lm = RemoteLm::new(
                RemoteLmConfig {
                    endpoint: endpoint.clone(),
                    top_n: *top_n,
                    timeout: *timeout,
                    retries: *retries,
                },
                vocab,
            )?;
            Ok(Box::new(lm))
        }
    }
}
