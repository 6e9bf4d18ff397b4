//! Interpolated add-k smoothed n-gram language model.
//!
//! The conditional distribution mixes all orders up to `order`:
//!
//! ```text
//! P(v | ctx) = sum_o lambda_o * (count_o(ctx_o, v) + add_k) / (total_o(ctx_o) + add_k * |V|)
//! ```
//!
//! where `ctx_o` is the context truncated to its last `o - 1` tokens.
//! Every order term is a proper full-support distribution, so the mixture
//! is one too; with any positive `add_k` the model never assigns zero
//! probability, which is what keeps the KL signals finite.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dist::ProbDist;
use crate::error::{Error, Result};
use crate::lm::ConditionalLM;
use crate::vocab::{TokenId, TokenSeq, Vocabulary, EOT_ID};

/// Current model-file format version.
pub const MODEL_FORMAT_VERSION: u32 = 1;
const MODEL_FORMAT_NAME: &str = "ngram-lm";

/// Per-context token counts. `total` is the sum of all counts.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
struct CountTable {
    counts: BTreeMap<TokenId, u64>,
    total: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NGramModel {
    order: usize,
    vocab: Vocabulary,
    add_k: f64,
    lambdas: Vec<f64>,
    // Context tuples of every length in [0, order), sorted map so that
    // persistence and iteration are deterministic.
    counts: BTreeMap<Vec<TokenId>, CountTable>,
}

impl NGramModel {
    /// Train from tokenized lines. `<eot>` is appended to every line, so
    /// the model learns line endings. Counts are collected for every
    /// order up to `order`, using only full-length context windows.
    pub fn train(
        vocab: Vocabulary,
        lines: &[TokenSeq],
        order: usize,
        add_k: f64,
        lambdas: &[f64],
    ) -> Result<Self> {
        if order < 1 {
            return Err(Error::InvalidConfig("n-gram order must be >= 1".into()));
        }
        if add_k <= 0.0 || !add_k.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "add_k must be a positive finite number, got {add_k}"
            )));
        }
        validate_lambdas(lambdas, order)?;
        if lines.iter().all(TokenSeq::is_empty) {
            return Err(Error::EmptyCorpus(
                "no nonempty lines to train on".to_string(),
            ));
        }

        let mut counts: BTreeMap<Vec<TokenId>, CountTable> = BTreeMap::new();
        for line in lines {
            if line.is_empty() {
                continue;
            }
            line.validate(&vocab)?;
            let mut ids = line.ids.clone();
            ids.push(EOT_ID);
            for o in 1..=order {
                if ids.len() < o {
                    continue;
                }
                for i in (o - 1)..ids.len() {
                    let context = ids[i + 1 - o..i].to_vec();
                    let table = counts.entry(context).or_default();
                    *table.counts.entry(ids[i]).or_insert(0) += 1;
                    table.total += 1;
                }
            }
        }

        Ok(Self {
            order,
            vocab,
            add_k,
            lambdas: lambdas.to_vec(),
            counts,
        })
    }

    /// Build the vocabulary from the text lines, tokenize them, and train.
    pub fn train_from_text<S: AsRef<str>>(
        lines: &[S],
        order: usize,
        add_k: f64,
        lambdas: &[f64],
    ) -> Result<Self> {
        let vocab = Vocabulary::from_corpus_lines(lines.iter().map(AsRef::as_ref))?;
        let token_lines: Vec<TokenSeq> = lines
            .iter()
            .map(|l| crate::vocab::tokenize(l.as_ref(), &vocab))
            .collect();
        Self::train(vocab, &token_lines, order, add_k, lambdas)
    }

    /// Uniform interpolation weights for a given order.
    pub fn uniform_lambdas(order: usize) -> Vec<f64> {
        vec![1.0 / order as f64; order]
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn add_k(&self) -> f64 {
        self.add_k
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    /// Serialize to a versioned JSON container. The format is exact:
    /// counts are integers and `serde_json` round-trips `f64` losslessly,
    /// so `load(save(m))` reproduces every distribution bit for bit.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = ModelFile::from(self);
        let text = serde_json::to_string_pretty(&file).expect("model serialization cannot fail");
        std::fs::write(path, text).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Load a model saved by [`NGramModel::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let file: ModelFile = serde_json::from_str(&text).map_err(|e| Error::MalformedModel {
            path: path.display().to_string(),
            offset: byte_offset(&text, e.line(), e.column()),
            detail: e.to_string(),
        })?;
        file.into_model(path)
    }
}

impl ConditionalLM for NGramModel {
    fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    fn next_dist(&self, context: &TokenSeq) -> Result<ProbDist> {
        context.validate(&self.vocab)?;
        let vocab_size = self.vocab.len();
        let denom_add = self.add_k * vocab_size as f64;
        let mut mixture = vec![0.0f64; vocab_size];
        static EMPTY: CountTable = CountTable {
            counts: BTreeMap::new(),
            total: 0,
        };
        for (o, &lambda) in (1..=self.order).zip(&self.lambdas) {
            if lambda == 0.0 {
                continue;
            }
            let window = o - 1;
            let start = context.len().saturating_sub(window);
            let table = self.counts.get(&context.ids[start..]).unwrap_or(&EMPTY);
            let denom = table.total as f64 + denom_add;
            let base = lambda * self.add_k / denom;
            for p in mixture.iter_mut() {
                *p += base;
            }
            for (&id, &count) in &table.counts {
                mixture[id as usize] += lambda * count as f64 / denom;
            }
        }
        ProbDist::normalize(&mixture)
    }

    fn representation(&self, context: &TokenSeq) -> Result<Option<Vec<f64>>> {
        // The next-token distribution itself, as a plain vector. A cheap
        // stand-in for hidden states: contexts that predict alike look alike.
        Ok(Some(self.next_dist(context)?.probs().to_vec()))
    }

    fn backend_id(&self) -> String {
        format!("ngram(order={},add_k={})", self.order, self.add_k)
    }
}

fn validate_lambdas(lambdas: &[f64], order: usize) -> Result<()> {
    if lambdas.len() != order {
        return Err(Error::InvalidConfig(format!(
            "expected {order} interpolation weights, got {}",
            lambdas.len()
        )));
    }
    if lambdas.iter().any(|&l| l < 0.0 || !l.is_finite()) {
        return Err(Error::InvalidConfig(
            "interpolation weights must be nonnegative and finite".into(),
        ));
    }
    let sum: f64 = lambdas.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidConfig(format!(
            "interpolation weights must sum to 1, got {sum}"
        )));
    }
    Ok(())
}

/// Translate a serde_json line/column (both 1-based) into a byte offset.
fn byte_offset(text: &str, line: usize, column: usize) -> usize {
    if line == 0 {
        return 0;
    }
    let mut offset = 0;
    for (i, l) in text.split('\n').enumerate() {
        if i + 1 == line {
            return offset + column.saturating_sub(1).min(l.len());
        }
        offset += l.len() + 1;
    }
    text.len()
}

#[derive(Serialize, Deserialize)]
struct ContextEntry {
    context: Vec<TokenId>,
    counts: Vec<(TokenId, u64)>,
}

/// On-disk representation: a flat, sorted, versioned JSON container.
#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    order: usize,
    add_k: f64,
    lambdas: Vec<f64>,
    vocab: Vec<String>,
    contexts: Vec<ContextEntry>,
}

impl From<&NGramModel> for ModelFile {
    fn from(model: &NGramModel) -> Self {
        ModelFile {
            format: MODEL_FORMAT_NAME.to_string(),
            version: MODEL_FORMAT_VERSION,
            order: model.order,
            add_k: model.add_k,
            lambdas: model.lambdas.clone(),
            vocab: model.vocab.tokens().to_vec(),
            contexts: model
                .counts
                .iter()
                .map(|(context, table)| ContextEntry {
                    context: context.clone(),
                    counts: table.counts.iter().map(|(&id, &c)| (id, c)).collect(),
                })
                .collect(),
        }
    }
}

impl ModelFile {
    fn into_model(self, path: &Path) -> Result<NGramModel> {
        let malformed = |detail: String| Error::MalformedModel {
            path: path.display().to_string(),
            offset: 0,
            detail,
        };
        if self.format != MODEL_FORMAT_NAME {
            return Err(malformed(format!("unknown format {:?}", self.format)));
        }
        if self.version != MODEL_FORMAT_VERSION {
            return Err(Error::VersionMismatch {
                found: self.version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        let vocab = Vocabulary::try_from(self.vocab)?;
        validate_lambdas(&self.lambdas, self.order)?;
        let mut counts = BTreeMap::new();
        for entry in self.contexts {
            if entry.context.len() >= self.order {
                return Err(malformed(format!(
                    "context {:?} is not shorter than order {}",
                    entry.context, self.order
                )));
            }
            let mut table = CountTable::default();
            for (id, count) in entry.counts {
                if id as usize >= vocab.len() {
                    return Err(malformed(format!("count for out-of-range token {id}")));
                }
                if count == 0 {
                    return Err(malformed("zero count stored".into()));
                }
                table.counts.insert(id, count);
                table.total += count;
            }
            if table.total == 0 {
                return Err(malformed(format!(
                    "context {:?} has no counts",
                    entry.context
                )));
            }
            counts.insert(entry.context, table);
        }
        Ok(NGramModel {
            order: self.order,
            vocab,
            add_k: self.add_k,
            lambdas: self.lambdas,
            counts,
        })
    }
}
