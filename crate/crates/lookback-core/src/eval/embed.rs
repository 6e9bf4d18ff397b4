//! Text embedders for coherence and MAUVE.

use crate::vocab::TokenSeq;

/// Maps a token sequence to a fixed-dimension vector. Deterministic:
/// equal inputs give equal vectors.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, tokens: &TokenSeq) -> Vec<f64>;
}

/// L2-normalized TF-IDF bag of tokens, `idf = ln((1 + N) / (1 + df)) + 1`.
///
/// The built-in stand-in for sentence-embedding models: cheap, exact, and
/// deterministic. Empty input embeds to the zero vector, which downstream
/// consumers flag as degenerate.
#[derive(Debug, Clone)]
pub struct TfIdfEmbedder {
    idf: Vec<f64>,
}

impl TfIdfEmbedder {
    /// Fit document frequencies over a corpus of token sequences.
    pub fn fit(docs: &[TokenSeq], vocab_size: usize) -> Self {
        let mut df = vec![0u64; vocab_size];
        for doc in docs {
            let mut seen = vec![false; vocab_size];
            for &id in &doc.ids {
                let idx = id as usize;
                if idx < vocab_size && !seen[idx] {
                    seen[idx] = true;
                    df[idx] += 1;
                }
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .into_iter()
            .map(|d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Self { idf }
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }
}

impl Embedder for TfIdfEmbedder {
    fn dim(&self) -> usize {
        self.idf.len()
    }

    fn embed(&self, tokens: &TokenSeq) -> Vec<f64> {
        let mut tf = vec![0.0f64; self.idf.len()];
        for &id in &tokens.ids {
            if (id as usize) < tf.len() {
                tf[id as usize] += 1.0;
            }
        }
        let mut v: Vec<f64> = tf.iter().zip(&self.idf).map(|(t, i)| t * i).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for x in v.iter_mut() {
                *x /= norm;
            }
        }
        v
    }
}
