//! Vocabulary and token sequences.
//!
//! Tokenization is whitespace word-level: tokens never contain whitespace,
//! unknown words map to `<unk>`, and every vocabulary carries the two
//! sentinels `<unk>` (id 0) and `<eot>` (id 1).

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type TokenId = u32;

pub const UNK_TOKEN: &str = "<unk>";
pub const EOT_TOKEN: &str = "<eot>";
pub const UNK_ID: TokenId = 0;
pub const EOT_ID: TokenId = 1;

/// Bijective token-string <-> token-id map with dense 0-based ids.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct Vocabulary {
    tokens: Vec<String>,
    #[serde(skip)]
    index: HashMap<String, TokenId>,
}

impl Vocabulary {
    /// Build a vocabulary from content tokens. The sentinels are inserted
    /// at ids 0 and 1; duplicates and sentinel strings in `words` are
    /// skipped so the id <-> string map stays a bijection.
    pub fn from_words<S: AsRef<str>, I: IntoIterator<Item = S>>(words: I) -> Result<Self> {
        let mut tokens = vec![UNK_TOKEN.to_string(), EOT_TOKEN.to_string()];
        let mut index: HashMap<String, TokenId> = HashMap::new();
        index.insert(UNK_TOKEN.to_string(), UNK_ID);
        index.insert(EOT_TOKEN.to_string(), EOT_ID);
        for word in words {
            let word = word.as_ref();
            if word.is_empty() || word.chars().any(char::is_whitespace) {
                return Err(Error::MalformedVocabulary {
                    path: "<memory>".into(),
                    detail: format!("token {word:?} is empty or contains whitespace"),
                });
            }
            if !index.contains_key(word) {
                index.insert(word.to_string(), tokens.len() as TokenId);
                tokens.push(word.to_string());
            }
        }
        Ok(Self { tokens, index })
    }

    /// Collect the vocabulary of a corpus: every whitespace token of every
    /// line, first occurrence order.
    pub fn from_corpus_lines<S: AsRef<str>, I: IntoIterator<Item = S>>(lines: I) -> Result<Self> {
        let mut words = Vec::new();
        for line in lines {
            words.extend(line.as_ref().split_whitespace().map(str::to_string));
        }
        Self::from_words(words)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        // The sentinels are always present.
        false
    }

    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Write the vocabulary file: UTF-8, one token per line, line number
    /// equals token id (lines 0 and 1 hold the sentinels).
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut out = String::new();
        for token in &self.tokens {
            let _ = writeln!(out, "{token}");
        }
        std::fs::write(path, out).map_err(|e| Error::io(path.display().to_string(), e))
    }

    /// Load a vocabulary file written by [`Vocabulary::save`].
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        let lines: Vec<&str> = text.lines().collect();
        if lines.len() < 2 || lines[0] != UNK_TOKEN || lines[1] != EOT_TOKEN {
            return Err(Error::MalformedVocabulary {
                path: path.display().to_string(),
                detail: format!("lines 0 and 1 must be {UNK_TOKEN} and {EOT_TOKEN}"),
            });
        }
        Self::from_words(&lines[2..]).map_err(|e| match e {
            Error::MalformedVocabulary { detail, .. } => Error::MalformedVocabulary {
                path: path.display().to_string(),
                detail,
            },
            other => other,
        })
    }
}

impl TryFrom<Vec<String>> for Vocabulary {
    type Error = Error;

    fn try_from(tokens: Vec<String>) -> Result<Self> {
        if tokens.len() < 2 || tokens[0] != UNK_TOKEN || tokens[1] != EOT_TOKEN {
            return Err(Error::MalformedVocabulary {
                path: "<memory>".into(),
                detail: format!("ids 0 and 1 must be {UNK_TOKEN} and {EOT_TOKEN}"),
            });
        }
        Self::from_words(&tokens[2..])
    }
}

impl From<Vocabulary> for Vec<String> {
    fn from(v: Vocabulary) -> Vec<String> {
        v.tokens
    }
}

/// A sequence of token ids. Context windows and continuations are plain
/// `TokenSeq`s; nothing here assumes a particular backend.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TokenSeq {
    pub ids: Vec<TokenId>,
}

impl TokenSeq {
    pub fn new(ids: Vec<TokenId>) -> Self {
        Self { ids }
    }

    pub fn empty() -> Self {
        Self { ids: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn push(&mut self, id: TokenId) {
        self.ids.push(id);
    }

    /// The subsequence of the first `n` ids.
    pub fn head(&self, n: usize) -> TokenSeq {
        TokenSeq::new(self.ids[..n.min(self.ids.len())].to_vec())
    }

    /// The subsequence of the last `n` ids.
    pub fn tail(&self, n: usize) -> TokenSeq {
        let start = self.ids.len().saturating_sub(n);
        TokenSeq::new(self.ids[start..].to_vec())
    }

    /// A new sequence with `id` appended.
    pub fn extended(&self, id: TokenId) -> TokenSeq {
        let mut ids = self.ids.clone();
        ids.push(id);
        TokenSeq::new(ids)
    }

    /// Check every id against the vocabulary size.
    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        for &id in &self.ids {
            if id as usize >= vocab.len() {
                return Err(Error::TokenOutOfRange {
                    id,
                    vocab: vocab.len(),
                });
            }
        }
        Ok(())
    }
}

impl From<Vec<TokenId>> for TokenSeq {
    fn from(ids: Vec<TokenId>) -> Self {
        Self { ids }
    }
}

/// Whitespace tokenization; out-of-vocabulary words become `<unk>`.
pub fn tokenize(text: &str, vocab: &Vocabulary) -> TokenSeq {
    TokenSeq::new(
        text.split_whitespace()
            .map(|w| vocab.id(w).unwrap_or(UNK_ID))
            .collect(),
    )
}

/// Inverse of [`tokenize`] for in-vocabulary text, modulo whitespace
/// normalization. Out-of-range ids render as `<unk>`.
pub fn detokenize(seq: &TokenSeq, vocab: &Vocabulary) -> String {
    seq.ids
        .iter()
        .map(|&id| vocab.token(id).unwrap_or(UNK_TOKEN))
        .collect::<Vec<_>>()
        .join(" ")
}
