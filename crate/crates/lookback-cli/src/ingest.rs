//! Corpus ingestion: split documents into (prefix, human continuation)
//! instances and sample a deterministic subset.

use std::path::Path;

use anyhow::{bail, Context, Result};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::config::CorpusFormat;

#[derive(Debug, Clone)]
pub struct Instance {
    /// Line number in the source corpus (stable identity across runs).
    pub index: usize,
    pub prefix_words: Vec<String>,
    pub continuation_words: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct IngestStats {
    pub total_lines: usize,
    pub skipped_short: usize,
    pub usable: usize,
    pub sampled: usize,
}

/// Read the corpus and cut each usable document at `prefix_len` tokens
/// (lines format) or at the tab separator (prompts format). Documents too
/// short to yield a nonempty prefix and continuation are skipped and
/// counted. When more than `num_instances` are usable, a seeded sample is
/// drawn; the returned instances are ordered by source line.
pub fn ingest_corpus(
    path: impl AsRef<Path>,
    format: CorpusFormat,
    prefix_len: usize,
    num_instances: usize,
    seed: u64,
) -> Result<(Vec<Instance>, IngestStats)> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading corpus {}", path.display()))?;
    let mut stats = IngestStats::default();
    let mut instances = Vec::new();
    for (index, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        stats.total_lines += 1;
        let split = match format {
            CorpusFormat::Lines => {
                let words: Vec<String> = line.split_whitespace().map(str::to_string).collect();
                if words.len() < prefix_len + 1 {
                    None
                } else {
                    let continuation = words[prefix_len..].to_vec();
                    let mut prefix = words;
                    prefix.truncate(prefix_len);
                    Some((prefix, continuation))
                }
            }
            CorpusFormat::Prompts => match line.split_once('\t') {
                None => None,
                Some((prompt, story)) => {
                    let prefix: Vec<String> =
                        prompt.split_whitespace().map(str::to_string).collect();
                    let continuation: Vec<String> =
                        story.split_whitespace().map(str::to_string).collect();
                    if prefix.is_empty() || continuation.is_empty() {
                        None
                    } else {
                        Some((prefix, continuation))
                    }
                }
            },
        };
        match split {
            Some((prefix_words, continuation_words)) => instances.push(Instance {
                index,
                prefix_words,
                continuation_words,
            }),
            None => stats.skipped_short += 1,
        }
    }
    stats.usable = instances.len();
    if instances.is_empty() {
        bail!(
            "no usable instances in {} ({} lines, {} skipped as too short)",
            path.display(),
            stats.total_lines,
            stats.skipped_short
        );
    }
    if instances.len() > num_instances {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut chosen =
            rand::seq::index::sample(&mut rng, instances.len(), num_instances).into_vec();
        chosen.sort_unstable();
        instances = chosen.into_iter().map(|i| instances[i].clone()).collect();
    }
    stats.sampled = instances.len();
    Ok((instances, stats))
}
