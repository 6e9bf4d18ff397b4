//! Deterministic toy corpora and models shared by tests and benchmarks.
//!
//! Three fixtures cover the behaviors the decoders are tested against:
//!
//! - [`cycle_model`]: a single-cycle corpus whose greedy continuation is a
//!   verbatim loop, driving the repetition signal to zero;
//! - [`two_topic_model`]: two token-disjoint sub-corpora (topic `a*` and a
//!   heavier topic `b*`), where unconstrained sampling readily jumps
//!   topics and the drift signal separates on-topic from off-topic text;
//! - [`high_entropy_model`]: a near-uniform unigram model for exercising
//!   samplers away from peaked distributions.

use crate::lm::{ConditionalLM, NGramModel};
use crate::vocab::{tokenize, TokenSeq};

/// Period of the cycle fixture's token loop.
pub const CYCLE_PERIOD: usize = 4;

fn cycle_tokens() -> Vec<String> {
    (0..CYCLE_PERIOD).map(|i| format!("c{i}")).collect()
}

/// One long line looping `c0 c1 c2 c3` sixty times, trained as an
/// interpolated trigram model. Greedy decoding from any in-cycle context
/// reproduces the cycle indefinitely.
pub fn cycle_model() -> NGramModel {
    let tokens = cycle_tokens();
    let line = (0..60)
        .flat_map(|_| tokens.iter().cloned())
        .collect::<Vec<_>>()
        .join(" ");
    NGramModel::train_from_text(&[line], 3, 0.1, &[0.1, 0.3, 0.6]).expect("fixture corpus trains")
}

/// Standard six-token prefix into the cycle: every cycle context window
/// already occurs inside it.
pub fn cycle_prefix(model: &NGramModel) -> TokenSeq {
    phase_prefix(model, 0, CYCLE_PERIOD + 2)
}

/// A prefix of `len` cycle tokens starting at `phase`.
pub fn phase_prefix(model: &NGramModel, phase: usize, len: usize) -> TokenSeq {
    let tokens = cycle_tokens();
    let text = (0..len)
        .map(|i| tokens[(phase + i) % CYCLE_PERIOD].clone())
        .collect::<Vec<_>>()
        .join(" ");
    tokenize(&text, model.vocab())
}

/// `n` varied prefixes into the cycle (different phases and lengths).
pub fn cycle_prefixes(model: &NGramModel, n: usize) -> Vec<TokenSeq> {
    (0..n)
        .map(|i| phase_prefix(model, i % CYCLE_PERIOD, 4 + i % 5))
        .collect()
}

/// Two token-disjoint topics joined by a rare bridge. Topic `a0..a5` and
/// topic `b0..b5` are both cyclic; a handful of bridge lines go
/// `a2 jmp y0 y1 b0 ...`, so at the `(a1, a2)` context the `jmp` token is
/// a genuine top-k candidate whose continuation leaves the topic. The
/// bridge tokens are rare, which keeps the distribution after `jmp` far
/// from every prefix-position distribution (the empty-context unigram
/// included) - the lookahead KL separates the drifting candidate cleanly
/// from the on-topic ones.
pub fn two_topic_model() -> NGramModel {
    let a: Vec<String> = (0..6).map(|i| format!("a{i}")).collect();
    let b: Vec<String> = (0..6).map(|i| format!("b{i}")).collect();
    let a_line = (0..15)
        .flat_map(|_| a.iter().cloned())
        .collect::<Vec<_>>()
        .join(" ");
    let b_line = (0..12)
        .flat_map(|_| b.iter().cloned())
        .collect::<Vec<_>>()
        .join(" ");
    let bridge = "a0 a1 a2 jmp y0 y1 b0 b1 b2 b3 b4 b5".to_string();
    let mut lines = vec![
        a_line.clone(),
        a_line.clone(),
        a_line,
        b_line.clone(),
        b_line,
    ];
    lines.extend(std::iter::repeat_n(bridge, 6));
    NGramModel::train_from_text(&lines, 3, 0.05, &[0.05, 0.9, 0.05]).expect("fixture corpus trains")
}

/// The cycle corpus with occasional two-token detours: after `c1` the
/// corpus sometimes takes `x0 y0` before rejoining at `c2`, and after
/// `c3` sometimes `x1 y1` before `c0`. Greedy still rides the main cycle,
/// but a detour token's successor distribution peaks on a token nothing
/// else predicts, which makes its representation nearly orthogonal to
/// every past step. Contrastive search exists to reward exactly that.
pub fn branching_cycle_model() -> NGramModel {
    let mut blocks = Vec::new();
    for i in 0..12 {
        blocks.push("c0 c1 c2 c3".to_string());
        blocks.push("c0 c1 c2 c3".to_string());
        if i % 2 == 0 {
            blocks.push("c0 c1 x0 y0 c2 c3".to_string());
        } else {
            blocks.push("c0 c1 c2 c3 x1 y1".to_string());
        }
    }
    let line = blocks.join(" ");
    NGramModel::train_from_text(&[line], 3, 0.05, &[0.05, 0.9, 0.05])
        .expect("fixture corpus trains")
}

/// Eight tokens of topic `a`: the on-topic prefix.
pub fn topic_prefix(model: &NGramModel) -> TokenSeq {
    tokenize("a0 a1 a2 a3 a4 a5 a0 a1", model.vocab())
}

/// `len` tokens of topic `b`: a pseudo-continuation that switches topic
/// outright.
pub fn topic_b_sequence(model: &NGramModel, len: usize) -> TokenSeq {
    let text = (0..len)
        .map(|i| format!("b{}", i % 6))
        .collect::<Vec<_>>()
        .join(" ");
    tokenize(&text, model.vocab())
}

/// Smoothed unigram over sixteen equally frequent tokens: close to
/// uniform, so sampling decoders actually explore.
pub fn high_entropy_model() -> NGramModel {
    let line = (0..16)
        .map(|i| format!("w{i}"))
        .collect::<Vec<_>>()
        .join(" ");
    NGramModel::train_from_text(&[line], 1, 1.0, &[1.0]).expect("fixture corpus trains")
}
