//! The experiment runner: decode every instance with every configured
//! decoder, evaluate, and write the report files.

use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use anyhow::{Context, Result};
use lookback_core::eval::{
    coherence, diversity_from_reps, mauve, rep_n, MauveConfig, TfIdfEmbedder,
};
use lookback_core::{decode, tokenize, ConditionalLM, DecodeConfig, GenerationRecord, TokenSeq};

use crate::backend::resolve_backend;
use crate::config::ExperimentConfig;
use crate::ingest::{ingest_corpus, Instance};
use crate::report;

/// One row of the metrics report. rep-n values are fractions here; the
/// CSV layer reports them on the x100 scale.
#[derive(Debug, Clone)]
pub struct DecoderMetrics {
    pub label: String,
    pub rep2: Option<f64>,
    pub rep3: Option<f64>,
    pub rep4: Option<f64>,
    pub diversity: Option<f64>,
    pub mauve: Option<f64>,
    pub coherence: Option<f64>,
    /// "ok", or "error: ..." when the backend aborted this decoder.
    pub status: String,
}

impl DecoderMetrics {
    fn failed(label: &str, message: &str) -> Self {
        Self {
            label: label.to_string(),
            rep2: None,
            rep3: None,
            rep4: None,
            diversity: None,
            mauve: None,
            coherence: None,
            status: format!("error: {message}"),
        }
    }
}

#[derive(Debug)]
pub struct ExperimentOutcome {
    /// Human reference row first, then one row per decoder in grid order.
    pub rows: Vec<DecoderMetrics>,
    pub metrics_csv: PathBuf,
    pub generation_files: Vec<PathBuf>,
    pub instances_used: usize,
}

/// Tokenized evaluation instance.
pub(crate) struct EvalInstance {
    pub index: usize,
    pub prefix: TokenSeq,
    pub human: TokenSeq,
}

pub(crate) fn tokenize_instances(
    lm: &dyn ConditionalLM,
    instances: &[Instance],
) -> Vec<EvalInstance> {
    instances
        .iter()
        .map(|inst| EvalInstance {
            index: inst.index,
            prefix: tokenize(&inst.prefix_words.join(" "), lm.vocab()),
            human: tokenize(&inst.continuation_words.join(" "), lm.vocab()),
        })
        .collect()
}

/// Per-instance decoding seed: offset the experiment seed by the stable
/// instance index so every decoder sees the same per-instance stream.
pub(crate) fn instance_seed(base: u64, index: usize) -> u64 {
    base.wrapping_add(index as u64)
}

/// Decode all instances, up to `workers` concurrently. Results come back
/// in instance order regardless of scheduling.
pub(crate) fn decode_all(
    lm: &dyn ConditionalLM,
    instances: &[EvalInstance],
    decoder: &DecodeConfig,
    base_seed: u64,
    max_new_tokens: usize,
    workers: usize,
) -> lookback_core::Result<Vec<GenerationRecord>> {
    let slots: Mutex<Vec<Option<lookback_core::Result<GenerationRecord>>>> =
        Mutex::new((0..instances.len()).map(|_| None).collect());
    let cursor = AtomicUsize::new(0);
    std::thread::scope(|scope| {
        for _ in 0..workers.max(1).min(instances.len().max(1)) {
            scope.spawn(|| loop {
                let i = cursor.fetch_add(1, Ordering::SeqCst);
                let Some(instance) = instances.get(i) else {
                    break;
                };
                let cfg = DecodeConfig {
                    seed: instance_seed(base_seed, instance.index),
                    max_new_tokens,
                    ..*decoder
                };
                let result = decode(lm, &instance.prefix, &cfg);
                slots.lock().unwrap()[i] = Some(result);
            });
        }
    });
    slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|slot| slot.expect("every slot filled"))
        .collect()
}

fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// rep-n means, diversity, and mean coherence for a set of continuations.
/// Instances whose continuation embeds to the zero vector (an empty or
/// all-unknown text) are skipped in the coherence mean.
fn text_metrics(
    instances: &[EvalInstance],
    continuations: &[TokenSeq],
    embedder: &TfIdfEmbedder,
) -> (f64, f64, f64, f64, Option<f64>) {
    let rep2 = mean(
        &continuations
            .iter()
            .map(|c| rep_n(c, 2))
            .collect::<Vec<_>>(),
    );
    let rep3 = mean(
        &continuations
            .iter()
            .map(|c| rep_n(c, 3))
            .collect::<Vec<_>>(),
    );
    let rep4 = mean(
        &continuations
            .iter()
            .map(|c| rep_n(c, 4))
            .collect::<Vec<_>>(),
    );
    let diversity = diversity_from_reps([rep2, rep3, rep4]);
    let mut coherences = Vec::new();
    for (instance, continuation) in instances.iter().zip(continuations) {
        if let Ok(value) = coherence(&instance.prefix, continuation, embedder) {
            coherences.push(value);
        }
    }
    let coherence_mean = if coherences.is_empty() {
        None
    } else {
        Some(mean(&coherences))
    };
    (rep2, rep3, rep4, diversity, coherence_mean)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutcome> {
    let lm = resolve_backend(cfg)?;
    let test_path = cfg
        .corpus
        .test
        .as_ref()
        .context("[corpus] test path is required for evaluation")?;
    let (instances, _stats) = ingest_corpus(
        test_path,
        cfg.format,
        cfg.prefix_len,
        cfg.num_instances,
        cfg.seed,
    )?;
    let eval_instances = tokenize_instances(lm.as_ref(), &instances);

    // One document per instance for the idf statistics.
    let docs: Vec<TokenSeq> = eval_instances
        .iter()
        .map(|inst| {
            let mut ids = inst.prefix.ids.clone();
            ids.extend_from_slice(&inst.human.ids);
            TokenSeq::new(ids)
        })
        .collect();
    let embedder = TfIdfEmbedder::fit(&docs, lm.vocab().len());
    let mauve_cfg = MauveConfig {
        seed: cfg.seed,
        ..MauveConfig::default()
    };

    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;

    let human_texts: Vec<TokenSeq> = eval_instances.iter().map(|i| i.human.clone()).collect();
    let (h2, h3, h4, hdiv, hcoh) = text_metrics(&eval_instances, &human_texts, &embedder);
    let mut rows = vec![DecoderMetrics {
        label: "human".to_string(),
        rep2: Some(h2),
        rep3: Some(h3),
        rep4: Some(h4),
        diversity: Some(hdiv),
        mauve: None,
        coherence: hcoh,
        status: "ok".to_string(),
    }];

    let mut generation_files = Vec::new();
    for (label, decoder) in &cfg.decoders {
        match decode_all(
            lm.as_ref(),
            &eval_instances,
            decoder,
            cfg.seed,
            cfg.max_new_tokens,
            cfg.workers,
        ) {
            Ok(records) => {
                let continuations: Vec<TokenSeq> =
                    records.iter().map(|r| r.continuation.clone()).collect();
                let (r2, r3, r4, div, coh) =
                    text_metrics(&eval_instances, &continuations, &embedder);
                let mauve_score = mauve(&human_texts, &continuations, &embedder, &mauve_cfg)?;
                rows.push(DecoderMetrics {
                    label: label.clone(),
                    rep2: Some(r2),
                    rep3: Some(r3),
                    rep4: Some(r4),
                    diversity: Some(div),
                    mauve: Some(mauve_score),
                    coherence: coh,
                    status: "ok".to_string(),
                });
                let path = cfg.out_dir.join(format!("generations_{label}.jsonl"));
                report::write_generations_jsonl(&path, &records)?;
                generation_files.push(path);
            }
            Err(e) => rows.push(DecoderMetrics::failed(label, &e.to_string())),
        }
    }

    let metrics_csv = cfg.out_dir.join("metrics.csv");
    report::write_metrics_csv(&metrics_csv, &rows)?;
    Ok(ExperimentOutcome {
        rows,
        metrics_csv,
        generation_files,
        instances_used: eval_instances.len(),
    })
}
