//! `lookback` - decoding experiments from the command line.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use lookback_cli::backend::train_ngram_from_corpus;
use lookback_cli::config::CorpusFormat;
use lookback_cli::diagnostics::export_diagnostics;
use lookback_cli::{ingest_corpus, report, run_experiment, sweep_and_select, ExperimentConfig};
use lookback_core::{
    decode, detokenize, tokenize, Algorithm, CandidateMode, ConditionalLM, DecodeConfig,
    NGramModel, RemoteLm, RemoteLmConfig, Vocabulary,
};

#[derive(Parser)]
#[command(
    name = "lookback",
    about = "Decoding-algorithms toolkit: KL-signal look-back decoding, baselines, metrics, sweeps, diagnostics",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Lines,
    Prompts,
}

impl From<FormatArg> for CorpusFormat {
    fn from(value: FormatArg) -> Self {
        match value {
            FormatArg::Lines => CorpusFormat::Lines,
            FormatArg::Prompts => CorpusFormat::Prompts,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Greedy,
    Nucleus,
    Typical,
    Eta,
    Contrastive,
    Lookback,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Uniform,
    Softmax,
}

/// Flags shared by every subcommand that needs a backend.
#[derive(Args)]
struct BackendArgs {
    /// Path to a saved n-gram model.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Remote log-prob endpoint (requires --vocab).
    #[arg(long, conflicts_with = "model")]
    endpoint: Option<String>,
    /// Vocabulary file for the remote backend.
    #[arg(long, requires = "endpoint")]
    vocab: Option<PathBuf>,
    /// Log-probs requested per remote call.
    #[arg(long, default_value_t = 50)]
    top_n: usize,
    /// Remote request timeout in milliseconds.
    #[arg(long, default_value_t = 10_000)]
    timeout_ms: u64,
    /// Remote retry count.
    #[arg(long, default_value_t = 2)]
    retries: u32,
}

impl BackendArgs {
    fn resolve(&self) -> Result<Box<dyn ConditionalLM>> {
        match (&self.model, &self.endpoint) {
            (Some(model), None) => {
                Ok(Box::new(NGramModel::load(model).with_context(|| {
                    format!("loading model {}", model.display())
                })?))
            }
            (None, Some(endpoint)) => {
                let vocab_path = self.vocab.as_ref().context("--endpoint requires --vocab")?;
                let vocab = Vocabulary::load(vocab_path)?;
                Ok(Box::new(RemoteLm::new(
                    RemoteLmConfig {
                        endpoint: endpoint.clone(),
                        top_n: self.top_n,
                        timeout: std::time::Duration::from_millis(self.timeout_ms),
                        retries: self.retries,
                    },
                    vocab,
                )?))
            }
            (None, None) => bail!("one of --model or --endpoint is required"),
            (Some(_), Some(_)) => unreachable!("clap conflicts_with"),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Train an interpolated add-k n-gram model on a text corpus.
    TrainLm {
        /// Corpus file, one document per line (tabs count as whitespace,
        /// so prompts-format corpora train as-is).
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = 3)]
        order: usize,
        #[arg(long, default_value_t = 0.1)]
        add_k: f64,
        /// Comma-separated interpolation weights, or "uniform".
        #[arg(long, default_value = "uniform")]
        lambdas: String,
        /// Output model path (JSON container).
        #[arg(long)]
        out: PathBuf,
        /// Also write the vocabulary file here.
        #[arg(long)]
        vocab_out: Option<PathBuf>,
    },
    /// Decode a single prefix or a corpus of instances.
    Decode {
        #[command(flatten)]
        backend: BackendArgs,
        /// Literal prefix text to continue.
        #[arg(long, conflicts_with = "corpus")]
        prefix_text: Option<String>,
        /// Corpus file: decodes the sampled instances' prefixes.
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = FormatArg::Lines)]
        format: FormatArg,
        #[arg(long, default_value_t = 32)]
        prefix_len: usize,
        #[arg(long, default_value_t = 1000)]
        num_instances: usize,
        #[arg(long, value_enum)]
        algorithm: AlgorithmArg,
        #[arg(long, default_value_t = 0.95)]
        top_p: f64,
        #[arg(long, default_value_t = 0.92)]
        tau: f64,
        #[arg(long, default_value_t = 0.0003)]
        eta: f64,
        /// Candidate count for contrastive and look-back.
        #[arg(long, default_value_t = 5)]
        k: usize,
        /// Repetition-alarm threshold for look-back.
        #[arg(long, default_value_t = 0.8, allow_hyphen_values = true)]
        alpha: f64,
        /// Degeneration penalty for contrastive search.
        #[arg(long, default_value_t = 0.6)]
        penalty: f64,
        /// Candidate selection mode for look-back.
        #[arg(long, value_enum, default_value_t = ModeArg::Softmax)]
        mode: ModeArg,
        #[arg(long, default_value_t = 256)]
        max_new_tokens: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output JSONL file for the generation records.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Print the decoded text to stdout.
        #[arg(long)]
        print_text: bool,
    },
    /// Run the full experiment described by a config file.
    Evaluate {
        #[arg(long)]
        config: PathBuf,
        /// Override the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the config output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the look-back (k, alpha) grid on the validation split.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export KL heatmap, min-KL curves, and alarm annotations for a
    /// recorded generation.
    Diagnose {
        /// Generations JSONL file written by decode or evaluate.
        #[arg(long)]
        records: PathBuf,
        #[command(flatten)]
        backend: BackendArgs,
        /// Which record in the file to diagnose.
        #[arg(long, default_value_t = 0)]
        index: usize,
        /// Add per-sequence min-max normalized curve columns.
        #[arg(long)]
        normalized: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn parse_lambdas_arg(raw: &str, order: usize) -> Result<Vec<f64>> {
    if raw == "uniform" {
        return Ok(NGramModel::uniform_lambdas(order));
    }
    let values: Vec<f64> = raw
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .context("parsing --lambdas")?;
    Ok(values)
}

fn build_algorithm(
    cmd_args: (&AlgorithmArg, f64, f64, f64, usize, f64, f64, ModeArg),
) -> Algorithm {
    let (algorithm, top_p, tau, eta, k, alpha, penalty, mode) = cmd_args;
    match algorithm {
        AlgorithmArg::Greedy => Algorithm::Greedy,
        AlgorithmArg::Nucleus => Algorithm::Nucleus { top_p },
        AlgorithmArg::Typical => Algorithm::Typical { tau },
        AlgorithmArg::Eta => Algorithm::Eta { eta },
        AlgorithmArg::Contrastive => Algorithm::Contrastive { k, penalty },
        AlgorithmArg::Lookback => Algorithm::Lookback {
            k,
            alpha,
            mode: match mode {
                ModeArg::Uniform => CandidateMode::Uniform,
                ModeArg::Softmax => CandidateMode::Softmax,
            },
        },
    }
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::TrainLm {
            corpus,
            order,
            add_k,
            lambdas,
            out,
            vocab_out,
        } => {
            let lambdas = parse_lambdas_arg(&lambdas, order)?;
            let model = train_ngram_from_corpus(&corpus, order, add_k, Some(&lambdas))?;
            model.save(&out)?;
            if let Some(vocab_path) = vocab_out {
                model.vocab().save(&vocab_path)?;
            }
            println!(
                "trained {} on {} (|V| = {}), saved to {}",
                model.backend_id(),
                corpus.display(),
                model.vocab().len(),
                out.display()
            );
        }
        Command::Decode {
            backend,
            prefix_text,
            corpus,
            format,
            prefix_len,
            num_instances,
            algorithm,
            top_p,
            tau,
            eta,
            k,
            alpha,
            penalty,
            mode,
            max_new_tokens,
            seed,
            out,
            print_text,
        } => {
            let lm = backend.resolve()?;
            let algorithm = build_algorithm((&algorithm, top_p, tau, eta, k, alpha, penalty, mode));
            let config = DecodeConfig::new(algorithm)
                .with_max_new_tokens(max_new_tokens)
                .with_seed(seed);
            let prefixes = match (&prefix_text, &corpus) {
                (Some(text), None) => vec![tokenize(text, lm.vocab())],
                (None, Some(path)) => {
                    let (instances, stats) =
                        ingest_corpus(path, format.into(), prefix_len, num_instances, seed)?;
                    eprintln!(
                        "ingested {} instances ({} skipped as too short)",
                        stats.sampled, stats.skipped_short
                    );
                    instances
                        .iter()
                        .map(|i| tokenize(&i.prefix_words.join(" "), lm.vocab()))
                        .collect()
                }
                _ => bail!("exactly one of --prefix-text or --corpus is required"),
            };
            let mut records = Vec::new();
            for (i, prefix) in prefixes.iter().enumerate() {
                let cfg = DecodeConfig {
                    seed: seed.wrapping_add(i as u64),
                    ..config
                };
                let record = decode(lm.as_ref(), prefix, &cfg)?;
                if print_text {
                    println!("{}", detokenize(&record.continuation, lm.vocab()));
                }
                records.push(record);
            }
            if let Some(path) = out {
                report::write_generations_jsonl(&path, &records)?;
                eprintln!("wrote {} records to {}", records.len(), path.display());
            }
        }
        Command::Evaluate { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let outcome = run_experiment(&cfg)?;
            println!(
                "evaluated {} decoders on {} instances -> {}",
                outcome.rows.len() - 1,
                outcome.instances_used,
                outcome.metrics_csv.display()
            );
            for row in &outcome.rows {
                println!("  {}: {}", row.label, row.status);
            }
        }
        Command::Sweep { config, seed, out } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.out_dir = out;
            }
            let result = sweep_and_select(&cfg)?;
            println!(
                "swept {} configs -> {}; selected k = {}, alpha = {}",
                result.rows.len(),
                result.csv_path.display(),
                result.selected.0,
                result.selected.1
            );
        }
        Command::Diagnose {
            records,
            backend,
            index,
            normalized,
            out,
        } => {
            let lm = backend.resolve()?;
            let all = report::read_generations_jsonl(&records)?;
            let record = all.get(index).with_context(|| {
                format!("record index {index} out of range ({} records)", all.len())
            })?;
            let files = export_diagnostics(record, lm.as_ref(), &out, normalized)?;
            println!(
                "wrote {}, {}, {}",
                files.heatmap.display(),
                files.curves.display(),
                files.alarms.display()
            );
        }
    }
    Ok(())
}
