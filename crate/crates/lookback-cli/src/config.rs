//! Experiment configuration and its file format.
//!
//! The config file is a small sectioned key-value format, parsed
//! fail-fast: unknown sections, unknown keys, duplicate keys, and missing
//! required keys are all errors. Full-line `#` comments and blank lines
//! are ignored. Relative paths resolve against the config file's
//! directory. See the README for a complete annotated example.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{anyhow, bail, Context, Result};
use lookback_core::{Algorithm, CandidateMode, DecodeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CorpusFormat {
    /// One document per line, whitespace tokens; the prefix is the first
    /// `prefix_len` tokens.
    Lines,
    /// Tab-separated `prompt<TAB>story` lines; the whole first field is
    /// the prefix.
    Prompts,
}

#[derive(Debug, Clone)]
pub struct CorpusPaths {
    pub train: PathBuf,
    pub validation: Option<PathBuf>,
    pub test: Option<PathBuf>,
}

#[derive(Debug, Clone)]
pub enum BackendSpec {
    Ngram {
        order: usize,
        add_k: f64,
        /// Interpolation weights; `None` means uniform over orders.
        lambdas: Option<Vec<f64>>,
        /// Load a saved model instead of training from the train corpus.
        model: Option<PathBuf>,
    },
    Remote {
        endpoint: String,
        top_n: usize,
        timeout: Duration,
        retries: u32,
        vocab: PathBuf,
    },
}

#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub ks: Vec<usize>,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub alpha_step: f64,
    pub mode: CandidateMode,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ks: vec![5, 8, 10],
            alpha_min: 0.5,
            alpha_max: 1.6,
            alpha_step: 0.1,
            mode: CandidateMode::Softmax,
        }
    }
}

impl SweepSpec {
    /// The alpha grid: `alpha_min`, `alpha_min + step`, ... up to
    /// `alpha_max` inclusive (within half a step of rounding).
    pub fn alphas(&self) -> Vec<f64> {
        let mut out = Vec::new();
        let mut i = 0u32;
        loop {
            let alpha = self.alpha_min + f64::from(i) * self.alpha_step;
            if alpha > self.alpha_max + self.alpha_step / 2.0 {
                break;
            }
            out.push(alpha);
            i += 1;
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub corpus: CorpusPaths,
    pub format: CorpusFormat,
    pub prefix_len: usize,
    pub num_instances: usize,
    pub max_new_tokens: usize,
    pub seed: u64,
    pub out_dir: PathBuf,
    pub workers: usize,
    pub backend: BackendSpec,
    /// Labelled decoder grid, in file order.
    pub decoders: Vec<(String, DecodeConfig)>,
    pub sweep: Option<SweepSpec>,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        let cfg = Self::parse(&text, base)?;
        cfg.validate_paths()?;
        Ok(cfg)
    }

    /// Parse the config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let sections = split_sections(text)?;
        let mut corpus = None;
        let mut experiment = Section::empty("experiment");
        let mut backend = None;
        let mut decoders = Vec::new();
        let mut sweep = None;

        for section in sections {
            match section.name.as_str() {
                "corpus" => corpus = Some(parse_corpus(&section, base)?),
                "experiment" => experiment = section,
                "backend" => backend = Some(parse_backend(&section, base)?),
                "sweep" => sweep = Some(parse_sweep(&section)?),
                name => {
                    if let Some(label) = name.strip_prefix("decoder ") {
                        decoders.push((label.trim().to_string(), parse_decoder(&section)?));
                    } else {
                        bail!("unknown section [{name}]");
                    }
                }
            }
        }

        let (corpus, format) = corpus.ok_or_else(|| anyhow!("missing [corpus] section"))?;
        let backend = backend.ok_or_else(|| anyhow!("missing [backend] section"))?;

        let mut exp = experiment;
        let prefix_len = exp.take_parse("prefix_len")?.unwrap_or(32usize);
        let num_instances = exp.take_parse("num_instances")?.unwrap_or(1000usize);
        let max_new_tokens = exp.take_parse("max_new_tokens")?.unwrap_or(256usize);
        let seed = exp.take_parse("seed")?.unwrap_or(0u64);
        let workers = exp.take_parse("workers")?.unwrap_or(1usize);
        let out_dir = base.join(exp.take("out")?.unwrap_or_else(|| "out".to_string()));
        exp.finish()?;

        if prefix_len < 1 {
            bail!("prefix_len must be >= 1");
        }
        if num_instances < 1 {
            bail!("num_instances must be >= 1");
        }
        if workers < 1 {
            bail!("workers must be >= 1");
        }
        for (label, decoder) in &decoders {
            decoder
                .validate()
                .map_err(|e| anyhow!("decoder {label}: {e}"))?;
        }

        Ok(Self {
            corpus,
            format,
            prefix_len,
            num_instances,
            max_new_tokens,
            seed,
            out_dir,
            workers,
            backend,
            decoders,
            sweep,
        })
    }

    fn validate_paths(&self) -> Result<()> {
        let mut paths = vec![("train", Some(&self.corpus.train))];
        paths.push(("validation", self.corpus.validation.as_ref()));
        paths.push(("test", self.corpus.test.as_ref()));
        for (name, path) in paths.into_iter() {
            if let Some(path) = path {
                if !path.exists() {
                    bail!("{name} corpus {} does not exist", path.display());
                }
            }
        }
        if let BackendSpec::Ngram {
            model: Some(model), ..
        } = &self.backend
        {
            if !model.exists() {
                bail!("model file {} does not exist", model.display());
            }
        }
        if let BackendSpec::Remote { vocab, .. } = &self.backend {
            if !vocab.exists() {
                bail!("vocabulary file {} does not exist", vocab.display());
            }
        }
        Ok(())
    }
}

/// One parsed `[section]` with its key-value pairs. Keys are consumed by
/// the section parsers; leftovers are unknown-key errors.
struct Section {
    name: String,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn empty(name: &str) -> Self {
        Self {
            name: name.to_string(),
            entries: BTreeMap::new(),
        }
    }

    fn take(&mut self, key: &str) -> Result<Option<String>> {
        Ok(self.entries.remove(key))
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.entries
            .remove(key)
            .ok_or_else(|| anyhow!("[{}] is missing required key {key}", self.name))
    }

    fn take_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.entries.remove(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|e| anyhow!("[{}] key {key}: invalid value {raw:?}: {e}", self.name)),
        }
    }

    fn require_parse<T: std::str::FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.take_parse(key)?
            .ok_or_else(|| anyhow!("[{}] is missing required key {key}", self.name))
    }

    fn finish(self) -> Result<()> {
        if let Some(key) = self.entries.keys().next() {
            bail!("[{}] has unknown key {key:?}", self.name);
        }
        Ok(())
    }
}

fn split_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| anyhow!("line {}: malformed section header", lineno + 1))?
                .trim()
                .to_string();
            if sections.iter().any(|s| s.name == name) {
                bail!("line {}: duplicate section [{name}]", lineno + 1);
            }
            sections.push(Section::empty(&name));
            continue;
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| anyhow!("line {}: key outside of any section", lineno + 1))?;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| anyhow!("line {}: expected key = value", lineno + 1))?;
        let key = key.trim().to_string();
        if section
            .entries
            .insert(key.clone(), value.trim().to_string())
            .is_some()
        {
            bail!(
                "line {}: duplicate key {key:?} in [{}]",
                lineno + 1,
                section.name
            );
        }
    }
    Ok(sections)
}

fn parse_corpus(section: &Section, base: &Path) -> Result<(CorpusPaths, CorpusFormat)> {
    let mut s = Section {
        name: section.name.clone(),
        entries: section.entries.clone(),
    };
    let train = base.join(s.require("train")?);
    let validation = s.take("validation")?.map(|p| base.join(p));
    let test = s.take("test")?.map(|p| base.join(p));
    let format = match s.take("format")?.as_deref() {
        None | Some("lines") => CorpusFormat::Lines,
        Some("prompts") => CorpusFormat::Prompts,
        Some(other) => bail!("[corpus] format must be lines or prompts, got {other:?}"),
    };
    s.finish()?;
    Ok((
        CorpusPaths {
            train,
            validation,
            test,
        },
        format,
    ))
}

fn parse_lambdas(raw: &str, order: usize) -> Result<Option<Vec<f64>>> {
    if raw == "uniform" {
        return Ok(None);
    }
    let values: Vec<f64> = raw
        .split(',')
        .map(|v| v.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| anyhow!("invalid lambdas {raw:?}: {e}"))?;
    if values.len() != order {
        bail!("expected {order} lambdas, got {}", values.len());
    }
    Ok(Some(values))
}

fn parse_backend(section: &Section, base: &Path) -> Result<BackendSpec> {
    let mut s = Section {
        name: section.name.clone(),
        entries: section.entries.clone(),
    };
    let kind = s.require("kind")?;
    let spec = match kind.as_str() {
        "ngram" => {
            let order = s.take_parse("order")?.unwrap_or(3usize);
            let add_k = s.take_parse("add_k")?.unwrap_or(0.1f64);
            let lambdas = match s.take("lambdas")? {
                None => None,
                Some(raw) => parse_lambdas(&raw, order)?,
            };
            let model = s.take("model")?.map(|p| base.join(p));
            BackendSpec::Ngram {
                order,
                add_k,
                lambdas,
                model,
            }
        }
        "remote" => BackendSpec::Remote {
            endpoint: s.require("endpoint")?,
            top_n: s.require_parse("top_n")?,
            timeout: Duration::from_millis(s.take_parse("timeout_ms")?.unwrap_or(10_000u64)),
            retries: s.take_parse("retries")?.unwrap_or(2u32),
            vocab: base.join(s.require("vocab")?),
        },
        other => bail!("[backend] kind must be ngram or remote, got {other:?}"),
    };
    s.finish()?;
    Ok(spec)
}

fn parse_mode(raw: &str) -> Result<CandidateMode> {
    match raw {
        "uniform" => Ok(CandidateMode::Uniform),
        "softmax" => Ok(CandidateMode::Softmax),
        other => bail!("mode must be uniform or softmax, got {other:?}"),
    }
}

fn parse_decoder(section: &Section) -> Result<DecodeConfig> {
    let mut s = Section {
        name: section.name.clone(),
        entries: section.entries.clone(),
    };
    let algorithm = match s.require("algorithm")?.as_str() {
        "greedy" => Algorithm::Greedy,
        "nucleus" => Algorithm::Nucleus {
            top_p: s.require_parse("top_p")?,
        },
        "typical" => Algorithm::Typical {
            tau: s.require_parse("tau")?,
        },
        "eta" => Algorithm::Eta {
            eta: s.require_parse("eta")?,
        },
        "contrastive" => Algorithm::Contrastive {
            k: s.require_parse("k")?,
            penalty: s.require_parse("penalty")?,
        },
        "lookback" => Algorithm::Lookback {
            k: s.require_parse("k")?,
            alpha: s.require_parse("alpha")?,
            mode: parse_mode(&s.take("mode")?.unwrap_or_else(|| "softmax".to_string()))?,
        },
        other => bail!("[{}] unknown algorithm {other:?}", section.name),
    };
    s.finish()?;
    Ok(DecodeConfig::new(algorithm))
}

fn parse_sweep(section: &Section) -> Result<SweepSpec> {
    let mut s = Section {
        name: section.name.clone(),
        entries: section.entries.clone(),
    };
    let defaults = SweepSpec::default();
    let ks = match s.take("k")? {
        None => defaults.ks,
        Some(raw) => raw
            .split(',')
            .map(|v| v.trim().parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| anyhow!("[sweep] invalid k list: {e}"))?,
    };
    let spec = SweepSpec {
        ks,
        alpha_min: s.take_parse("alpha_min")?.unwrap_or(defaults.alpha_min),
        alpha_max: s.take_parse("alpha_max")?.unwrap_or(defaults.alpha_max),
        alpha_step: s.take_parse("alpha_step")?.unwrap_or(defaults.alpha_step),
        mode: match s.take("mode")? {
            None => defaults.mode,
            Some(raw) => parse_mode(&raw)?,
        },
    };
    s.finish()?;
    if spec.ks.is_empty() {
        bail!("[sweep] k grid is empty");
    }
    if spec.alpha_step <= 0.0 || spec.alpha_max < spec.alpha_min {
        bail!("[sweep] alpha grid is empty or inverted");
    }
    Ok(spec)
}
