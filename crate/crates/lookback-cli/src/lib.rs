//! Experiment layer over `lookback-core`: corpus ingestion, decoding runs
//! across instance sets, metric reports, hyperparameter sweeps with the
//! rep-2/MAUVE selection rule, and CSV diagnostics export.
//!
//! Everything here is deterministic given the experiment config and seed:
//! instance sampling, per-instance decoding seeds, k-means seeding, and
//! report layout - two runs of the same config produce byte-identical
//! output files.

pub mod backend;
pub mod config;
pub mod diagnostics;
pub mod experiment;
pub mod ingest;
pub mod report;
pub mod sweep;

pub use config::{BackendSpec, CorpusFormat, ExperimentConfig, SweepSpec};
pub use experiment::{run_experiment, DecoderMetrics, ExperimentOutcome};
pub use ingest::{ingest_corpus, IngestStats, Instance};
pub use sweep::{sweep_and_select, SweepResult, SweepRow};
