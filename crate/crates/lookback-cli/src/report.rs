//! Report writers. All numbers print in Rust's shortest round-trip form
//! so downstream tooling can re-derive selections exactly; rep-n columns
//! are reported on the conventional x100 scale.

use std::path::Path;

use anyhow::{Context, Result};
use lookback_core::GenerationRecord;

use crate::experiment::DecoderMetrics;
use crate::sweep::SweepResult;

fn cell(value: Option<f64>) -> String {
    value.map(|v| v.to_string()).unwrap_or_default()
}

fn cell_x100(value: Option<f64>) -> String {
    value.map(|v| (v * 100.0).to_string()).unwrap_or_default()
}

/// `metrics.csv`: decoder, rep-2, rep-3, rep-4, diversity, mauve,
/// coherence, status. The human reference row has no MAUVE.
pub fn write_metrics_csv(path: &Path, rows: &[DecoderMetrics]) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    writer.write_record([
        "decoder",
        "rep-2",
        "rep-3",
        "rep-4",
        "diversity",
        "mauve",
        "coherence",
        "status",
    ])?;
    for row in rows {
        writer.write_record([
            row.label.clone(),
            cell_x100(row.rep2),
            cell_x100(row.rep3),
            cell_x100(row.rep4),
            cell(row.diversity),
            cell(row.mauve),
            cell(row.coherence),
            row.status.clone(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// `sweep.csv`: one row per (k, alpha) grid point with the validation
/// rep-2 (x100), MAUVE, the human rep-2 reference, and a selected marker.
pub fn write_sweep_csv(path: &Path, result: &SweepResult) -> Result<()> {
    let mut writer =
        csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["k", "alpha", "rep-2", "mauve", "rep-2-human", "selected"])?;
    for row in &result.rows {
        let selected = row.k == result.selected.0 && row.alpha == result.selected.1;
        writer.write_record([
            row.k.to_string(),
            row.alpha.to_string(),
            (row.rep2 * 100.0).to_string(),
            row.mauve.to_string(),
            (result.rep2_human * 100.0).to_string(),
            if selected { "1" } else { "0" }.to_string(),
        ])?;
    }
    writer.flush()?;
    Ok(())
}

/// One JSON record per line.
pub fn write_generations_jsonl(path: &Path, records: &[GenerationRecord]) -> Result<()> {
    let mut out = String::new();
    for record in records {
        out.push_str(&serde_json::to_string(record)?);
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

/// Read records back from a JSONL file.
pub fn read_generations_jsonl(path: &Path) -> Result<Vec<GenerationRecord>> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    text.lines()
        .enumerate()
        .filter(|(_, line)| !line.trim().is_empty())
        .map(|(i, line)| {
            serde_json::from_str(line).with_context(|| format!("record on line {}", i + 1))
        })
        .collect()
}
