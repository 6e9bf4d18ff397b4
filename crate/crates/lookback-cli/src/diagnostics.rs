//! Diagnostics export: rebuild the per-step distributions of a recorded
//! generation by replaying it through the model, then write the pairwise
//! KL heatmap, the min-KL curves, and the alarm annotations as CSV.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use lookback_core::divergence::{pairwise_kl_matrix, trace_sequence};
use lookback_core::{ConditionalLM, GenerationRecord};

pub struct DiagnosticsFiles {
    pub heatmap: PathBuf,
    pub curves: PathBuf,
    pub alarms: PathBuf,
}

fn csv_number(v: f64) -> String {
    if v.is_finite() {
        v.to_string()
    } else {
        "inf".to_string()
    }
}

/// Min-max normalize to [0, 1]; constant sequences map to zero.
fn min_max_normalize(values: &[f64]) -> Vec<f64> {
    let finite: Vec<f64> = values.iter().copied().filter(|v| v.is_finite()).collect();
    let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    values
        .iter()
        .map(|&v| {
            if !v.is_finite() || hi <= lo {
                0.0
            } else {
                (v - lo) / (hi - lo)
            }
        })
        .collect()
}

/// Write `heatmap.csv`, `curves.csv`, and `alarms.csv` for one record.
/// The model must be the backend that produced the record: distributions
/// are deterministic in the context, so the replay reproduces exactly
/// what the decoder saw. With `normalized`, the curves file gains
/// per-sequence min-max normalized columns (plotting aid only; the raw
/// columns stay authoritative).
pub fn export_diagnostics(
    record: &GenerationRecord,
    lm: &dyn ConditionalLM,
    out_dir: &Path,
    normalized: bool,
) -> Result<DiagnosticsFiles> {
    std::fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;

    let trace = trace_sequence(
        lm,
        &record.prefix,
        &record.continuation,
        record.config.history_includes_prefix,
    )?;

    let heatmap = out_dir.join("heatmap.csv");
    {
        let matrix = pairwise_kl_matrix(&trace.step_dists)?;
        let mut writer = csv::Writer::from_path(&heatmap)
            .with_context(|| format!("creating {}", heatmap.display()))?;
        let mut header = vec!["step".to_string()];
        header.extend((0..matrix.len()).map(|j| j.to_string()));
        writer.write_record(&header)?;
        for (i, row) in matrix.iter().enumerate() {
            let mut cells = vec![i.to_string()];
            cells.extend(row.iter().map(|&v| csv_number(v)));
            writer.write_record(&cells)?;
        }
        writer.flush()?;
    }

    let curves = out_dir.join("curves.csv");
    {
        let mut writer = csv::Writer::from_path(&curves)
            .with_context(|| format!("creating {}", curves.display()))?;
        let history: Vec<f64> = record
            .steps
            .iter()
            .map(|s| s.signals.kl_min_history)
            .collect();
        let prefix: Vec<f64> = record
            .steps
            .iter()
            .map(|s| s.signals.kl_min_prefix)
            .collect();
        if normalized {
            writer.write_record([
                "step",
                "kl_min_history",
                "kl_min_prefix",
                "alarm",
                "kl_min_history_norm",
                "kl_min_prefix_norm",
            ])?;
            let history_norm = min_max_normalize(&history);
            let prefix_norm = min_max_normalize(&prefix);
            for (i, step) in record.steps.iter().enumerate() {
                writer.write_record([
                    i.to_string(),
                    csv_number(history[i]),
                    csv_number(prefix[i]),
                    if step.signals.alarm { "1" } else { "0" }.to_string(),
                    csv_number(history_norm[i]),
                    csv_number(prefix_norm[i]),
                ])?;
            }
        } else {
            writer.write_record(["step", "kl_min_history", "kl_min_prefix", "alarm"])?;
            for (i, step) in record.steps.iter().enumerate() {
                writer.write_record([
                    i.to_string(),
                    csv_number(history[i]),
                    csv_number(prefix[i]),
                    if step.signals.alarm { "1" } else { "0" }.to_string(),
                ])?;
            }
        }
        writer.flush()?;
    }

    let alarms = out_dir.join("alarms.csv");
    {
        let mut writer = csv::Writer::from_path(&alarms)
            .with_context(|| format!("creating {}", alarms.display()))?;
        writer.write_record(["step", "token", "kl_min_history", "candidates"])?;
        for (i, step) in record.steps.iter().enumerate() {
            if step.signals.alarm {
                writer.write_record([
                    i.to_string(),
                    step.token.to_string(),
                    csv_number(step.signals.kl_min_history),
                    step.candidates.len().to_string(),
                ])?;
            }
        }
        writer.flush()?;
    }

    Ok(DiagnosticsFiles {
        heatmap,
        curves,
        alarms,
    })
}
