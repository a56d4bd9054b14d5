//! Dataset ingestion: CSV files and the synthetic generators.

use std::path::Path;

use anyhow::{bail, Context, Result};
use sketchmeans::dataset::Dataset;
use sketchmeans::synth;
use sketchmeans::seeding;

use crate::config::{ExperimentConfig, SynthKind};

/// Stream index reserved for dataset generation.
pub const DATA_STREAM: u64 = u64::MAX - 1;

/// Numeric rectangular CSV, one point per row; row order is preserved (the
/// deterministic seeding depends on it).
pub fn load_csv(path: &Path, delimiter: char, has_header: bool) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter as u8)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;

    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width: Option<usize> = None;
    for (idx, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("row {}", idx + 1))?;
        if idx == 0 && has_header {
            continue;
        }
        let row_no = idx + 1;
        match width {
            None => width = Some(record.len()),
            Some(w) if w != record.len() => {
                bail!(
                    "row {row_no}: expected {w} columns, got {} (ragged table)",
                    record.len()
                );
            }
            _ => {}
        }
        let mut row = Vec::with_capacity(record.len());
        for (col, field) in record.iter().enumerate() {
            let value: f64 = field.trim().parse().map_err(|_| {
                anyhow::anyhow!(
                    "row {row_no}, column {}: not a number: '{field}'",
                    col + 1
                )
            })?;
            row.push(value);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("{}: no data rows", path.display());
    }
    Dataset::from_rows(&rows).map_err(|e| anyhow::anyhow!("{e}"))
}

/// Serialize a dataset in the same CSV shape `load_csv` reads.
pub fn to_csv(data: &Dataset, delimiter: char) -> String {
    let mut out = String::new();
    for i in 0..data.len() {
        let point = data.point(i);
        let fields: Vec<String> = point.iter().map(|v| format!("{v}")).collect();
        out.push_str(&fields.join(&delimiter.to_string()));
        out.push('\n');
    }
    out
}

/// The configured dataset: loaded from CSV or generated. Labels are present
/// for synthetic data.
pub fn materialize(cfg: &ExperimentConfig) -> Result<(Dataset, Option<Vec<usize>>)> {
    if let Some(path) = &cfg.input {
        let data = load_csv(path, cfg.delimiter, cfg.has_header)?;
        return Ok((data, None));
    }
    let Some(kind) = cfg.synth else {
        bail!("no dataset configured");
    };
    let mut rng = seeding::trial_rng(cfg.seed, DATA_STREAM);
    let planted = match kind {
        SynthKind::Sbm => {
            let m = (cfg.n / cfg.k.max(1)).max(1);
            let centers = if cfg.k == 2 {
                synth::two_ball_centers(cfg.delta, cfg.dim)
            } else {
                // k centers delta apart along coordinate axes
                (0..cfg.k)
                    .map(|a| {
                        let mut c = nalgebra::DVector::<f64>::zeros(cfg.dim);
                        c[a % cfg.dim] = cfg.delta * ((a / cfg.dim) + 1) as f64;
                        c
                    })
                    .collect()
            };
            synth::sample_sbm(&centers, m, &mut rng)
        }
        SynthKind::Gmm => {
            let centers = synth::hypercube_centers(cfg.k, cfg.dim, cfg.side, &mut rng);
            let weights = vec![1.0 / cfg.k as f64; cfg.k];
            synth::sample_gmm(&centers, &weights, cfg.n, &mut rng)
        }
        SynthKind::Norm10 => synth::norm10(&mut rng),
        SynthKind::Norm25 => synth::norm25(&mut rng),
    }
    .map_err(|e| anyhow::anyhow!("{e}"))?;
    Ok((planted.data, Some(planted.labels)))
}
