//! Experiment driver: dataset ingestion, bound estimation, clustering
//! pipelines, and plot-ready reports.

mod config;
mod data;
mod report;
mod tasks;

use std::path::PathBuf;

use clap::Parser;

use config::ExperimentConfig;

/// Sketch-and-solve k-means clustering and certified lower bounds.
///
/// Reproducibility: all randomness derives from --seed (no ambient entropy),
/// and trial streams are schedule-independent, so reruns with the written
/// manifest reproduce every result value.
#[derive(Debug, Parser)]
#[command(name = "sketchmeans", version)]
pub struct Cli {
    /// Flat key=value config file; command-line flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Input CSV (one point per row, numeric).
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Synthetic dataset instead of --input: sbm | gmm | norm10 | norm25.
    #[arg(long)]
    pub synth: Option<String>,
    /// Comma-separated tasks: sketch_solve, hoeffding, markov, baselines,
    /// phase_diagram, runtime_curve.
    #[arg(long)]
    pub task: Option<String>,
    /// Number of clusters.
    #[arg(long)]
    pub k: Option<usize>,
    /// Uniform sketch size s for the bound tasks.
    #[arg(long = "sketch-size")]
    pub sketch_size: Option<usize>,
    /// Trials per bound / per phase-diagram cell / per runtime point.
    #[arg(long)]
    pub trials: Option<usize>,
    /// Error rate epsilon in (0, 1).
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Bernoulli rate p for sketch_solve.
    #[arg(long = "bernoulli-p")]
    pub bernoulli_p: Option<f64>,
    /// Master seed; every random stream derives from it.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Entrywise cap on squared distances (pass bare --cap for 1e8).
    #[arg(long, num_args = 0..=1, default_missing_value = "1e8")]
    pub cap: Option<f64>,
    /// k-means++ restarts for min v_i (default: same as --trials).
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Stage-one solver tolerance.
    #[arg(long = "tol-low")]
    pub tol_low: Option<f64>,
    /// Final solver tolerance.
    #[arg(long = "tol-high")]
    pub tol_high: Option<f64>,
    /// Output directory for TSV reports and the manifest.
    #[arg(long = "out-dir")]
    pub out_dir: Option<PathBuf>,
    /// Write the materialized dataset to dataset.csv in the output directory.
    #[arg(long = "export-data")]
    pub export_data: bool,
    /// Synthetic dataset size (sbm: total over both balls).
    #[arg(long)]
    pub n: Option<usize>,
    /// Synthetic dataset dimension.
    #[arg(long)]
    pub dim: Option<usize>,
    /// Ball-center separation for --synth sbm.
    #[arg(long)]
    pub delta: Option<f64>,
    /// Hypercube side for --synth gmm centers.
    #[arg(long)]
    pub side: Option<f64>,
    /// Phase-diagram separation grid: start.
    #[arg(long = "delta-min")]
    pub delta_min: Option<f64>,
    /// Phase-diagram separation grid: end (inclusive).
    #[arg(long = "delta-max")]
    pub delta_max: Option<f64>,
    /// Phase-diagram separation grid: step.
    #[arg(long = "delta-step")]
    pub delta_step: Option<f64>,
    /// Phase-diagram sketch sizes, comma-separated.
    #[arg(long = "sketch-grid", value_delimiter = ',')]
    pub sketch_grid: Option<Vec<usize>>,
    /// Runtime-curve dataset sizes, comma-separated.
    #[arg(long = "n-grid", value_delimiter = ',')]
    pub n_grid: Option<Vec<usize>>,
    /// CSV field delimiter.
    #[arg(long)]
    pub delimiter: Option<char>,
    /// Skip the first CSV row.
    #[arg(long = "has-header")]
    pub has_header: bool,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let cfg = ExperimentConfig::resolve(&cli)?;
    tasks::run(&cfg)
}
