//! Experiment configuration: defaults, flat key=value files, and CLI
//! overrides, resolved in that order (flags win).

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, Context, Result};

use crate::Cli;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Task {
    SketchSolve,
    Hoeffding,
    Markov,
    Baselines,
    PhaseDiagram,
    RuntimeCurve,
}

impl FromStr for Task {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "sketch_solve" => Task::SketchSolve,
            "hoeffding" => Task::Hoeffding,
            "markov" => Task::Markov,
            "baselines" => Task::Baselines,
            "phase_diagram" => Task::PhaseDiagram,
            "runtime_curve" => Task::RuntimeCurve,
            other => bail!(
                "unknown task '{other}' (expected sketch_solve, hoeffding, markov, \
                 baselines, phase_diagram, or runtime_curve)"
            ),
        })
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Task::SketchSolve => "sketch_solve",
            Task::Hoeffding => "hoeffding",
            Task::Markov => "markov",
            Task::Baselines => "baselines",
            Task::PhaseDiagram => "phase_diagram",
            Task::RuntimeCurve => "runtime_curve",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthKind {
    Sbm,
    Gmm,
    Norm10,
    Norm25,
}

impl FromStr for SynthKind {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.trim() {
            "sbm" => SynthKind::Sbm,
            "gmm" => SynthKind::Gmm,
            "norm10" => SynthKind::Norm10,
            "norm25" => SynthKind::Norm25,
            other => bail!("unknown synthetic model '{other}' (expected sbm, gmm, norm10, norm25)"),
        })
    }
}

impl fmt::Display for SynthKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            SynthKind::Sbm => "sbm",
            SynthKind::Gmm => "gmm",
            SynthKind::Norm10 => "norm10",
            SynthKind::Norm25 => "norm25",
        };
        f.write_str(name)
    }
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub input: Option<PathBuf>,
    pub synth: Option<SynthKind>,
    pub tasks: Vec<Task>,
    pub k: usize,
    pub sketch_size: usize,
    pub trials: usize,
    pub epsilon: f64,
    pub bernoulli_p: f64,
    pub seed: u64,
    pub cap: Option<f64>,
    pub restarts: Option<usize>,
    pub tol_low: f64,
    pub tol_high: f64,
    pub out_dir: PathBuf,
    pub export_data: bool,
    // synthetic-data parameters
    pub n: usize,
    pub dim: usize,
    pub delta: f64,
    pub side: f64,
    // phase-diagram grid
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_step: f64,
    pub sketch_grid: Vec<usize>,
    // runtime-curve grid
    pub n_grid: Vec<usize>,
    // csv input format
    pub delimiter: char,
    pub has_header: bool,
}

impl ExperimentConfig {
    pub fn resolve(cli: &Cli) -> Result<Self> {
        let file = match &cli.config {
            Some(path) => parse_key_value_file(path)
                .with_context(|| format!("reading config file {}", path.display()))?,
            None => BTreeMap::new(),
        };

        let get = |key: &str| file.get(key).map(String::as_str);
        let cfg = ExperimentConfig {
            input: cli.input.clone().or_else(|| {
                get("input")
                    .filter(|s| !s.is_empty())
                    .map(PathBuf::from)
            }),
            synth: match (&cli.synth, get("synth")) {
                (Some(s), _) => Some(s.parse()?),
                (None, Some(s)) if !s.is_empty() => Some(s.parse()?),
                _ => None,
            },
            tasks: {
                let raw = cli
                    .task
                    .clone()
                    .or_else(|| get("task").map(str::to_owned))
                    .unwrap_or_default();
                let mut tasks = Vec::new();
                for part in raw.split(',').filter(|p| !p.trim().is_empty()) {
                    tasks.push(part.parse()?);
                }
                tasks
            },
            k: merged(cli.k, get("k"), 2, "k")?,
            sketch_size: merged(cli.sketch_size, get("sketch_size"), 300, "sketch_size")?,
            trials: merged(cli.trials, get("trials"), 30, "trials")?,
            epsilon: merged(cli.epsilon, get("epsilon"), 0.01, "epsilon")?,
            bernoulli_p: merged(cli.bernoulli_p, get("bernoulli_p"), 0.1, "bernoulli_p")?,
            seed: merged(cli.seed, get("seed"), 0, "seed")?,
            cap: match (cli.cap, get("cap")) {
                (Some(c), _) => Some(c),
                (None, Some("")) | (None, None) => None,
                (None, Some(v)) if v == "none" => None,
                (None, Some(v)) => Some(parse_value(v, "cap")?),
            },
            restarts: match (cli.restarts, get("restarts")) {
                (Some(r), _) => Some(r),
                (None, Some("")) | (None, None) => None,
                (None, Some(v)) => Some(parse_value(v, "restarts")?),
            },
            tol_low: merged(cli.tol_low, get("tol_low"), 1e-4, "tol_low")?,
            tol_high: merged(cli.tol_high, get("tol_high"), 1e-6, "tol_high")?,
            out_dir: cli
                .out_dir
                .clone()
                .or_else(|| get("out_dir").map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out")),
            export_data: cli.export_data || get("export_data") == Some("true"),
            n: merged(cli.n, get("n"), 200, "n")?,
            dim: merged(cli.dim, get("dim"), 2, "dim")?,
            delta: merged(cli.delta, get("delta"), 4.0, "delta")?,
            side: merged(cli.side, get("side"), 500.0, "side")?,
            delta_min: merged(cli.delta_min, get("delta_min"), 2.0, "delta_min")?,
            delta_max: merged(cli.delta_max, get("delta_max"), 4.0, "delta_max")?,
            delta_step: merged(cli.delta_step, get("delta_step"), 0.1, "delta_step")?,
            sketch_grid: match (&cli.sketch_grid, get("sketch_grid")) {
                (Some(g), _) => g.clone(),
                (None, Some(v)) => parse_list(v, "sketch_grid")?,
                (None, None) => (1..=15).map(|i| 2 * i).collect(),
            },
            n_grid: match (&cli.n_grid, get("n_grid")) {
                (Some(g), _) => g.clone(),
                (None, Some(v)) => parse_list(v, "n_grid")?,
                (None, None) => vec![1 << 8, 1 << 12, 1 << 16],
            },
            delimiter: match (cli.delimiter, get("delimiter")) {
                (Some(c), _) => c,
                (None, Some(v)) if v.chars().count() == 1 => v.chars().next().unwrap(),
                (None, Some(v)) if v == "tab" => '\t',
                (None, Some(v)) => bail!("delimiter must be one character, got '{v}'"),
                (None, None) => ',',
            },
            has_header: cli.has_header || get("has_header") == Some("true"),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    fn validate(&self) -> Result<()> {
        if self.tasks.is_empty() {
            bail!("no task given; pass --task (e.g. --task markov)");
        }
        if !(self.epsilon > 0.0 && self.epsilon < 1.0) {
            bail!("epsilon must be in (0, 1), got {}", self.epsilon);
        }
        if !(self.bernoulli_p > 0.0 && self.bernoulli_p <= 1.0) {
            bail!("bernoulli_p must be in (0, 1], got {}", self.bernoulli_p);
        }
        if let Some(cap) = self.cap {
            if cap <= 0.0 {
                bail!("cap must be positive, got {cap}");
            }
        }
        if self.k < 2 {
            bail!("k must be at least 2, got {}", self.k);
        }
        let needs_data = self
            .tasks
            .iter()
            .any(|t| !matches!(t, Task::PhaseDiagram | Task::RuntimeCurve));
        if needs_data && self.input.is_none() && self.synth.is_none() {
            bail!("this task needs a dataset; pass --input <csv> or --synth <model>");
        }
        Ok(())
    }

    /// Dataset label for report rows.
    pub fn dataset_name(&self) -> String {
        if let Some(path) = &self.input {
            return path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| path.display().to_string());
        }
        match self.synth {
            Some(SynthKind::Sbm) => format!(
                "sbm(delta={},d={},n={})",
                self.delta, self.dim, self.n
            ),
            Some(SynthKind::Gmm) => format!(
                "gmm(k={},d={},n={},side={})",
                self.k, self.dim, self.n, self.side
            ),
            Some(SynthKind::Norm10) => "norm10".to_string(),
            Some(SynthKind::Norm25) => "norm25".to_string(),
            None => "none".to_string(),
        }
    }

    /// Manifest body; loadable back through `--config`. `out_dir` is left
    /// out so a rerun can target a fresh directory.
    pub fn manifest(&self) -> String {
        let mut lines = vec![format!(
            "# {} v{} run manifest",
            env!("CARGO_PKG_NAME"),
            env!("CARGO_PKG_VERSION")
        )];
        let mut push = |k: &str, v: String| lines.push(format!("{k}={v}"));
        push(
            "input",
            self.input
                .as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default(),
        );
        push(
            "synth",
            self.synth.map(|s| s.to_string()).unwrap_or_default(),
        );
        push(
            "task",
            self.tasks
                .iter()
                .map(Task::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        push("k", self.k.to_string());
        push("sketch_size", self.sketch_size.to_string());
        push("trials", self.trials.to_string());
        push("epsilon", self.epsilon.to_string());
        push("bernoulli_p", self.bernoulli_p.to_string());
        push("seed", self.seed.to_string());
        push(
            "cap",
            self.cap.map(|c| c.to_string()).unwrap_or_default(),
        );
        push(
            "restarts",
            self.restarts.map(|r| r.to_string()).unwrap_or_default(),
        );
        push("tol_low", self.tol_low.to_string());
        push("tol_high", self.tol_high.to_string());
        push("export_data", self.export_data.to_string());
        push("n", self.n.to_string());
        push("dim", self.dim.to_string());
        push("delta", self.delta.to_string());
        push("side", self.side.to_string());
        push("delta_min", self.delta_min.to_string());
        push("delta_max", self.delta_max.to_string());
        push("delta_step", self.delta_step.to_string());
        push(
            "sketch_grid",
            self.sketch_grid
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        push(
            "n_grid",
            self.n_grid
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(","),
        );
        push(
            "delimiter",
            if self.delimiter == '\t' {
                "tab".to_string()
            } else {
                self.delimiter.to_string()
            },
        );
        push("has_header", self.has_header.to_string());
        lines.push(String::new());
        lines.join("\n")
    }
}

fn merged<T: FromStr>(cli: Option<T>, file: Option<&str>, default: T, key: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    if let Some(v) = cli {
        return Ok(v);
    }
    match file {
        Some("") | None => Ok(default),
        Some(raw) => parse_value(raw, key),
    }
}

fn parse_value<T: FromStr>(raw: &str, key: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    raw.trim()
        .parse()
        .map_err(|e| anyhow::anyhow!("config key '{key}': cannot parse '{raw}': {e}"))
}

fn parse_list(raw: &str, key: &str) -> Result<Vec<usize>> {
    raw.split(',')
        .filter(|p| !p.trim().is_empty())
        .map(|p| parse_value(p, key))
        .collect()
}

/// Flat `key=value` file: one pair per line, `#` comments and blank lines
/// ignored.
pub fn parse_key_value_file(path: &Path) -> Result<BTreeMap<String, String>> {
    let text = std::fs::read_to_string(path)?;
    let mut map = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key=value, got '{line}'", lineno + 1);
        };
        map.insert(key.trim().to_string(), value.trim().to_string());
    }
    Ok(map)
}
