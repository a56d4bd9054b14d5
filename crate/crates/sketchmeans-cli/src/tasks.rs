//! Task execution. All outputs are assembled in memory and written together
//! once every requested task has finished, so a failed run never leaves
//! partial result files behind.

use std::time::Instant;

use anyhow::{bail, Context, Result};
use nalgebra::DVector;

use sketchmeans::bounds::{
    baseline_bounds, best_kmeanspp_value, hoeffding_bound, markov_bound, sketch_indices,
    BoundConfig, BoundReport, Replacement,
};
use sketchmeans::dataset::{self, Dataset, Partition};
use sketchmeans::kmeans;
use sketchmeans::sdp::{self, SolverConfig};
use sketchmeans::sketchsolve::{sketch_and_solve, SketchSolveConfig};
use sketchmeans::synth;
use sketchmeans::{parallel, seeding};

use crate::config::{ExperimentConfig, Task};
use crate::data;
use crate::report::{fmt_sci, tsv};

/// Stream indices reserved by the driver (trial streams start at 0; data
/// generation uses `data::DATA_STREAM`).
const MINVI_STREAM: u64 = u64::MAX - 2;
const PHASE_STREAM_BASE: u64 = 1 << 40;
const RUNTIME_STREAM_BASE: u64 = 1 << 41;

const BOUNDS_HEADERS: [&str; 11] = [
    "dataset", "k", "min_vi", "avg_Li", "L_H", "L_M", "B_H", "B_M", "T_init", "T_kpp", "T_SDP",
];
const TRIAL_HEADERS: [&str; 7] = [
    "method",
    "trial",
    "sketch_hash",
    "primal_value",
    "certified_bound",
    "trial_value",
    "wall_seconds",
];

pub fn run(cfg: &ExperimentConfig) -> Result<()> {
    let mut files: Vec<(&'static str, String)> = Vec::new();
    let mut summaries: Vec<String> = Vec::new();

    let needs_data = cfg
        .tasks
        .iter()
        .any(|t| !matches!(t, Task::PhaseDiagram | Task::RuntimeCurve));
    let dataset = if needs_data {
        let (data, labels) = data::materialize(cfg)?;
        summaries.push(format!(
            "dataset {}: n = {}, d = {}",
            cfg.dataset_name(),
            data.len(),
            data.dim()
        ));
        Some((data, labels))
    } else {
        None
    };

    if cfg.export_data {
        let Some((data, _)) = &dataset else {
            bail!("--export-data needs a dataset task");
        };
        files.push(("dataset.csv", data::to_csv(data, cfg.delimiter)));
    }

    let bound_tasks: Vec<Task> = cfg
        .tasks
        .iter()
        .copied()
        .filter(|t| matches!(t, Task::Baselines | Task::Hoeffding | Task::Markov))
        .collect();
    if !bound_tasks.is_empty() {
        let (data, _) = dataset.as_ref().expect("bound tasks need data");
        let (bounds_tsv, trials_tsv, lines) = run_bounds(cfg, data, &bound_tasks)?;
        files.push(("bounds.tsv", bounds_tsv));
        files.push(("trials.tsv", trials_tsv));
        summaries.extend(lines);
    }

    for task in &cfg.tasks {
        match task {
            Task::SketchSolve => {
                let (data, labels) = dataset.as_ref().expect("sketch_solve needs data");
                let (labels_tsv, diag_tsv, line) =
                    run_sketch_solve(cfg, data, labels.as_deref())?;
                files.push(("labels.tsv", labels_tsv));
                files.push(("diagnostics.tsv", diag_tsv));
                summaries.push(line);
            }
            Task::PhaseDiagram => {
                let (content, line) = run_phase_diagram(cfg)?;
                files.push(("phase_diagram.tsv", content));
                summaries.push(line);
            }
            Task::RuntimeCurve => {
                let (content, line) = run_runtime_curve(cfg)?;
                files.push(("runtime_curve.tsv", content));
                summaries.push(line);
            }
            Task::Baselines | Task::Hoeffding | Task::Markov => {} // handled above
        }
    }

    files.push(("manifest.txt", cfg.manifest()));

    std::fs::create_dir_all(&cfg.out_dir)
        .with_context(|| format!("creating {}", cfg.out_dir.display()))?;
    for (name, content) in &files {
        let path = cfg.out_dir.join(name);
        std::fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
    }

    for line in &summaries {
        println!("{line}");
    }
    println!(
        "wrote {} file(s) to {}",
        files.len(),
        cfg.out_dir.display()
    );
    Ok(())
}

fn solver_config(cfg: &ExperimentConfig) -> SolverConfig {
    SolverConfig {
        tol_primal: cfg.tol_high,
        tol_dual: cfg.tol_high,
        tol_gap: cfg.tol_high / 10.0,
        tol_stage_one: cfg.tol_low,
        ..SolverConfig::default()
    }
}

fn run_bounds(
    cfg: &ExperimentConfig,
    data: &Dataset,
    tasks: &[Task],
) -> Result<(String, String, Vec<String>)> {
    let mut lines = Vec::new();

    // min v_i is both the truncation level u and the table's upper bound
    let restarts = cfg.restarts.unwrap_or(cfg.trials);
    let kpp_start = Instant::now();
    let mut minvi_rng = seeding::trial_rng(cfg.seed, MINVI_STREAM);
    let (min_vi, _) = best_kmeanspp_value(data, cfg.k, restarts, &mut minvi_rng)
        .map_err(|e| anyhow::anyhow!("{e}"))?;
    let t_kpp = kpp_start.elapsed().as_secs_f64();
    lines.push(format!(
        "min v_i = {} over {restarts} restarts ({:.2}s)",
        fmt_sci(min_vi),
        t_kpp
    ));

    let base = BoundConfig {
        truncation: Some(min_vi),
        cap: cfg.cap,
        solver: solver_config(cfg),
        ..BoundConfig::hoeffding(cfg.k, cfg.sketch_size, cfg.trials, cfg.epsilon, cfg.seed)
    };

    let mut avg_li = f64::NAN;
    let mut l_h = f64::NAN;
    let mut l_m = f64::NAN;
    let mut b_h = f64::NAN;
    let mut b_m = f64::NAN;
    let mut t_init = f64::NAN;
    let mut t_sdp = 0.0f64;
    let mut ran_sdp = false;
    let mut trial_rows: Vec<Vec<String>> = Vec::new();

    if tasks.contains(&Task::Baselines) {
        let (report_h, report_m, avg) =
            baseline_bounds(data, &base).map_err(|e| anyhow::anyhow!("{e}"))?;
        avg_li = avg;
        l_h = report_h.bound;
        l_m = report_m.bound;
        t_init = report_h.timings.t_init;
        for (i, &v) in report_h.per_trial_values.iter().enumerate() {
            trial_rows.push(vec![
                "baseline_Li".into(),
                i.to_string(),
                "-".into(),
                "nan".into(),
                "nan".into(),
                fmt_sci(v),
                "nan".into(),
            ]);
        }
        lines.push(format!(
            "baselines: avg Li = {}, L_H = {}, L_M = {}",
            fmt_sci(avg),
            fmt_sci(l_h),
            fmt_sci(l_m)
        ));
    }
    if tasks.contains(&Task::Hoeffding) {
        let report = hoeffding_bound(data, &base).map_err(|e| anyhow::anyhow!("{e}"))?;
        b_h = report.bound;
        t_sdp += report.timings.t_sdp;
        ran_sdp = true;
        push_sdp_trials(&mut trial_rows, "hoeffding", &report);
        lines.push(format!(
            "B_H = {} ({} of {} trials truncated at u = {})",
            fmt_sci(b_h),
            report.truncation_count,
            cfg.trials,
            fmt_sci(min_vi)
        ));
    }
    if tasks.contains(&Task::Markov) {
        let markov_cfg = BoundConfig {
            replacement: Replacement::Without,
            ..base.clone()
        };
        let report = markov_bound(data, &markov_cfg).map_err(|e| anyhow::anyhow!("{e}"))?;
        b_m = report.bound;
        t_sdp += report.timings.t_sdp;
        ran_sdp = true;
        push_sdp_trials(&mut trial_rows, "markov", &report);
        lines.push(format!("B_M = {}", fmt_sci(b_m)));
    }

    let row = vec![
        cfg.dataset_name(),
        cfg.k.to_string(),
        fmt_sci(min_vi),
        fmt_sci(avg_li),
        fmt_sci(l_h),
        fmt_sci(l_m),
        fmt_sci(b_h),
        fmt_sci(b_m),
        fmt_sci(t_init),
        fmt_sci(t_kpp),
        if ran_sdp { fmt_sci(t_sdp) } else { "nan".into() },
    ];
    Ok((
        tsv(&BOUNDS_HEADERS, &[row]),
        tsv(&TRIAL_HEADERS, &trial_rows),
        lines,
    ))
}

fn push_sdp_trials(rows: &mut Vec<Vec<String>>, method: &str, report: &BoundReport) {
    for record in &report.trial_records {
        rows.push(vec![
            method.to_string(),
            record.trial.to_string(),
            format!("{:016x}", record.sketch_hash),
            fmt_sci(record.primal_value),
            fmt_sci(record.certified_bound),
            fmt_sci(record.certified_bound.max(0.0)),
            fmt_sci(record.wall_seconds),
        ]);
    }
}

fn run_sketch_solve(
    cfg: &ExperimentConfig,
    data: &Dataset,
    planted: Option<&[usize]>,
) -> Result<(String, String, String)> {
    let pipeline_cfg = SketchSolveConfig {
        k: cfg.k,
        p: cfg.bernoulli_p,
        seed: cfg.seed,
        cap: cfg.cap,
        solver: solver_config(cfg),
    };
    let (partition, diag) =
        sketch_and_solve(data, &pipeline_cfg).map_err(|e| anyhow::anyhow!("{e}"))?;

    let label_rows: Vec<Vec<String>> = (0..partition.len())
        .map(|i| vec![i.to_string(), partition.label(i).to_string()])
        .collect();
    let labels_tsv = tsv(&["point", "cluster"], &label_rows);

    let recovered = planted.map(|labels| {
        let planted_partition = Partition::from_labels(labels).expect("planted labels");
        partition.same_clustering(&planted_partition)
    });
    let mut diag_rows = vec![
        vec!["sketch_size".into(), diag.sketch_size.to_string()],
        vec![
            "sketch_prox".into(),
            diag.sketch_prox.map(fmt_sci).unwrap_or("nan".into()),
        ],
        vec![
            "partition_exact".into(),
            diag.partition_exact.to_string(),
        ],
        vec![
            "solver_status".into(),
            format!("{:?}", diag.solver_status),
        ],
        vec![
            "solver_iterations".into(),
            diag.solver_iterations.to_string(),
        ],
        vec!["final_clusters".into(), diag.final_clusters.to_string()],
        vec!["emptied_cluster".into(), diag.emptied_cluster.to_string()],
        vec![
            "value".into(),
            fmt_sci(dataset::kmeans_value(data, &partition)),
        ],
        vec!["sketch_seconds".into(), fmt_sci(diag.sketch_seconds)],
        vec!["sdp_seconds".into(), fmt_sci(diag.sdp_seconds)],
        vec!["assign_seconds".into(), fmt_sci(diag.assign_seconds)],
        vec!["total_seconds".into(), fmt_sci(diag.total_seconds)],
    ];
    if let Some(hit) = recovered {
        diag_rows.push(vec!["planted_recovered".into(), hit.to_string()]);
    }
    let diag_tsv = tsv(&["metric", "value"], &diag_rows);

    let line = format!(
        "sketch_solve: |W| = {}, {} clusters, prox = {}, recovered = {:?}",
        diag.sketch_size,
        diag.final_clusters,
        diag.sketch_prox.map(fmt_sci).unwrap_or("nan".into()),
        recovered
    );
    Ok((labels_tsv, diag_tsv, line))
}

/// One recovery experiment following the two-ball phase plot: draw `w`
/// points uniformly from the union of the balls, cluster them through the
/// relaxation, and test whether nearest-centroid assignment classifies the
/// *entire* balls correctly. Ball `B(mu, 1)` lands with its own centroid
/// exactly when `||mu - c_other||^2 - ||mu - c_own||^2 > 2 ||c_own - c_other||`.
fn recovery_trial(delta: f64, dim: usize, w: usize, rng_seed: (u64, u64)) -> bool {
    let mut rng = seeding::trial_rng(rng_seed.0, rng_seed.1);
    let mu = synth::two_ball_centers(delta, dim);
    let mut coords = nalgebra::DMatrix::<f64>::zeros(dim, w);
    for j in 0..w {
        let ball = rng.random_range(0..2usize);
        coords.set_column(j, &(&mu[ball] + synth::sample_unit_ball(dim, &mut rng)));
    }
    let Ok(sketch) = Dataset::from_coords(coords) else {
        return false;
    };
    let Ok(problem) = sdp::build_problem(&sketch, 2, None) else {
        return false;
    };
    let Ok(sol) = sdp::solve_two_stage(&problem, &SolverConfig::default()) else {
        return false;
    };
    let Ok(gamma) = sdp::round_solution(&sol.z, &sketch, 2) else {
        return false;
    };
    if gamma.k() != 2 {
        return false;
    }
    let centroids: Vec<DVector<f64>> = gamma
        .clusters()
        .iter()
        .map(|members| dataset::centroid(&sketch, members).expect("nonempty"))
        .collect();
    let separates = |own: &DVector<f64>, other: &DVector<f64>, center: &DVector<f64>| {
        let margin = (center - other).norm_squared() - (center - own).norm_squared();
        margin > 2.0 * (own - other).norm()
    };
    let direct = separates(&centroids[0], &centroids[1], &mu[0])
        && separates(&centroids[1], &centroids[0], &mu[1]);
    let swapped = separates(&centroids[1], &centroids[0], &mu[0])
        && separates(&centroids[0], &centroids[1], &mu[1]);
    direct || swapped
}

fn run_phase_diagram(cfg: &ExperimentConfig) -> Result<(String, String)> {
    let steps = ((cfg.delta_max - cfg.delta_min) / cfg.delta_step).round() as usize;
    let deltas: Vec<f64> = (0..=steps)
        .map(|i| cfg.delta_min + i as f64 * cfg.delta_step)
        .collect();
    let sketch_sizes: Vec<usize> = cfg
        .sketch_grid
        .iter()
        .copied()
        .filter(|&w| w >= 2)
        .collect();
    if sketch_sizes.is_empty() {
        bail!("phase diagram needs sketch sizes >= 2");
    }

    let mut rows = Vec::new();
    for (di, &delta) in deltas.iter().enumerate() {
        for (wi, &w) in sketch_sizes.iter().enumerate() {
            let cell = (di * sketch_sizes.len() + wi) as u64;
            let hits: usize = parallel::map_indexed(cfg.trials, |t| {
                let stream = PHASE_STREAM_BASE + cell * cfg.trials as u64 + t as u64;
                usize::from(recovery_trial(delta, cfg.dim, w, (cfg.seed, stream)))
            })
            .into_iter()
            .sum();
            let rate = hits as f64 / cfg.trials as f64;
            rows.push(vec![fmt_sci(delta), w.to_string(), fmt_sci(rate)]);
        }
    }
    let line = format!(
        "phase_diagram: {} deltas x {} sketch sizes x {} trials",
        deltas.len(),
        sketch_sizes.len(),
        cfg.trials
    );
    Ok((
        tsv(&["delta", "sketch_size", "recovery_rate"], &rows),
        line,
    ))
}

fn run_runtime_curve(cfg: &ExperimentConfig) -> Result<(String, String)> {
    let mut rows = Vec::new();
    for (ni, &n) in cfg.n_grid.iter().enumerate() {
        let p = (10.0 / n as f64).min(1.0);
        let mut pipeline_secs = Vec::new();
        let mut kmeans_secs = Vec::new();
        let mut stream = RUNTIME_STREAM_BASE + (ni as u64) * 10_000;
        while pipeline_secs.len() < cfg.trials {
            let mut rng = seeding::trial_rng(cfg.seed, stream);
            stream += 1;
            let planted = synth::sample_sbm(
                &synth::two_ball_centers(3.0, cfg.dim),
                (n / 2).max(1),
                &mut rng,
            )
            .map_err(|e| anyhow::anyhow!("{e}"))?;
            let pipeline_cfg = SketchSolveConfig {
                k: 2,
                p,
                seed: cfg.seed.wrapping_add(stream),
                cap: cfg.cap,
                solver: solver_config(cfg),
            };
            let t0 = Instant::now();
            match sketch_and_solve(&planted.data, &pipeline_cfg) {
                Ok(_) => pipeline_secs.push(t0.elapsed().as_secs_f64()),
                Err(sketchmeans::Error::SketchTooSmall { .. }) => continue,
                Err(e) => bail!("{e}"),
            }
            let t0 = Instant::now();
            kmeans::kmeanspp_lloyd(&planted.data, 2, &mut rng, kmeans::LLOYD_MAX_ITER)
                .map_err(|e| anyhow::anyhow!("{e}"))?;
            kmeans_secs.push(t0.elapsed().as_secs_f64());
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        rows.push(vec![
            n.to_string(),
            "sketch_solve".into(),
            fmt_sci(mean(&pipeline_secs)),
        ]);
        rows.push(vec![
            n.to_string(),
            "kmeanspp".into(),
            fmt_sci(mean(&kmeans_secs)),
        ]);
    }
    let line = format!(
        "runtime_curve: n in {:?}, {} trials per size",
        cfg.n_grid, cfg.trials
    );
    Ok((tsv(&["n", "method", "seconds"], &rows), line))
}
