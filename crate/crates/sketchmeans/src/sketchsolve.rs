//! End-to-end sketch-and-solve clustering.
//!
//! Draw a Bernoulli sketch, solve the relaxation on the sketch, round to a
//! sketch partition, and extend to the full dataset by nearest sketch
//! centroid. When the sketch satisfies the proximity condition, the rounding
//! step is exact and the pipeline recovers the unique optimal clustering.

use std::time::Instant;

use nalgebra::DVector;
use rand::Rng;

use crate::dataset::{self, Dataset, Partition};
use crate::sdp::{self, Residuals, SolveStatus, SolverConfig};
use crate::{kmeans, prox, seeding, Error, Result};

#[derive(Debug, Clone)]
pub struct SketchSolveConfig {
    pub k: usize,
    /// Bernoulli inclusion rate in (0, 1].
    pub p: f64,
    pub seed: u64,
    /// Entrywise cap on the sketch distance matrix.
    pub cap: Option<f64>,
    pub solver: SolverConfig,
}

impl SketchSolveConfig {
    pub fn new(k: usize, p: f64, seed: u64) -> Self {
        SketchSolveConfig {
            k,
            p,
            seed,
            cap: None,
            solver: SolverConfig::default(),
        }
    }
}

/// Everything observable about one pipeline run.
#[derive(Debug, Clone)]
pub struct SketchSolveDiagnostics {
    pub sketch_size: usize,
    /// Proximity value of the rounded partition on the sketch; `None` when
    /// undefined (degenerate centroids or a single cluster).
    pub sketch_prox: Option<f64>,
    /// Whether the solver iterate was partition-exact before rounding.
    pub partition_exact: bool,
    pub solver_status: SolveStatus,
    pub solver_iterations: usize,
    pub solver_residuals: Residuals,
    /// Clusters in the returned partition; fewer than `k` means the final
    /// assignment emptied a cell.
    pub final_clusters: usize,
    pub emptied_cluster: bool,
    pub sketch_seconds: f64,
    pub sdp_seconds: f64,
    pub assign_seconds: f64,
    pub total_seconds: f64,
}

/// Indices drawn by a Bernoulli process with rate `p`; fails when fewer than
/// `min_size` survive (the relaxation needs at least `k` points).
pub fn bernoulli_sketch(
    x: &Dataset,
    p: f64,
    min_size: usize,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::InvalidInput(format!(
            "Bernoulli rate must be in (0, 1], got {p}"
        )));
    }
    let sketch: Vec<usize> = (0..x.len()).filter(|_| rng.random::<f64>() < p).collect();
    if sketch.len() < min_size {
        return Err(Error::SketchTooSmall {
            got: sketch.len(),
            need: min_size,
        });
    }
    Ok(sketch)
}

/// The full pipeline: sketch, relax, round, extend by nearest centroid.
///
/// The returned partition always covers the whole dataset and uses at most
/// `k` clusters; a cell emptied by the final assignment is dropped and
/// flagged in the diagnostics rather than papered over.
pub fn sketch_and_solve(
    x: &Dataset,
    cfg: &SketchSolveConfig,
) -> Result<(Partition, SketchSolveDiagnostics)> {
    let total_start = Instant::now();
    let mut rng = seeding::master_rng(cfg.seed);

    let sketch_start = Instant::now();
    let indices = bernoulli_sketch(x, cfg.p, cfg.k, &mut rng)?;
    let sketch = x.subset(&indices)?;
    let sketch_seconds = sketch_start.elapsed().as_secs_f64();

    let sdp_start = Instant::now();
    let problem = sdp::build_problem(&sketch, cfg.k, cfg.cap)?;
    // deterministic warm start: farthest-point seeding plus Lloyd
    let warm = {
        let init = kmeans::deterministic_kmeanspp(&sketch, cfg.k)?;
        let centers: Vec<DVector<f64>> = init
            .indices()
            .iter()
            .map(|&i| sketch.point(i).into_owned())
            .collect();
        kmeans::lloyd(&sketch, cfg.k, &centers, kmeans::LLOYD_MAX_ITER)?
    };
    let solver_cfg = SolverConfig {
        warm_start: Some(warm.partition),
        ..cfg.solver.clone()
    };
    let solution = sdp::solve_two_stage(&problem, &solver_cfg)?;
    let rounded = sdp::round_solution(&solution.z, &sketch, cfg.k)?;
    let sdp_seconds = sdp_start.elapsed().as_secs_f64();

    let partition_exact = if rounded.k() == cfg.k {
        let z_gamma = dataset::partition_matrix(&rounded);
        (&solution.z - z_gamma).norm() <= 1e-3
    } else {
        false
    };
    let sketch_prox = if rounded.k() >= 2 {
        prox::prox_value(&sketch, &rounded).ok()
    } else {
        None
    };

    let assign_start = Instant::now();
    let centroids: Vec<DVector<f64>> = rounded
        .clusters()
        .iter()
        .map(|members| dataset::centroid(&sketch, members))
        .collect::<Result<_>>()?;
    let partition = dataset::assign_to_nearest(x, &centroids);
    let assign_seconds = assign_start.elapsed().as_secs_f64();

    let diagnostics = SketchSolveDiagnostics {
        sketch_size: indices.len(),
        sketch_prox,
        partition_exact,
        solver_status: solution.status,
        solver_iterations: solution.iterations,
        solver_residuals: solution.residuals,
        final_clusters: partition.k(),
        emptied_cluster: partition.k() < centroids.len(),
        sketch_seconds,
        sdp_seconds,
        assign_seconds,
        total_seconds: total_start.elapsed().as_secs_f64(),
    };
    Ok((partition, diagnostics))
}
