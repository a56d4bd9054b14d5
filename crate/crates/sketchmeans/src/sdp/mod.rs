//! The Peng–Wei semidefinite relaxation of k-means.
//!
//! `minimize (1/2s) tr(D Z)` over `{Z : Z 1 = 1, tr Z = k, Z >= 0, Z psd}`.
//! The relaxation value lower-bounds the optimal k-means value; when the data
//! is well separated its minimizer is the partition matrix itself.
//!
//! Solving happens by operator splitting (see [`admm`]); every solve also
//! yields a dual certificate repaired to exact feasibility, so the reported
//! lower bound is rigorous regardless of how early the iteration stopped.

mod admm;
pub mod dual;
mod simplex;

pub use dual::DualCertificate;

use nalgebra::{DMatrix, DVector};

use crate::dataset::{self, Dataset, DistanceMatrix, Partition};
use crate::{kmeans, Error, Result};

/// The sketched relaxation instance.
#[derive(Debug, Clone)]
pub struct SdpProblem {
    distances: DistanceMatrix,
    k: usize,
}

impl SdpProblem {
    pub fn s(&self) -> usize {
        self.distances.n()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.distances
    }

    /// Value `(1/2s) tr(D Z_Gamma)` of an integral partition in this problem.
    pub fn partition_value(&self, partition: &Partition) -> f64 {
        dataset::trace_form_value(&self.distances, partition)
    }
}

/// Assemble the relaxation for a (sketched) dataset, with the optional
/// entrywise distance cap.
pub fn build_problem(y: &Dataset, k: usize, cap: Option<f64>) -> Result<SdpProblem> {
    let s = y.len();
    if k < 2 || k > s {
        return Err(Error::InvalidInput(format!(
            "relaxation needs 2 <= k <= s, got k = {k}, s = {s}"
        )));
    }
    Ok(SdpProblem {
        distances: dataset::distance_matrix(y, cap),
        k,
    })
}

/// Solver options. Defaults: residual tolerances `1e-6`, gap `1e-7`,
/// `max_iter` 20000, unit step.
#[derive(Debug, Clone)]
pub struct SolverConfig {
    pub tol_primal: f64,
    pub tol_dual: f64,
    pub tol_gap: f64,
    pub max_iter: usize,
    /// Start from the partition matrix of this clustering.
    pub warm_start: Option<Partition>,
    pub step_parameter: f64,
    /// Run the LP polish on the final certificate (only for s <= 200).
    pub lp_polish: bool,
    /// Stage-one residual tolerance of [`solve_two_stage`].
    pub tol_stage_one: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            tol_primal: 1e-6,
            tol_dual: 1e-6,
            tol_gap: 1e-7,
            max_iter: 20_000,
            warm_start: None,
            step_parameter: 1.0,
            lp_polish: true,
            tol_stage_one: 1e-4,
        }
    }
}

impl SolverConfig {
    /// First-stage tolerances of the two-stage scheme.
    fn low_precision(&self) -> admm::Tolerances {
        admm::Tolerances {
            primal: self.tol_primal.max(self.tol_stage_one),
            dual: self.tol_dual.max(self.tol_stage_one),
            gap: self.tol_gap.max(self.tol_stage_one / 10.0),
        }
    }

    fn full_precision(&self) -> admm::Tolerances {
        admm::Tolerances {
            primal: self.tol_primal,
            dual: self.tol_dual,
            gap: self.tol_gap,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.tol_primal <= 0.0 || self.tol_dual <= 0.0 || self.tol_gap <= 0.0 {
            return Err(Error::InvalidInput("tolerances must be positive".into()));
        }
        if self.step_parameter <= 0.0 {
            return Err(Error::InvalidInput(
                "step parameter must be positive".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveStatus {
    Converged,
    MaxIter,
    /// No iterations ran; only the certificate repair was applied.
    RepairedOnly,
}

#[derive(Debug, Clone, Copy)]
pub struct Residuals {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

/// Primal/dual output of a solve. `certified_lower_bound` is valid by weak
/// duality no matter how the iteration terminated.
#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub z: DMatrix<f64>,
    pub primal_value: f64,
    pub y: DVector<f64>,
    pub p: DMatrix<f64>,
    pub s_mat: DMatrix<f64>,
    pub certified_lower_bound: f64,
    pub status: SolveStatus,
    pub iterations: usize,
    pub residuals: Residuals,
}

/// Solve to the configured tolerances in one stage.
pub fn solve(problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution> {
    solve_impl(problem, config, false)
}

/// Low-precision solve first; when it converges quickly, continue to the
/// configured tolerances from the same state.
pub fn solve_two_stage(problem: &SdpProblem, config: &SolverConfig) -> Result<SdpSolution> {
    solve_impl(problem, config, true)
}

/// Stage-1 iteration count under which the high-precision stage is attempted.
const QUICK_STAGE_ITERS: usize = 2000;

fn solve_impl(problem: &SdpProblem, config: &SolverConfig, two_stage: bool) -> Result<SdpSolution> {
    config.validate()?;
    let s = problem.s();
    let sf = s as f64;
    let k = problem.k;
    let d = problem.distances.entries();
    let b = dual::rhs(s, k);

    // ||C||_F with C = D / (2s); zero means every point coincides
    let sigma = d.norm() / (2.0 * sf);
    if sigma == 0.0 {
        let z = admm::feasibility_polish(&DMatrix::from_element(s, s, k as f64 / sf), &b);
        return Ok(SdpSolution {
            primal_value: 0.0,
            y: DVector::zeros(s + 1),
            p: DMatrix::zeros(s, s),
            s_mat: DMatrix::zeros(s, s),
            certified_lower_bound: 0.0,
            status: SolveStatus::Converged,
            iterations: 0,
            residuals: Residuals {
                primal: 0.0,
                dual: 0.0,
                gap: 0.0,
            },
            z,
        });
    }
    let c_hat = d / (2.0 * sf * sigma);
    let scale_back = 2.0 * sf * sigma;
    let ws = admm::Workspace {
        c_hat: &c_hat,
        d,
        b: &b,
        k,
        scale_back,
    };

    let z0 = match &config.warm_start {
        Some(partition) => {
            if partition.len() != s {
                return Err(Error::InvalidInput(format!(
                    "warm-start partition covers {} points, problem has {s}",
                    partition.len()
                )));
            }
            dual::project_affine(&dataset::partition_matrix(partition), &b)
        }
        None => dual::project_affine(&DMatrix::from_element(s, s, k as f64 / sf), &b),
    };
    let mut state = admm::AdmmState::new(z0, config.step_parameter);

    let report = if config.max_iter == 0 {
        None
    } else if two_stage {
        let low = admm::run(&ws, &mut state, &config.low_precision(), config.max_iter)?;
        let quick = low.converged && state.iterations <= QUICK_STAGE_ITERS;
        let budget = config.max_iter.saturating_sub(state.iterations);
        if quick && budget > 0 {
            Some(admm::run(&ws, &mut state, &config.full_precision(), budget)?)
        } else {
            Some(low)
        }
    } else {
        Some(admm::run(
            &ws,
            &mut state,
            &config.full_precision(),
            config.max_iter,
        )?)
    };

    let (y0, s0) = state.dual_estimates(scale_back);
    let cert = dual::repair_dual(d, k, &y0, &s0, config.lp_polish);
    let z = admm::feasibility_polish(&state.z, &b);
    let primal_value = admm::frobenius_inner(d, &z) / (2.0 * sf);

    let (status, residuals) = match report {
        None => (
            SolveStatus::RepairedOnly,
            Residuals {
                primal: f64::INFINITY,
                dual: f64::INFINITY,
                gap: (primal_value - cert.bound).abs() / primal_value.abs().max(1.0),
            },
        ),
        Some(r) => (
            if r.converged {
                SolveStatus::Converged
            } else {
                SolveStatus::MaxIter
            },
            Residuals {
                primal: r.primal_residual,
                dual: r.dual_residual,
                gap: (primal_value - cert.bound).abs()
                    / primal_value.abs().max(cert.bound.abs()).max(1.0),
            },
        ),
    };

    Ok(SdpSolution {
        z,
        primal_value,
        y: cert.y,
        p: cert.p,
        s_mat: cert.s_mat,
        certified_lower_bound: cert.bound,
        status,
        iterations: state.iterations,
        residuals,
    })
}

/// Repair an arbitrary approximate dual `(y0, S0)` of `problem` into an
/// exactly feasible certificate. Never fails; the bound may be weak.
pub fn repair_dual(
    problem: &SdpProblem,
    y0: &DVector<f64>,
    s0: &DMatrix<f64>,
) -> DualCertificate {
    dual::repair_dual(problem.distances.entries(), problem.k, y0, s0, true)
}

/// Threshold below which an iterate counts as a partition matrix.
const PARTITION_EXACT_TOL: f64 = 1e-3;

/// Round an approximate solution matrix to a partition of `y`.
///
/// If `z` is within Frobenius distance 1e-3 of some partition matrix
/// (detected by thresholding entries at `1/(2s)`), that partition is
/// returned directly. Otherwise the rows of the top-k eigenvector embedding
/// are clustered by Lloyd's algorithm seeded with the deterministic
/// k-means++ indices.
pub fn round_solution(z: &DMatrix<f64>, y: &Dataset, k: usize) -> Result<Partition> {
    let s = z.nrows();
    if s != y.len() || z.ncols() != s {
        return Err(Error::InvalidInput(format!(
            "solution matrix is {}x{}, dataset has {} points",
            z.nrows(),
            z.ncols(),
            y.len()
        )));
    }
    if let Some(partition) = detect_partition_matrix(z, k) {
        return Ok(partition);
    }

    // spectral embedding from the top-k eigenpairs
    let mut sym = z.clone();
    dual::symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..s).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let mut embed = DMatrix::<f64>::zeros(k, s);
    for (t, &idx) in order.iter().take(k).enumerate() {
        let scale = eig.eigenvalues[idx].max(0.0).sqrt();
        for i in 0..s {
            embed[(t, i)] = scale * eig.eigenvectors[(i, idx)];
        }
    }
    let embedded = Dataset::from_coords(embed)?;
    let init = kmeans::deterministic_kmeanspp(&embedded, k)?;
    let centers: Vec<DVector<f64>> = init
        .indices()
        .iter()
        .map(|&i| embedded.point(i).into_owned())
        .collect();
    let result = kmeans::lloyd(&embedded, k, &centers, 100)?;
    Ok(result.partition)
}

/// Detect `Z ~ Z_Gamma` by thresholding entries at `1/(2s)` and reading
/// connected components; accept only on a Frobenius check.
fn detect_partition_matrix(z: &DMatrix<f64>, k: usize) -> Option<Partition> {
    let s = z.nrows();
    let threshold = 1.0 / (2.0 * s as f64);
    let mut labels = vec![usize::MAX; s];
    let mut next = 0usize;
    for start in 0..s {
        if labels[start] != usize::MAX {
            continue;
        }
        let mut stack = vec![start];
        labels[start] = next;
        while let Some(i) = stack.pop() {
            for j in 0..s {
                if labels[j] == usize::MAX && z[(i, j)] > threshold {
                    labels[j] = next;
                    stack.push(j);
                }
            }
        }
        next += 1;
    }
    if next != k {
        return None;
    }
    let partition = Partition::new(labels, k).ok()?;
    let z_gamma = dataset::partition_matrix(&partition);
    if (z - z_gamma).norm() <= PARTITION_EXACT_TOL {
        Some(partition)
    } else {
        None
    }
}
