//! Three-block consensus splitting for the relaxation.
//!
//! The feasible set is the intersection of the PSD cone, the affine slice
//! `{tr Z = k, Z 1 = 1}`, and the nonnegative orthant; each gets its own
//! consensus copy with a closed-form projection, and the linear objective is
//! absorbed into the consensus update. At a fixed point the scaled multipliers
//! reproduce the dual triple `(y, P, S)`, which the repair machinery turns
//! into a certified bound. The objective matrix is normalized to unit
//! Frobenius norm internally so the default step size is scale-free.

use nalgebra::{DMatrix, DVector};

use super::dual;

/// How often residual balancing may adjust the step size.
const RHO_ADAPT_EVERY: usize = 50;
/// Residual imbalance triggering a step-size change.
const RHO_IMBALANCE: f64 = 10.0;
const RHO_FACTOR: f64 = 2.0;
const RHO_MIN: f64 = 1e-8;
const RHO_MAX: f64 = 1e8;
/// Iterations to wait between expensive gap evaluations.
const GAP_CHECK_SPACING: usize = 25;

pub(super) struct AdmmState {
    pub z: DMatrix<f64>,
    x_psd: DMatrix<f64>,
    x_aff: DMatrix<f64>,
    x_nng: DMatrix<f64>,
    u_psd: DMatrix<f64>,
    u_aff: DMatrix<f64>,
    u_nng: DMatrix<f64>,
    pub rho: f64,
    pub iterations: usize,
}

pub(super) struct Tolerances {
    pub primal: f64,
    pub dual: f64,
    pub gap: f64,
}

pub(super) struct RunReport {
    pub converged: bool,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
}

impl AdmmState {
    pub fn new(z0: DMatrix<f64>, rho: f64) -> Self {
        let s = z0.nrows();
        AdmmState {
            x_psd: z0.clone(),
            x_aff: z0.clone(),
            x_nng: z0.clone(),
            u_psd: DMatrix::zeros(s, s),
            u_aff: DMatrix::zeros(s, s),
            u_nng: DMatrix::zeros(s, s),
            z: z0,
            rho,
            iterations: 0,
        }
    }

    /// Dual estimates in the paper frame (`A*(y0) + P + S0 ~ D`), given the
    /// factor mapping the normalized objective back to `D`.
    pub fn dual_estimates(&self, scale_back: f64) -> (DVector<f64>, DMatrix<f64>) {
        let g_aff = &self.u_aff * (self.rho * scale_back);
        let y0 = dual::solve_normal_equations(&dual::apply_constraints(&g_aff));
        let s0 = &self.u_psd * (self.rho * scale_back);
        (y0, s0)
    }
}

pub(super) struct Workspace<'a> {
    /// Objective matrix scaled to unit Frobenius norm.
    pub c_hat: &'a DMatrix<f64>,
    /// Original squared-distance matrix.
    pub d: &'a DMatrix<f64>,
    /// Constraint right-hand side.
    pub b: &'a DVector<f64>,
    pub k: usize,
    /// Maps the normalized dual frame back to the paper frame.
    pub scale_back: f64,
}

/// Run the splitting iteration until the three relative measures fall below
/// `tol` or the iteration budget is exhausted. The state persists, so a
/// second call continues where the first stopped.
pub(super) fn run(
    ws: &Workspace<'_>,
    state: &mut AdmmState,
    tol: &Tolerances,
    max_iter: usize,
) -> crate::Result<RunReport> {
    let s = ws.d.nrows();
    let sf = s as f64;
    let sqrt3 = 3.0f64.sqrt();
    let mut report = RunReport {
        converged: false,
        primal_residual: f64::INFINITY,
        dual_residual: f64::INFINITY,
        gap: f64::INFINITY,
    };
    let mut next_gap_check = 0usize;
    let mut done = 0usize;

    while done < max_iter {
        let rho = state.rho;

        let (x_psd, _) = dual::project_psd(&(&state.z - &state.u_psd));
        state.x_psd = x_psd;
        state.x_aff = dual::project_affine(&(&state.z - &state.u_aff), ws.b);
        state.x_nng = (&state.z - &state.u_nng).map(|v| v.max(0.0));

        let mut z_new = (&state.x_psd + &state.x_aff + &state.x_nng
            + &state.u_psd
            + &state.u_aff
            + &state.u_nng)
            / 3.0;
        z_new -= ws.c_hat / (3.0 * rho);

        let dz = (&z_new - &state.z).norm();
        state.u_psd += &state.x_psd - &z_new;
        state.u_aff += &state.x_aff - &z_new;
        state.u_nng += &state.x_nng - &z_new;
        state.z = z_new;
        state.iterations += 1;
        done += 1;

        if !state.z.iter().all(|v| v.is_finite()) {
            return Err(crate::Error::SolverDiverged);
        }

        let z_norm = state.z.norm().max(1.0);
        let primal_sq = (&state.x_psd - &state.z).norm_squared()
            + (&state.x_aff - &state.z).norm_squared()
            + (&state.x_nng - &state.z).norm_squared();
        report.primal_residual = primal_sq.sqrt() / (sqrt3 * z_norm);
        report.dual_residual = rho * sqrt3 * dz; // ||C_hat||_F = 1

        if report.primal_residual <= tol.primal
            && report.dual_residual <= tol.dual
            && state.iterations >= next_gap_check
        {
            next_gap_check = state.iterations + GAP_CHECK_SPACING;
            let (y0, s0) = state.dual_estimates(ws.scale_back);
            let cert = dual::repair_dual(ws.d, ws.k, &y0, &s0, false);
            let z_feas = feasibility_polish(&state.z, ws.b);
            let primal_value = frobenius_inner(ws.d, &z_feas) / (2.0 * sf);
            report.gap = (primal_value - cert.bound).abs()
                / primal_value.abs().max(cert.bound.abs()).max(1.0);
            if report.gap <= tol.gap {
                report.converged = true;
                return Ok(report);
            }
        }

        if state.iterations % RHO_ADAPT_EVERY == 0 {
            if report.primal_residual > RHO_IMBALANCE * report.dual_residual
                && state.rho * RHO_FACTOR <= RHO_MAX
            {
                state.rho *= RHO_FACTOR;
                state.u_psd /= RHO_FACTOR;
                state.u_aff /= RHO_FACTOR;
                state.u_nng /= RHO_FACTOR;
            } else if report.dual_residual > RHO_IMBALANCE * report.primal_residual
                && state.rho / RHO_FACTOR >= RHO_MIN
            {
                state.rho /= RHO_FACTOR;
                state.u_psd *= RHO_FACTOR;
                state.u_aff *= RHO_FACTOR;
                state.u_nng *= RHO_FACTOR;
            }
        }
    }
    Ok(report)
}

/// Push an almost-feasible iterate into the affine-and-nonnegative polytope
/// by alternating clipping with the affine projection.
pub(super) fn feasibility_polish(z: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let mut out = dual::project_affine(z, b);
    for _ in 0..100 {
        let min_entry = out.min();
        if min_entry >= -1e-10 {
            break;
        }
        out = out.map(|v| v.max(0.0));
        out = dual::project_affine(&out, b);
    }
    out
}

pub(super) fn frobenius_inner(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| x * y).sum()
}
