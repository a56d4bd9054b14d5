//! Constraint operators of the relaxation and dual-certificate repair.
//!
//! The constraint map is `A(Z) = [tr Z; Z 1]` with right-hand side
//! `b = [k; 1; ...; 1]`, and its adjoint is
//! `A*(y) = y_0 I + (1 y_{1:s}^T + y_{1:s} 1^T) / 2`.
//! Any `(y, P, S)` with `A*(y) + P + S = D`, `P >= 0`, `S >= 0 (psd)` makes
//! `b^T y / (2s)` a lower bound on the relaxation value by weak duality. The
//! repair below turns an approximate dual triple into an exactly feasible one
//! without ever failing, so inexact solver output still yields a rigorous
//! bound.

use nalgebra::{DMatrix, DVector};

use super::simplex;

/// Right-hand side `b = (k, 1, ..., 1)` of the constraint map.
pub fn rhs(s: usize, k: usize) -> DVector<f64> {
    let mut b = DVector::from_element(s + 1, 1.0);
    b[0] = k as f64;
    b
}

/// `A(Z) = [tr Z; Z 1]`.
pub fn apply_constraints(z: &DMatrix<f64>) -> DVector<f64> {
    let s = z.nrows();
    let mut out = DVector::zeros(s + 1);
    out[0] = z.trace();
    for i in 0..s {
        out[1 + i] = z.row(i).sum();
    }
    out
}

/// `A*(y) = y_0 I + (1 y^T + y 1^T)/2` with `y` the vector part of the dual.
pub fn apply_adjoint(y: &DVector<f64>) -> DMatrix<f64> {
    let s = y.len() - 1;
    DMatrix::from_fn(s, s, |i, j| {
        let mut v = 0.5 * (y[1 + i] + y[1 + j]);
        if i == j {
            v += y[0];
        }
        v
    })
}

/// `b^T y`.
pub fn rhs_dot(y: &DVector<f64>, k: usize) -> f64 {
    let s = y.len() - 1;
    k as f64 * y[0] + (1..=s).map(|i| y[i]).sum::<f64>()
}

/// Solve `A(A*(y)) = t` for `y`; closed form thanks to the operator's
/// structure. Via the normal equations this is the least-squares fit of a
/// matrix `G` by `A*(y)` when `t = A(G)`.
pub fn solve_normal_equations(t: &DVector<f64>) -> DVector<f64> {
    let s = t.len() - 1;
    let sf = s as f64;
    let t0 = t[0];
    let v_sum: f64 = (1..=s).map(|i| t[i]).sum();
    // s*y0 + sigma = t0 and s*y0 + s*sigma = sum(v), sigma = sum of y_{1:s}
    let sigma = if s > 1 {
        (v_sum - t0) / (sf - 1.0)
    } else {
        // s = 1: A*(y) is the 1x1 matrix y0 + y1; split the mass evenly
        0.5 * t0
    };
    let y0 = if s > 1 { (t0 - sigma) / sf } else { 0.5 * t0 };
    let mut y = DVector::zeros(s + 1);
    y[0] = y0;
    for i in 0..s {
        y[1 + i] = (2.0 / sf) * (t[1 + i] - y0 - 0.5 * sigma);
    }
    y
}

/// Projection of a symmetric matrix onto the affine space `{A(Z) = b}`.
pub fn project_affine(m: &DMatrix<f64>, b: &DVector<f64>) -> DMatrix<f64> {
    let t = apply_constraints(m) - b;
    let y = solve_normal_equations(&t);
    let mut out = m - apply_adjoint(&y);
    symmetrize(&mut out);
    out
}

pub fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for j in 0..n {
        for i in 0..j {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Eigenvalue clipping onto the PSD cone. Returns the projection and the
/// number of retained (positive) eigenvalues.
pub fn project_psd(m: &DMatrix<f64>) -> (DMatrix<f64>, usize) {
    let s = m.nrows();
    let mut sym = m.clone();
    symmetrize(&mut sym);
    let eig = sym.symmetric_eigen();
    let positive: Vec<usize> = (0..s).filter(|&i| eig.eigenvalues[i] > 0.0).collect();
    if positive.is_empty() {
        return (DMatrix::zeros(s, s), 0);
    }
    let mut w = DMatrix::<f64>::zeros(s, positive.len());
    for (col, &i) in positive.iter().enumerate() {
        let scale = eig.eigenvalues[i].sqrt();
        w.set_column(col, &(eig.eigenvectors.column(i) * scale));
    }
    let mut out = &w * w.transpose();
    symmetrize(&mut out);
    (out, positive.len())
}

/// An exactly dual-feasible certificate for the relaxation.
#[derive(Debug, Clone)]
pub struct DualCertificate {
    /// Multiplier of the affine constraints, `(s+1)`-vector.
    pub y: DVector<f64>,
    /// Entrywise-nonnegative slack.
    pub p: DMatrix<f64>,
    /// Positive-semidefinite slack.
    pub s_mat: DMatrix<f64>,
    /// `b^T y / (2s)`; valid lower bound on the relaxation value.
    pub bound: f64,
    /// Whether the LP polish replaced the analytic repair.
    pub polished: bool,
}

/// Sketch sizes above this skip the LP polish.
pub const LP_POLISH_MAX_SIZE: usize = 200;

/// Repair an approximate dual `(y0, S0)` into an exactly feasible certificate.
///
/// 1. `S` is `S0` eigenvalue-clipped onto the PSD cone.
/// 2. `P~ = D - A*(y0) - S` may have negative entries; shifting
///    `y_i -> y_i - 2 delta_i` with `delta_i = max_j max(0, -P~_ij)` adds
///    `delta_i + delta_j` to entry `(i, j)`, making `P` nonnegative. `y_0` is
///    untouched.
/// 3. When `s <= 200` and `polish` is set, a simplex solve of
///    `max b^T y  s.t.  A*(y) <= D - S` replaces `y` if it improves the bound;
///    the simplex output goes through the same shift so the certificate never
///    depends on LP accuracy.
pub fn repair_dual(
    d: &DMatrix<f64>,
    k: usize,
    y0: &DVector<f64>,
    s0: &DMatrix<f64>,
    polish: bool,
) -> DualCertificate {
    let s = d.nrows();
    assert_eq!(y0.len(), s + 1, "dual vector has wrong length");
    assert_eq!(s0.nrows(), s, "dual slack has wrong size");

    let (s_mat, _) = project_psd(s0);
    let margin = 1e-12 + 16.0 * f64::EPSILON * d.amax().max(1.0);

    let (y_analytic, bound_analytic) = shift_feasible(d, k, y0, &s_mat, margin);

    let mut y_best = y_analytic;
    let mut bound_best = bound_analytic;
    let mut polished = false;
    if polish && s <= LP_POLISH_MAX_SIZE {
        let slack = d - &s_mat;
        if let Some(y_lp) = simplex::maximize_dual(&slack, k) {
            let (y_fixed, bound_lp) = shift_feasible(d, k, &y_lp, &s_mat, margin);
            if bound_lp > bound_best {
                y_best = y_fixed;
                bound_best = bound_lp;
                polished = true;
            }
        }
    }

    let p = d - apply_adjoint(&y_best) - &s_mat;
    DualCertificate {
        y: y_best,
        p,
        s_mat,
        bound: bound_best,
        polished,
    }
}

/// The delta-shift: returns a feasible `y` and its certified bound.
fn shift_feasible(
    d: &DMatrix<f64>,
    k: usize,
    y0: &DVector<f64>,
    s_mat: &DMatrix<f64>,
    margin: f64,
) -> (DVector<f64>, f64) {
    let s = d.nrows();
    let p_tilde = d - apply_adjoint(y0) - s_mat;
    let mut delta = vec![0.0f64; s];
    for i in 0..s {
        let mut worst = 0.0f64;
        for j in 0..s {
            worst = worst.max(-p_tilde[(i, j)]);
        }
        if worst > 0.0 {
            delta[i] = worst + margin;
        }
    }
    let mut y = y0.clone();
    for i in 0..s {
        y[1 + i] -= 2.0 * delta[i];
    }
    let bound = rhs_dot(&y, k) / (2.0 * s as f64);
    (y, bound)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn adjoint_matches_inner_product() {
        // <A(Z), y> == <Z, A*(y)> for random symmetric Z
        let mut rng = crate::seeding::master_rng(31);
        for _ in 0..10 {
            let s = rng.random_range(2..8usize);
            let mut z = DMatrix::<f64>::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
            symmetrize(&mut z);
            let y = DVector::<f64>::from_fn(s + 1, |_, _| rng.random_range(-1.0..1.0));
            let lhs = apply_constraints(&z).dot(&y);
            let rhs_ip = (apply_adjoint(&y).transpose() * &z).trace();
            assert!((lhs - rhs_ip).abs() < 1e-10);
        }
    }

    #[test]
    fn affine_projection_is_feasible_and_idempotent() {
        let mut rng = crate::seeding::master_rng(32);
        for _ in 0..10 {
            let s = rng.random_range(2..9usize);
            let k = rng.random_range(2..=s);
            let b = rhs(s, k);
            let mut m = DMatrix::<f64>::from_fn(s, s, |_, _| rng.random_range(-2.0..2.0));
            symmetrize(&mut m);
            let p = project_affine(&m, &b);
            let res = apply_constraints(&p) - &b;
            assert!(res.amax() < 1e-10);
            let p2 = project_affine(&p, &b);
            assert!((&p2 - &p).amax() < 1e-10);
        }
    }

    #[test]
    fn psd_projection_clips_negatives() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, -3.0]);
        let (p, rank) = project_psd(&m);
        assert_eq!(rank, 1);
        assert!((p[(0, 0)] - 1.0).abs() < 1e-12);
        assert!(p[(1, 1)].abs() < 1e-12);
    }

    #[test]
    fn repair_noop_when_already_feasible() {
        // y0 = 0, S0 = 0 gives P = D >= 0 and bound 0
        let d = DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]);
        let y0 = DVector::zeros(3);
        let s0 = DMatrix::zeros(2, 2);
        let cert = repair_dual(&d, 2, &y0, &s0, false);
        assert_eq!(cert.bound, 0.0);
        assert!((&cert.p - &d).amax() < 1e-9);
    }

    #[test]
    fn repair_restores_feasibility() {
        let mut rng = crate::seeding::master_rng(33);
        for _ in 0..20 {
            let s = rng.random_range(2..7usize);
            let k = rng.random_range(2..=s);
            let mut d = DMatrix::<f64>::from_fn(s, s, |_, _| rng.random_range(0.0..4.0));
            symmetrize(&mut d);
            for i in 0..s {
                d[(i, i)] = 0.0;
            }
            let y0 = DVector::<f64>::from_fn(s + 1, |_, _| rng.random_range(-1.0..1.0));
            let mut s0 = DMatrix::<f64>::from_fn(s, s, |_, _| rng.random_range(-1.0..1.0));
            symmetrize(&mut s0);
            let cert = repair_dual(&d, k, &y0, &s0, false);
            // exact feasibility: A*(y) + P + S = D, P >= 0, S psd
            let recon = apply_adjoint(&cert.y) + &cert.p + &cert.s_mat;
            assert!((&recon - &d).amax() < 1e-9);
            assert!(cert.p.min() >= -1e-12);
            let eig = cert.s_mat.clone().symmetric_eigen();
            assert!(eig.eigenvalues.min() >= -1e-10);
        }
    }
}
