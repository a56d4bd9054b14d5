//! A small revised simplex method used to polish dual certificates.
//!
//! Solves `min c^T x  s.t.  A x = b, x >= 0` for sparse-column `A` with
//! `b >= 0`, via two phases with an explicit dense basis inverse that is
//! refactorized periodically. The caller consumes the *row multipliers* at
//! optimality: for the polish LP they are exactly the dual vector `y`
//! maximizing `b^T y` subject to `A*(y) <= M` entrywise.

use nalgebra::{DMatrix, DVector};

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-9;
const REFACTOR_EVERY: usize = 100;

/// Standard-form LP with sparse columns.
pub struct SparseLp {
    pub nrows: usize,
    /// Column `j` as (row, value) pairs.
    pub cols: Vec<Vec<(usize, f64)>>,
    pub costs: Vec<f64>,
    /// Right-hand side, assumed entrywise nonnegative.
    pub b: DVector<f64>,
}

pub struct LpSolution {
    /// Simplex row multipliers at the optimal basis.
    pub multipliers: DVector<f64>,
    pub objective: f64,
}

struct State<'a> {
    lp: &'a SparseLp,
    /// Basic column per row; `>= lp.cols.len()` denotes artificial `e_row`.
    basis: Vec<usize>,
    is_basic: Vec<bool>,
    binv: DMatrix<f64>,
    xb: DVector<f64>,
    pivots_since_refactor: usize,
}

impl<'a> State<'a> {
    fn new(lp: &'a SparseLp) -> Self {
        let m = lp.nrows;
        State {
            lp,
            basis: (0..m).map(|t| lp.cols.len() + t).collect(),
            is_basic: vec![false; lp.cols.len()],
            binv: DMatrix::identity(m, m),
            xb: lp.b.clone(),
            pivots_since_refactor: 0,
        }
    }

    fn column(&self, j: usize) -> Vec<(usize, f64)> {
        if j < self.lp.cols.len() {
            self.lp.cols[j].clone()
        } else {
            vec![(j - self.lp.cols.len(), 1.0)]
        }
    }

    fn cost(&self, j: usize, phase_one: bool) -> f64 {
        if j < self.lp.cols.len() {
            if phase_one {
                0.0
            } else {
                self.lp.costs[j]
            }
        } else if phase_one {
            1.0
        } else {
            0.0
        }
    }

    fn multipliers(&self, phase_one: bool) -> DVector<f64> {
        let m = self.lp.nrows;
        let cb = DVector::from_fn(m, |t, _| self.cost(self.basis[t], phase_one));
        self.binv.transpose() * cb
    }

    /// `Binv * a_j` via the sparse column.
    fn direction(&self, j: usize) -> DVector<f64> {
        let m = self.lp.nrows;
        let mut w = DVector::zeros(m);
        for &(r, v) in &self.column(j) {
            w.axpy(v, &self.binv.column(r).into_owned(), 1.0);
        }
        w
    }

    fn refactor(&mut self) -> bool {
        let m = self.lp.nrows;
        let mut bmat = DMatrix::zeros(m, m);
        for (t, &j) in self.basis.iter().enumerate() {
            for &(r, v) in &self.column(j) {
                bmat[(r, t)] = v;
            }
        }
        match bmat.try_inverse() {
            Some(inv) => {
                self.binv = inv;
                self.xb = &self.binv * &self.lp.b;
                for v in self.xb.iter_mut() {
                    if *v < 0.0 && *v > -1e-9 {
                        *v = 0.0;
                    }
                }
                self.pivots_since_refactor = 0;
                true
            }
            None => false,
        }
    }

    fn pivot(&mut self, enter: usize, row: usize, w: &DVector<f64>) {
        let m = self.lp.nrows;
        let piv = w[row];
        let step = self.xb[row] / piv;
        for t in 0..m {
            if t != row {
                self.xb[t] -= w[t] * step;
                if self.xb[t] < 0.0 && self.xb[t] > -1e-9 {
                    self.xb[t] = 0.0;
                }
            }
        }
        self.xb[row] = step;
        for r in 0..m {
            if r != row {
                let factor = w[r] / piv;
                if factor != 0.0 {
                    let row_vals = self.binv.row(row).into_owned();
                    let mut target = self.binv.row_mut(r);
                    for c in 0..m {
                        target[c] -= factor * row_vals[c];
                    }
                }
            }
        }
        {
            let mut r = self.binv.row_mut(row);
            for c in 0..m {
                r[c] /= piv;
            }
        }
        let leaving = self.basis[row];
        if leaving < self.lp.cols.len() {
            self.is_basic[leaving] = false;
        }
        self.basis[row] = enter;
        if enter < self.lp.cols.len() {
            self.is_basic[enter] = true;
        }
        self.pivots_since_refactor += 1;
    }

    /// Run one phase to optimality. Returns false on failure (unbounded or
    /// numerical breakdown).
    fn optimize(&mut self, phase_one: bool, max_pivots: usize) -> bool {
        let bland_after = max_pivots / 2;
        for iter in 0..max_pivots {
            if self.pivots_since_refactor >= REFACTOR_EVERY && !self.refactor() {
                return false;
            }
            let pi = self.multipliers(phase_one);
            // pricing: sparse columns make reduced costs O(nnz)
            let mut enter = None;
            let mut best_rc = -COST_TOL;
            for j in 0..self.lp.cols.len() {
                if self.is_basic[j] {
                    continue;
                }
                let mut rc = self.cost(j, phase_one);
                for &(r, v) in &self.lp.cols[j] {
                    rc -= v * pi[r];
                }
                if rc < best_rc {
                    best_rc = rc;
                    enter = Some(j);
                    if iter >= bland_after {
                        break; // Bland's rule: first improving column
                    }
                }
            }
            let Some(enter) = enter else {
                return true; // optimal
            };
            let w = self.direction(enter);
            let mut leave: Option<usize> = None;
            let mut best_ratio = f64::INFINITY;
            for t in 0..self.lp.nrows {
                if w[t] > PIVOT_TOL {
                    let ratio = self.xb[t] / w[t];
                    let better = ratio < best_ratio - 1e-12
                        || (ratio < best_ratio + 1e-12
                            && leave.is_some_and(|l| {
                                // prefer kicking artificials out at ties
                                self.basis[t] >= self.lp.cols.len()
                                    && self.basis[l] < self.lp.cols.len()
                            }));
                    if better {
                        best_ratio = ratio;
                        leave = Some(t);
                    }
                }
            }
            let Some(leave) = leave else {
                return false; // unbounded
            };
            self.pivot(enter, leave, &w);
        }
        false // pivot budget exhausted
    }

    fn phase_one_objective(&self) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .filter(|&(_, &j)| j >= self.lp.cols.len())
            .map(|(t, _)| self.xb[t])
            .sum()
    }

    /// Pivot any zero-level artificial out of the basis.
    fn expel_artificials(&mut self) -> bool {
        for t in 0..self.lp.nrows {
            if self.basis[t] < self.lp.cols.len() {
                continue;
            }
            let mut replaced = false;
            for j in 0..self.lp.cols.len() {
                if self.is_basic[j] {
                    continue;
                }
                let w = self.direction(j);
                if w[t].abs() > 1e-9 {
                    self.pivot(j, t, &w);
                    replaced = true;
                    break;
                }
            }
            if !replaced {
                return false;
            }
        }
        true
    }
}

/// Two-phase simplex for `min c^T x, Ax = b, x >= 0` with `b >= 0`.
pub fn solve_standard_form(lp: &SparseLp) -> Option<LpSolution> {
    if lp.b.iter().any(|&v| v < 0.0) {
        return None;
    }
    let max_pivots = 60 * lp.nrows + 2000;
    let mut state = State::new(lp);
    if !state.optimize(true, max_pivots) {
        return None;
    }
    if state.phase_one_objective() > 1e-7 * (1.0 + lp.b.amax()) {
        return None; // infeasible
    }
    if !state.expel_artificials() {
        return None;
    }
    if !state.optimize(false, max_pivots) {
        return None;
    }
    let multipliers = state.multipliers(false);
    let objective = state
        .basis
        .iter()
        .enumerate()
        .map(|(t, &j)| state.cost(j, false) * state.xb[t])
        .sum();
    Some(LpSolution {
        multipliers,
        objective,
    })
}

/// Solve `max b^T y  s.t.  A*(y) <= M` entrywise, for the constraint
/// structure of the relaxation, by running the simplex on its standard-form
/// dual. Returns the maximizing `y`, or `None` if the solve breaks down.
pub fn maximize_dual(m_slack: &DMatrix<f64>, k: usize) -> Option<DVector<f64>> {
    let s = m_slack.nrows();
    if s < 2 || k > s {
        return None;
    }
    let scale = m_slack.amax().max(1.0);
    let mut cols = Vec::with_capacity(s * (s + 1) / 2);
    let mut costs = Vec::with_capacity(s * (s + 1) / 2);
    for i in 0..s {
        for j in i..s {
            if i == j {
                cols.push(vec![(0usize, 1.0), (1 + i, 1.0)]);
                costs.push(m_slack[(i, i)] / scale);
            } else {
                cols.push(vec![(1 + i, 0.5), (1 + j, 0.5)]);
                costs.push(m_slack[(i, j)].min(m_slack[(j, i)]) / scale);
            }
        }
    }
    let lp = SparseLp {
        nrows: s + 1,
        cols,
        costs,
        b: super::dual::rhs(s, k),
    };
    let solution = solve_standard_form(&lp)?;
    if !solution.objective.is_finite() {
        return None;
    }
    let y = solution.multipliers * scale;
    if y.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdp::dual;
    use rand::Rng;

    #[test]
    fn textbook_lp() {
        // min -x1 - 2 x2  s.t.  x1 + x2 + s1 = 4, x1 + 3 x2 + s2 = 6
        let lp = SparseLp {
            nrows: 2,
            cols: vec![
                vec![(0, 1.0), (1, 1.0)],
                vec![(0, 1.0), (1, 3.0)],
                vec![(0, 1.0)],
                vec![(1, 1.0)],
            ],
            costs: vec![-1.0, -2.0, 0.0, 0.0],
            b: DVector::from_vec(vec![4.0, 6.0]),
        };
        let sol = solve_standard_form(&lp).unwrap();
        assert!((sol.objective + 5.0).abs() < 1e-9);
        assert!((sol.multipliers[0] + 0.5).abs() < 1e-9);
        assert!((sol.multipliers[1] + 0.5).abs() < 1e-9);
    }

    #[test]
    fn infeasible_lp_detected() {
        // x = -1 is impossible with x >= 0
        let lp = SparseLp {
            nrows: 1,
            cols: vec![vec![(0, -1.0)]],
            costs: vec![1.0],
            b: DVector::from_vec(vec![1.0]),
        };
        assert!(solve_standard_form(&lp).is_none());
    }

    #[test]
    fn two_point_dual_lp() {
        // distance matrix of two points: max 2 y0 + y1 + y2 with
        // y0 + y1 <= 0, y0 + y2 <= 0, (y1 + y2)/2 <= m has optimum 0
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 7.0, 7.0, 0.0]);
        let y = maximize_dual(&m, 2).unwrap();
        let obj = dual::rhs_dot(&y, 2);
        assert!(obj.abs() < 1e-8, "objective {obj}");
        let violation = (dual::apply_adjoint(&y) - &m).max();
        assert!(violation < 1e-8);
    }

    #[test]
    fn polish_is_feasible_and_beats_analytic_on_randoms() {
        let mut rng = crate::seeding::master_rng(41);
        for _ in 0..15 {
            let s = rng.random_range(3..9usize);
            let k = rng.random_range(2..=s);
            let mut m = DMatrix::<f64>::from_fn(s, s, |_, _| rng.random_range(0.0..5.0));
            dual::symmetrize(&mut m);
            for i in 0..s {
                m[(i, i)] = 0.0;
            }
            let Some(y) = maximize_dual(&m, k) else {
                panic!("polish failed on a feasible instance");
            };
            let violation = (dual::apply_adjoint(&y) - &m).max();
            assert!(violation < 1e-7, "violation {violation}");
            // maximization beats the trivial feasible point y = 0
            assert!(dual::rhs_dot(&y, k) >= -1e-9);
        }
    }
}
