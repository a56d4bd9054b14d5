//! Separation diagnostics for a clustered dataset.
//!
//! `alpha` measures how far a cluster sits from the hyperplane bisecting a
//! centroid pair, `beta` scales the dataset's spread by the pair's sizes, and
//! their worst-case margin `prox` certifies SDP tightness when positive. The
//! shape parameter turns these quantities into the sketch-size constant used
//! by the exact-recovery guarantee; it is invariant to rotation, translation,
//! and dilation.

use nalgebra::{DMatrix, DVector};
use rand::Rng;

use crate::dataset::{centroid, Dataset, Partition};
use crate::{Error, Result};

/// Full decomposition is used below this dimension, power iteration above.
const SPECTRAL_DENSE_LIMIT: usize = 64;
const POWER_ITER_TOL: f64 = 1e-8;
const POWER_ITER_CAP: usize = 10_000;

/// Bisection bracket and tolerance for the shape-parameter threshold.
const SHAPE_BRACKET_LO: f64 = 1.0;
const SHAPE_BRACKET_HI: f64 = 1e12;
const SHAPE_BISECT_ITERS: usize = 200;
const SHAPE_BISECT_REL_TOL: f64 = 1e-6;

/// Summary geometry of a clustered dataset.
#[derive(Debug, Clone)]
pub struct ShapeStats {
    /// Minimum inter-centroid distance.
    pub delta: f64,
    /// Maximum within-cluster radius.
    pub r: f64,
    /// Worst-case separation margin; may be negative.
    pub prox: f64,
    /// Smallest cluster fraction `n_min / n`.
    pub pi_min: f64,
    /// Largest cluster fraction `n_max / n`.
    pub pi_max: f64,
    pub k: usize,
    pub d: usize,
    /// Sketch-size constant; `+inf` when the recovery hypotheses fail.
    pub shape_parameter: f64,
}

/// `alpha_ST`: minimum signed margin of cluster `s`'s points against the
/// bisector of centroids `c_s`, `c_t`, measured toward `c_s`.
pub fn alpha(x: &Dataset, partition: &Partition, s: usize, t: usize) -> Result<f64> {
    check_pair(partition, s, t)?;
    let clusters = partition.clusters();
    let c_s = centroid(x, &clusters[s])?;
    let c_t = centroid(x, &clusters[t])?;
    alpha_from_centroids(x, &clusters[s], &c_s, &c_t, s, t)
}

fn alpha_from_centroids(
    x: &Dataset,
    members_s: &[usize],
    c_s: &DVector<f64>,
    c_t: &DVector<f64>,
    s: usize,
    t: usize,
) -> Result<f64> {
    let diff = c_s - c_t;
    let norm = diff.norm();
    if norm == 0.0 {
        return Err(Error::DegenerateCentroidPair { s, t });
    }
    let direction = diff / norm;
    let midpoint = (c_s + c_t) / 2.0;
    let mut best = f64::INFINITY;
    for &i in members_s {
        let margin = (x.point(i) - &midpoint).dot(&direction);
        best = best.min(margin);
    }
    Ok(best)
}

/// `beta_ST = 1/2 * ((1/|S| + 1/|T|) * sum_R ||X_R||_{2->2}^2)^{1/2}` where
/// `X_R` is the centered cluster matrix of `R`.
pub fn beta(x: &Dataset, partition: &Partition, s: usize, t: usize) -> Result<f64> {
    check_pair(partition, s, t)?;
    let clusters = partition.clusters();
    let total = centered_spectral_sq_sum(x, &clusters)?;
    let inv_sizes = 1.0 / clusters[s].len() as f64 + 1.0 / clusters[t].len() as f64;
    Ok(0.5 * (inv_sizes * total).sqrt())
}

fn check_pair(partition: &Partition, s: usize, t: usize) -> Result<()> {
    if s == t || s >= partition.k() || t >= partition.k() {
        return Err(Error::InvalidInput(format!(
            "need distinct cluster ids in [0, {}), got ({s}, {t})",
            partition.k()
        )));
    }
    Ok(())
}

/// Sum over clusters of the squared spectral norm of the centered cluster
/// matrix. Shared by every `beta` pair.
fn centered_spectral_sq_sum(x: &Dataset, clusters: &[Vec<usize>]) -> Result<f64> {
    let mut total = 0.0;
    for members in clusters {
        let c = centroid(x, members)?;
        let mut m = DMatrix::<f64>::zeros(x.dim(), members.len());
        for (col, &i) in members.iter().enumerate() {
            m.set_column(col, &(x.point(i) - &c));
        }
        let sigma = spectral_norm(&m);
        total += sigma * sigma;
    }
    Ok(total)
}

/// `prox(X, Gamma) = min over ordered pairs S != T of (alpha_ST - beta_ST)`.
pub fn prox_value(x: &Dataset, partition: &Partition) -> Result<f64> {
    let k = partition.k();
    if k < 2 {
        return Err(Error::InvalidInput(
            "prox needs at least two clusters".into(),
        ));
    }
    let clusters = partition.clusters();
    let centroids: Vec<DVector<f64>> = clusters
        .iter()
        .map(|members| centroid(x, members))
        .collect::<Result<_>>()?;
    let total = centered_spectral_sq_sum(x, &clusters)?;

    let mut worst = f64::INFINITY;
    for s in 0..k {
        for t in 0..k {
            if s == t {
                continue;
            }
            let a = alpha_from_centroids(x, &clusters[s], &centroids[s], &centroids[t], s, t)?;
            let inv_sizes = 1.0 / clusters[s].len() as f64 + 1.0 / clusters[t].len() as f64;
            let b = 0.5 * (inv_sizes * total).sqrt();
            worst = worst.min(a - b);
        }
    }
    Ok(worst)
}

/// Largest singular value of a dense matrix.
///
/// Small matrices go through a full symmetric decomposition of the Gram
/// matrix on the shorter side; larger ones use matrix-free power iteration
/// with a fixed seeded start vector, relative tolerance 1e-8, and an
/// iteration cap.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    let (rows, cols) = (m.nrows(), m.ncols());
    if rows == 0 || cols == 0 {
        return 0.0;
    }
    let small = rows.min(cols);
    if small <= SPECTRAL_DENSE_LIMIT {
        let gram = if rows <= cols {
            m * m.transpose()
        } else {
            m.transpose() * m
        };
        let eig = gram.symmetric_eigen();
        return eig.eigenvalues.max().max(0.0).sqrt();
    }

    // power iteration on the smaller Gram operator, applied matrix-free
    let mut rng = crate::seeding::master_rng(0x5eed);
    let dim = small;
    let mut v = DVector::<f64>::from_fn(dim, |_, _| rng.random::<f64>() - 0.5);
    let nv = v.norm();
    if nv == 0.0 {
        return 0.0;
    }
    v /= nv;
    let apply = |v: &DVector<f64>| -> DVector<f64> {
        if rows <= cols {
            m * (m.transpose() * v)
        } else {
            m.transpose() * (m * v)
        }
    };
    let mut lambda = 0.0f64;
    for _ in 0..POWER_ITER_CAP {
        let w = apply(&v);
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let new_lambda = v.dot(&w);
        v = w / norm;
        if (new_lambda - lambda).abs() <= POWER_ITER_TOL * new_lambda.abs() {
            lambda = new_lambda;
            break;
        }
        lambda = new_lambda;
    }
    lambda.max(0.0).sqrt()
}

/// Sketch-size constant `C(X, Gamma)` from the exact-recovery analysis.
///
/// Returns `+inf` when `prox <= 0` or `r > delta/2`. Otherwise `C` is the
/// larger of two thresholds: `c1` solves a closed-form linear condition, and
/// `c2` is found by bisection on a strictly decreasing right-hand side.
/// Natural logarithms throughout.
pub fn shape_parameter(x: &Dataset, partition: &Partition) -> Result<f64> {
    let geom = geometry(x, partition)?;
    let prox = prox_value(x, partition)?;
    Ok(shape_parameter_from(
        geom.0,
        geom.1,
        prox,
        geom.2,
        geom.3,
        partition.k(),
        x.dim(),
    ))
}

fn shape_parameter_from(
    delta: f64,
    r: f64,
    prox: f64,
    pi_min: f64,
    pi_max: f64,
    k: usize,
    d: usize,
) -> f64 {
    if prox <= 0.0 || r > delta / 2.0 {
        return f64::INFINITY;
    }
    let kf = k as f64;
    let df = d as f64;
    let two_over_ln2 = 2.0 / std::f64::consts::LN_2;
    let log_a = (36.0 * kf.powi(3) * (df + 1.0)).ln();
    let log_b = (2.0 * kf * (df + 2.0)).ln();
    let log_c = (8.0 * kf * kf * (df + 2.0)).ln();
    let ratio = pi_max / pi_min;

    // c * pi_min >= (2/ln 2) * max{48 (pi_max/pi_min)^2 ln(36 k^3 (d+1)),
    //                              16 max{1, (delta/(2r) - 1)^-2} ln(2 k (d+2))}
    let edge = {
        let t = delta / (2.0 * r) - 1.0; // r = 0 gives t = inf, hence 0 below
        let inv_sq = if t > 0.0 { 1.0 / (t * t) } else { f64::INFINITY };
        inv_sq.max(1.0)
    };
    let c1 =
        two_over_ln2 * (48.0 * ratio * ratio * log_a).max(16.0 * edge * log_b) / pi_min;
    if !c1.is_finite() {
        return f64::INFINITY; // boundary case r = delta/2
    }

    // prox/r > (2r/delta + 3/2) * 8 * sqrt(ln(8 k^2 (d+2)) * (2/ln 2) / (c pi_min))
    //          + 1/2 * [ (16 sqrt 3 + sqrt(104/3)) * k / sqrt(c pi_min)
    //                     * (pi_max/pi_min) * ln^{1/2}(36 k^3 (d+1)) * (2/ln 2)^{1/2} ]^{1/2}
    let rhs = |c: f64| -> f64 {
        let cp = c * pi_min;
        let first = (2.0 * r / delta + 1.5) * 8.0 * (log_c * two_over_ln2 / cp).sqrt();
        let inner = (16.0 * 3.0f64.sqrt() + (104.0f64 / 3.0).sqrt()) * kf / cp.sqrt()
            * ratio
            * log_a.sqrt()
            * two_over_ln2.sqrt();
        first + 0.5 * inner.sqrt()
    };
    let target = prox / r; // r = 0 gives +inf: the condition holds immediately

    let c2 = if target > rhs(SHAPE_BRACKET_LO) {
        SHAPE_BRACKET_LO
    } else if target <= rhs(SHAPE_BRACKET_HI) {
        return f64::INFINITY; // no crossing inside the bracket
    } else {
        let mut lo = SHAPE_BRACKET_LO;
        let mut hi = SHAPE_BRACKET_HI;
        for _ in 0..SHAPE_BISECT_ITERS {
            if hi - lo <= SHAPE_BISECT_REL_TOL * hi {
                break;
            }
            let mid = 0.5 * (lo + hi);
            if target > rhs(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };

    c1.max(c2)
}

/// (delta, r, pi_min, pi_max)
fn geometry(x: &Dataset, partition: &Partition) -> Result<(f64, f64, f64, f64)> {
    let k = partition.k();
    if k < 2 {
        return Err(Error::InvalidInput(
            "cluster geometry needs at least two clusters".into(),
        ));
    }
    let clusters = partition.clusters();
    let centroids: Vec<DVector<f64>> = clusters
        .iter()
        .map(|members| centroid(x, members))
        .collect::<Result<_>>()?;

    let mut delta = f64::INFINITY;
    for s in 0..k {
        for t in s + 1..k {
            delta = delta.min((&centroids[s] - &centroids[t]).norm());
        }
    }
    let mut r = 0.0f64;
    for (members, c) in clusters.iter().zip(centroids.iter()) {
        for &i in members {
            r = r.max(x.squared_distance_to(i, c).sqrt());
        }
    }
    let n = x.len() as f64;
    let sizes = partition.cluster_sizes();
    let n_min = *sizes.iter().min().expect("nonempty partition") as f64;
    let n_max = *sizes.iter().max().expect("nonempty partition") as f64;
    Ok((delta, r, n_min / n, n_max / n))
}

/// All shape quantities of `(X, Gamma)` in one pass.
pub fn cluster_stats(x: &Dataset, partition: &Partition) -> Result<ShapeStats> {
    let (delta, r, pi_min, pi_max) = geometry(x, partition)?;
    let prox = prox_value(x, partition)?;
    let shape =
        shape_parameter_from(delta, r, prox, pi_min, pi_max, partition.k(), x.dim());
    Ok(ShapeStats {
        delta,
        r,
        prox,
        pi_min,
        pi_max,
        k: partition.k(),
        d: x.dim(),
        shape_parameter: shape,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{brute_force_ip, for_each_partition};
    use crate::seeding;

    fn dataset_1d(values: &[f64]) -> Dataset {
        Dataset::from_scalars(values).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let x = dataset_1d(&[0.0, 4.0]);
        let g = Partition::new(vec![0, 1], 2).unwrap();
        assert_eq!(alpha(&x, &g, 0, 1).unwrap(), 2.0);

        let x = dataset_1d(&[0.0, 1.0, 4.0]);
        let g = Partition::new(vec![0, 0, 1], 2).unwrap();
        assert!((alpha(&x, &g, 0, 1).unwrap() - 1.25).abs() < 1e-12);
    }

    #[test]
    fn alpha_symmetric_for_mirrored_clusters() {
        let x = dataset_1d(&[-3.0, -1.0, 1.0, 3.0]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let a_st = alpha(&x, &g, 0, 1).unwrap();
        let a_ts = alpha(&x, &g, 1, 0).unwrap();
        assert!((a_st - a_ts).abs() < 1e-12);
    }

    #[test]
    fn alpha_degenerate_centroids_error() {
        let x = dataset_1d(&[0.0, 2.0, 1.0, 1.0]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(matches!(
            alpha(&x, &g, 0, 1),
            Err(Error::DegenerateCentroidPair { .. })
        ));
    }

    #[test]
    fn beta_examples() {
        let x = dataset_1d(&[0.0, 4.0]);
        let g = Partition::new(vec![0, 1], 2).unwrap();
        assert_eq!(beta(&x, &g, 0, 1).unwrap(), 0.0);

        let x = dataset_1d(&[-1.0, 1.0, 10.0]);
        let g = Partition::new(vec![0, 0, 1], 2).unwrap();
        let expected = 0.5 * 3.0f64.sqrt();
        assert!((beta(&x, &g, 0, 1).unwrap() - expected).abs() < 1e-12);

        // symmetric in (s, t)
        assert_eq!(
            beta(&x, &g, 0, 1).unwrap(),
            beta(&x, &g, 1, 0).unwrap()
        );
    }

    #[test]
    fn prox_examples() {
        let x = dataset_1d(&[0.0, 4.0]);
        let g = Partition::new(vec![0, 1], 2).unwrap();
        assert_eq!(prox_value(&x, &g).unwrap(), 2.0);

        // hand oracle: alpha = 0.5 both ways, beta = 0.5
        let x = dataset_1d(&[0.0, 1.0, 2.0, 3.0]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let a = alpha(&x, &g, 0, 1).unwrap();
        let b = beta(&x, &g, 0, 1).unwrap();
        assert!((a - 0.5).abs() < 1e-12);
        assert!((b - 0.5).abs() < 1e-12);
        assert!(prox_value(&x, &g).unwrap().abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_small_cases() {
        assert_eq!(spectral_norm(&DMatrix::zeros(3, 3)), 0.0);
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, 1.0]);
        assert!((spectral_norm(&m) - 3.0).abs() < 1e-12);
        let m = DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0]);
        assert!((spectral_norm(&m) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn spectral_norm_matches_svd_on_random_matrices() {
        let mut rng = seeding::master_rng(21);
        for &(rows, cols) in &[(80usize, 120usize), (200, 200), (150, 90)] {
            let m = DMatrix::<f64>::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0));
            let ours = spectral_norm(&m);
            let svd = m.clone().svd(false, false);
            let reference = svd.singular_values.max();
            assert!(
                (ours - reference).abs() <= 1e-6 * reference,
                "power {ours} vs svd {reference}"
            );
        }
    }

    #[test]
    fn shape_parameter_hypothesis_failures() {
        // overlapping clusters: prox <= 0
        let x = dataset_1d(&[0.0, 1.0, 0.5, 1.5]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        assert!(prox_value(&x, &g).unwrap() <= 0.0);
        assert!(shape_parameter(&x, &g).unwrap().is_infinite());

        // r > delta / 2: wide clusters with close centroids
        let x = dataset_1d(&[-10.0, 10.0, -9.0, 11.0]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let stats = cluster_stats(&x, &g).unwrap();
        assert!(stats.r > stats.delta / 2.0);
        assert!(stats.shape_parameter.is_infinite());
    }

    #[test]
    fn shape_parameter_two_singletons_closed_form() {
        // d = 1, k = 2, singleton clusters at distance 4: r = 0, so only the
        // closed-form threshold binds. Hand calculation:
        //   c1 = (2/ln 2) * 48 * ln(576) / (1/2) = 1760.627
        let x = dataset_1d(&[0.0, 4.0]);
        let g = Partition::new(vec![0, 1], 2).unwrap();
        let c = shape_parameter(&x, &g).unwrap();
        assert!(c.is_finite());
        assert!((c - 1760.627).abs() < 0.01, "C = {c}");
    }

    #[test]
    fn cluster_stats_examples() {
        let x = dataset_1d(&[0.0, 4.0]);
        let g = Partition::new(vec![0, 1], 2).unwrap();
        let s = cluster_stats(&x, &g).unwrap();
        assert_eq!(s.delta, 4.0);
        assert_eq!(s.r, 0.0);
        assert_eq!(s.prox, 2.0);
        assert_eq!(s.pi_min, 0.5);
        assert_eq!(s.pi_max, 0.5);

        let x = dataset_1d(&[0.0, 1.0, 10.0, 11.0]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let s = cluster_stats(&x, &g).unwrap();
        assert!((s.delta - 10.0).abs() < 1e-12);
        assert!((s.r - 0.5).abs() < 1e-12);
    }

    #[test]
    fn dilation_equivariance() {
        let x = dataset_1d(&[0.0, 1.0, 10.0, 11.5]);
        let g = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
        let base = cluster_stats(&x, &g).unwrap();
        for c in [0.5, 2.0, 10.0] {
            let scaled = Dataset::from_coords(x.coords() * c).unwrap();
            let stats = cluster_stats(&scaled, &g).unwrap();
            assert!((stats.prox - c * base.prox).abs() <= 1e-9 * (1.0 + base.prox.abs()));
            assert!((stats.delta - c * base.delta).abs() <= 1e-9);
            assert!((stats.r - c * base.r).abs() <= 1e-9);
            assert_eq!(stats.pi_min, base.pi_min);
            if base.shape_parameter.is_finite() {
                assert!(
                    (stats.shape_parameter - base.shape_parameter).abs()
                        <= 1e-6 * base.shape_parameter
                );
            } else {
                assert!(stats.shape_parameter.is_infinite());
            }
        }
    }

    #[test]
    fn prox_bounded_by_geometry() {
        // prox <= max alpha_ST <= delta/2 + r
        let mut rng = seeding::master_rng(22);
        for _ in 0..20 {
            let n = rng.random_range(4..12usize);
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| vec![rng.random_range(-4.0..4.0), rng.random_range(-4.0..4.0)])
                .collect();
            let x = Dataset::from_rows(&rows).unwrap();
            let assignment: Vec<usize> = (0..n).map(|i| i % 2).collect();
            let g = Partition::new(assignment, 2).unwrap();
            let stats = match cluster_stats(&x, &g) {
                Ok(s) => s,
                Err(Error::DegenerateCentroidPair { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            let mut max_alpha = f64::NEG_INFINITY;
            for s in 0..2 {
                for t in 0..2 {
                    if s != t {
                        max_alpha = max_alpha.max(alpha(&x, &g, s, t).unwrap());
                    }
                }
            }
            assert!(stats.prox <= max_alpha + 1e-12);
            assert!(max_alpha <= stats.delta / 2.0 + stats.r + 1e-12);
        }
    }

    #[test]
    fn at_most_one_positive_prox_partition() {
        // Proposition-style uniqueness, checked by enumeration for k = 2.
        let mut rng = seeding::master_rng(23);
        for trial in 0..12 {
            let n = rng.random_range(4..9usize);
            let rows: Vec<Vec<f64>> = if trial % 2 == 0 {
                // unstructured
                (0..n)
                    .map(|_| vec![rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)])
                    .collect()
            } else {
                // two separated blobs, so a positive-prox partition exists
                (0..n)
                    .map(|i| {
                        let off = if i % 2 == 0 { 0.0 } else { 8.0 };
                        vec![
                            off + rng.random_range(-0.5..0.5),
                            rng.random_range(-0.5..0.5),
                        ]
                    })
                    .collect()
            };
            let x = Dataset::from_rows(&rows).unwrap();
            let mut positive: Vec<Partition> = Vec::new();
            for_each_partition(n, 2, |assignment| {
                let g = Partition::new(assignment.to_vec(), 2).unwrap();
                if let Ok(p) = prox_value(&x, &g) {
                    if p > 0.0 {
                        positive.push(g);
                    }
                }
            });
            assert!(
                positive.len() <= 1,
                "found {} positive-prox partitions",
                positive.len()
            );
            if let Some(g) = positive.first() {
                let (_, opt) = brute_force_ip(&x, 2).unwrap();
                assert!(g.same_clustering(&opt));
            }
        }
    }
}
