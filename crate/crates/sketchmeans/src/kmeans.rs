//! Lloyd's algorithm and k-means++ initialization.
//!
//! Three seeding routines live here: the classical randomized k-means++
//! (D^2 sampling), the lower-bound sample it induces, and the deterministic
//! farthest-point variant whose coverage radius feeds the Hoeffding bound.

use nalgebra::DVector;
use rand::Rng;

use crate::dataset::{self, Dataset, Partition};
use crate::{Error, Result};

/// Relative objective decrease below which Lloyd stops.
const LLOYD_REL_TOL: f64 = 1e-12;

/// Default Lloyd iteration cap.
pub const LLOYD_MAX_ITER: usize = 300;

/// Outcome of a Lloyd run.
#[derive(Debug, Clone)]
pub struct KmeansResult {
    /// Final partition (fewer than `k` clusters only if repair was impossible).
    pub partition: Partition,
    /// Normalized objective of `partition`.
    pub value: f64,
    /// Normalized objective of the initial assignment (`V^(0)`).
    pub initial_value: f64,
    /// Center-update/assignment rounds performed.
    pub iterations: usize,
}

/// Ordered, distinct indices chosen by deterministic k-means++ seeding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitIndices {
    indices: Vec<usize>,
}

impl InitIndices {
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn k(&self) -> usize {
        self.indices.len()
    }
}

/// Randomized k-means++ seeding: first center uniform, each subsequent center
/// drawn with probability proportional to squared distance from the chosen
/// set. Returns the centers and `V^(0)`, the normalized objective of the
/// induced assignment.
pub fn kmeanspp_init(
    x: &Dataset,
    k: usize,
    rng: &mut impl Rng,
) -> Result<(Vec<DVector<f64>>, f64)> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "k-means++ needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    let first = rng.random_range(0..n);
    chosen.push(first);
    is_chosen[first] = true;
    let mut dist2: Vec<f64> = (0..n).map(|i| x.squared_distance(i, first)).collect();

    while chosen.len() < k {
        let total: f64 = dist2.iter().sum();
        let next = if total > 0.0 {
            let r = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last_positive = None;
            for (i, &w) in dist2.iter().enumerate() {
                if w > 0.0 {
                    last_positive = Some(i);
                }
                acc += w;
                if acc > r {
                    pick = Some(i);
                    break;
                }
            }
            pick.or(last_positive).expect("positive total")
        } else {
            // remaining points coincide with chosen centers
            let unchosen: Vec<usize> = (0..n).filter(|&i| !is_chosen[i]).collect();
            unchosen[rng.random_range(0..unchosen.len())]
        };
        chosen.push(next);
        is_chosen[next] = true;
        for i in 0..n {
            let d = x.squared_distance(i, next);
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
    }

    let centers: Vec<DVector<f64>> = chosen.iter().map(|&i| x.point(i).into_owned()).collect();
    let induced = dataset::assign_to_nearest(x, &centers);
    let v0 = dataset::kmeans_value(x, &induced);
    Ok((centers, v0))
}

/// One draw of the k-means++ lower-bound sample `L = V^(0) / (8 (ln k + 2))`.
///
/// Only `E[L]` lower-bounds the optimal value; individual draws may exceed it.
/// Natural logarithm throughout.
pub fn kmeanspp_lb_sample(x: &Dataset, k: usize, rng: &mut impl Rng) -> Result<f64> {
    if k < 2 {
        return Err(Error::InvalidInput(format!(
            "lower-bound sample needs k >= 2, got {k}"
        )));
    }
    let (_, v0) = kmeanspp_init(x, k, rng)?;
    Ok(v0 / (8.0 * ((k as f64).ln() + 2.0)))
}

/// Lloyd's algorithm from explicit initial centers.
///
/// Stops when the assignment is unchanged or the relative objective decrease
/// falls below 1e-12, or after `max_iter` rounds. A cluster emptied during
/// assignment is re-seeded at the point farthest from its current center; if
/// every point sits exactly on its center the cluster stays empty and is
/// dropped from the returned partition.
pub fn lloyd(
    x: &Dataset,
    k: usize,
    init_centers: &[DVector<f64>],
    max_iter: usize,
) -> Result<KmeansResult> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "lloyd needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    if init_centers.len() != k {
        return Err(Error::InvalidInput(format!(
            "expected {k} initial centers, got {}",
            init_centers.len()
        )));
    }

    let mut centers: Vec<DVector<f64>> = init_centers.to_vec();
    let mut labels = dataset::assign_labels(x, &centers);
    let initial_value = labels_value(x, &labels);
    let mut value = initial_value;
    let mut iterations = 0usize;

    while iterations < max_iter {
        repair_empty_clusters(x, &centers, &mut labels, k);

        // centroid step
        let mut sums: Vec<DVector<f64>> = vec![DVector::zeros(x.dim()); k];
        let mut counts = vec![0usize; k];
        for (i, &c) in labels.iter().enumerate() {
            sums[c] += x.point(i);
            counts[c] += 1;
        }
        for c in 0..k {
            if counts[c] > 0 {
                centers[c] = &sums[c] / counts[c] as f64;
            }
        }

        // assignment step
        let new_labels = dataset::assign_labels(x, &centers);
        let new_value = labels_value(x, &new_labels);
        iterations += 1;

        let unchanged = new_labels == labels;
        let small_decrease = value - new_value < LLOYD_REL_TOL * (1.0 + value.abs());
        labels = new_labels;
        value = new_value;
        if unchanged || small_decrease {
            break;
        }
    }

    let partition = Partition::from_labels(&labels)?;
    Ok(KmeansResult {
        partition,
        value,
        initial_value,
        iterations,
    })
}

/// Randomized k-means++ seeding followed by Lloyd.
pub fn kmeanspp_lloyd(
    x: &Dataset,
    k: usize,
    rng: &mut impl Rng,
    max_iter: usize,
) -> Result<KmeansResult> {
    let (centers, v0) = kmeanspp_init(x, k, rng)?;
    let mut result = lloyd(x, k, &centers, max_iter)?;
    result.initial_value = v0;
    Ok(result)
}

fn labels_value(x: &Dataset, labels: &[usize]) -> f64 {
    let partition = Partition::from_labels(labels).expect("labels form a partition");
    dataset::kmeans_value(x, &partition)
}

/// Re-seed each empty cluster at the point farthest from its assigned center.
/// Moving that point into a fresh singleton can only decrease the objective.
fn repair_empty_clusters(
    x: &Dataset,
    centers: &[DVector<f64>],
    labels: &mut [usize],
    k: usize,
) {
    let mut counts = vec![0usize; k];
    for &c in labels.iter() {
        counts[c] += 1;
    }
    for c in 0..k {
        if counts[c] > 0 {
            continue;
        }
        let mut best_i = None;
        let mut best_d = 0.0f64;
        for (i, &ci) in labels.iter().enumerate() {
            if counts[ci] <= 1 {
                continue; // don't empty another cluster
            }
            let d = x.squared_distance_to(i, &centers[ci]);
            if d > best_d {
                best_d = d;
                best_i = Some(i);
            }
        }
        if let Some(i) = best_i {
            counts[labels[i]] -= 1;
            labels[i] = c;
            counts[c] = 1;
        }
    }
}

/// Deterministic k-means++ (farthest-point traversal): start at index 0,
/// then repeatedly add an index farthest from the chosen set, ties to the
/// lowest unchosen index. Data order therefore matters for reproducibility.
pub fn deterministic_kmeanspp(x: &Dataset, k: usize) -> Result<InitIndices> {
    let n = x.len();
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "deterministic k-means++ needs 1 <= k <= n, got k = {k}, n = {n}"
        )));
    }
    let mut indices = Vec::with_capacity(k);
    let mut is_chosen = vec![false; n];
    indices.push(0usize);
    is_chosen[0] = true;
    let mut dist2: Vec<f64> = (0..n).map(|i| x.squared_distance(i, 0)).collect();

    while indices.len() < k {
        let mut best = None;
        let mut best_d = -1.0f64;
        for i in 0..n {
            if is_chosen[i] {
                continue;
            }
            if dist2[i] > best_d {
                best_d = dist2[i];
                best = Some(i);
            }
        }
        let next = best.expect("k <= n leaves an unchosen index");
        indices.push(next);
        is_chosen[next] = true;
        for i in 0..n {
            let d = x.squared_distance(i, next);
            if d < dist2[i] {
                dist2[i] = d;
            }
        }
    }
    Ok(InitIndices { indices })
}

/// Coverage radius `b = max_i min_j ||x_i - x_{i_j}||^2` of a seeding.
pub fn coverage_radius_b(x: &Dataset, init: &InitIndices) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let mut nearest = f64::INFINITY;
        for &j in init.indices() {
            nearest = nearest.min(x.squared_distance(i, j));
        }
        worst = worst.max(nearest);
    }
    worst
}

/// Max-min distance objective of a center set drawn from the data
/// (the k-center objective the farthest-point traversal 2-approximates).
pub fn kcenter_objective(x: &Dataset, chosen: &[usize]) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..x.len() {
        let mut nearest = f64::INFINITY;
        for &j in chosen {
            nearest = nearest.min(x.squared_distance(i, j));
        }
        worst = worst.max(nearest);
    }
    worst.sqrt()
}
