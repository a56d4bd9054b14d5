//! Datasets, partitions, squared-distance matrices, k-means objectives, and a
//! brute-force oracle for small instances.
//!
//! Conventions: a dataset is an ordered tuple of `n` points in `R^d`; a
//! partition assigns every index to one of `k` nonempty clusters; distance
//! matrices hold *squared* Euclidean distances. All operations here are pure
//! and the types are immutable after construction, so they can be shared
//! freely across threads.

use nalgebra::{DMatrix, DVector, DVectorView};

use crate::parallel;
use crate::{Error, Result};

/// Largest `n` accepted by [`brute_force_ip`]; set partitions grow too fast
/// beyond this.
pub const ORACLE_LIMIT: usize = 12;

/// An ordered collection of `n` points in `R^d`, immutable once built.
///
/// Points are stored column-wise (`d x n`), so each point is contiguous in
/// memory.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    coords: DMatrix<f64>,
}

impl Dataset {
    /// Build from a `d x n` coordinate matrix whose columns are points.
    pub fn from_coords(coords: DMatrix<f64>) -> Result<Self> {
        if coords.nrows() == 0 || coords.ncols() == 0 {
            return Err(Error::InvalidInput(
                "dataset needs n >= 1 points and d >= 1 dimensions".into(),
            ));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(
                "dataset coordinates must be finite".into(),
            ));
        }
        Ok(Self { coords })
    }

    /// Build from point rows (row `i` is point `i`). All rows must share a length.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidInput("dataset is empty".into()));
        }
        let d = rows[0].len();
        if rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidInput("ragged point rows".into()));
        }
        let n = rows.len();
        let mut coords = DMatrix::<f64>::zeros(d.max(1), n);
        if d == 0 {
            return Err(Error::InvalidInput("points need d >= 1".into()));
        }
        for (i, row) in rows.iter().enumerate() {
            for (j, &v) in row.iter().enumerate() {
                coords[(j, i)] = v;
            }
        }
        Self::from_coords(coords)
    }

    /// Build from a flat row-major buffer of `n` points in `d` dimensions.
    pub fn from_row_major(n: usize, d: usize, data: &[f64]) -> Result<Self> {
        if data.len() != n * d {
            return Err(Error::InvalidInput(format!(
                "expected {} coordinates, got {}",
                n * d,
                data.len()
            )));
        }
        if n == 0 || d == 0 {
            return Err(Error::InvalidInput(
                "dataset needs n >= 1 points and d >= 1 dimensions".into(),
            ));
        }
        let mut coords = DMatrix::<f64>::zeros(d, n);
        for i in 0..n {
            for j in 0..d {
                coords[(j, i)] = data[i * d + j];
            }
        }
        Self::from_coords(coords)
    }

    /// Convenience constructor for 1-d points.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::from_row_major(values.len(), 1, values)
    }

    /// Number of points.
    pub fn len(&self) -> usize {
        self.coords.ncols()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 by construction
    }

    /// Ambient dimension.
    pub fn dim(&self) -> usize {
        self.coords.nrows()
    }

    /// Point `i` as a column view.
    pub fn point(&self, i: usize) -> DVectorView<'_, f64> {
        self.coords.column(i)
    }

    /// The `d x n` coordinate matrix (columns are points).
    pub fn coords(&self) -> &DMatrix<f64> {
        &self.coords
    }

    /// Squared Euclidean distance between points `i` and `j`.
    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        let a = self.coords.column(i);
        let b = self.coords.column(j);
        let mut acc = 0.0;
        for t in 0..a.nrows() {
            let diff = a[t] - b[t];
            acc += diff * diff;
        }
        acc
    }

    /// Squared Euclidean distance from point `i` to an arbitrary point `q`.
    pub fn squared_distance_to(&self, i: usize, q: &DVector<f64>) -> f64 {
        let a = self.coords.column(i);
        let mut acc = 0.0;
        for t in 0..a.nrows() {
            let diff = a[t] - q[t];
            acc += diff * diff;
        }
        acc
    }

    /// New dataset made of the selected point indices, in the given order.
    /// Indices may repeat.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.is_empty() {
            return Err(Error::InvalidInput("empty subset".into()));
        }
        let mut coords = DMatrix::<f64>::zeros(self.dim(), indices.len());
        for (t, &i) in indices.iter().enumerate() {
            coords.set_column(t, &self.coords.column(i));
        }
        Self::from_coords(coords)
    }
}

/// An assignment of `[n]` into `k` nonempty clusters.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    assignment: Vec<usize>,
    k: usize,
}

impl Partition {
    /// Validates that every label is in `[0, k)` and every cluster is nonempty.
    pub fn new(assignment: Vec<usize>, k: usize) -> Result<Self> {
        let n = assignment.len();
        if k == 0 || k > n {
            return Err(Error::InvalidInput(format!(
                "need 1 <= k <= n, got k = {k}, n = {n}"
            )));
        }
        let mut seen = vec![false; k];
        for &a in &assignment {
            if a >= k {
                return Err(Error::InvalidInput(format!(
                    "cluster label {a} out of range for k = {k}"
                )));
            }
            seen[a] = true;
        }
        if seen.iter().any(|&s| !s) {
            return Err(Error::InvalidInput("empty cluster in partition".into()));
        }
        Ok(Self { assignment, k })
    }

    /// Build from arbitrary labels, compacting them to `0..k` by first
    /// appearance. Useful for planted labels.
    pub fn from_labels(labels: &[usize]) -> Result<Self> {
        let mut map: Vec<(usize, usize)> = Vec::new();
        let mut assignment = Vec::with_capacity(labels.len());
        for &l in labels {
            let id = match map.iter().find(|&&(orig, _)| orig == l) {
                Some(&(_, id)) => id,
                None => {
                    let id = map.len();
                    map.push((l, id));
                    id
                }
            };
            assignment.push(id);
        }
        let k = map.len();
        Self::new(assignment, k)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.assignment.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Cluster label of point `i`.
    pub fn label(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    /// Member indices of each cluster, by cluster id.
    pub fn clusters(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.k];
        for (i, &a) in self.assignment.iter().enumerate() {
            out[a].push(i);
        }
        out
    }

    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &a in &self.assignment {
            sizes[a] += 1;
        }
        sizes
    }

    /// True when both partitions induce the same grouping, ignoring labels.
    pub fn same_clustering(&self, other: &Partition) -> bool {
        if self.assignment.len() != other.assignment.len() || self.k != other.k {
            return false;
        }
        let mut fwd = vec![usize::MAX; self.k];
        let mut bwd = vec![usize::MAX; other.k];
        for (&a, &b) in self.assignment.iter().zip(other.assignment.iter()) {
            if fwd[a] == usize::MAX {
                fwd[a] = b;
            } else if fwd[a] != b {
                return false;
            }
            if bwd[b] == usize::MAX {
                bwd[b] = a;
            } else if bwd[b] != a {
                return false;
            }
        }
        true
    }
}

/// Matrix of pairwise squared Euclidean distances, optionally truncated.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    entries: DMatrix<f64>,
    truncation_cap: Option<f64>,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn truncation_cap(&self) -> Option<f64> {
        self.truncation_cap
    }
}

/// Pairwise squared distances of `x`, clamped entrywise to `cap` when given.
///
/// Capping can only lower the SDP objective, so a capped problem still yields
/// a valid k-means lower bound.
pub fn distance_matrix(x: &Dataset, cap: Option<f64>) -> DistanceMatrix {
    let n = x.len();
    let mut buf = vec![0.0f64; n * n];
    parallel::fill_chunks(&mut buf, n, |j, col| {
        for (i, slot) in col.iter_mut().enumerate() {
            let mut d2 = x.squared_distance(i, j);
            if let Some(c) = cap {
                d2 = d2.min(c);
            }
            *slot = d2;
        }
    });
    let mut entries = DMatrix::from_vec(n, n, buf);
    // exact symmetry and zero diagonal regardless of rounding
    for j in 0..n {
        entries[(j, j)] = 0.0;
        for i in 0..j {
            let v = entries[(i, j)];
            entries[(j, i)] = v;
        }
    }
    DistanceMatrix {
        entries,
        truncation_cap: cap,
    }
}

/// Arithmetic mean of the selected points.
pub fn centroid(x: &Dataset, members: &[usize]) -> Result<DVector<f64>> {
    if members.is_empty() {
        return Err(Error::EmptyCluster);
    }
    let mut c = DVector::<f64>::zeros(x.dim());
    for &i in members {
        c += x.point(i);
    }
    c /= members.len() as f64;
    Ok(c)
}

/// Normalized k-means objective of a partition:
/// `(1/n) * sum over clusters S of sum_{i in S} ||x_i - c_S||^2`.
pub fn kmeans_value(x: &Dataset, partition: &Partition) -> f64 {
    debug_assert_eq!(x.len(), partition.len());
    let mut total = 0.0;
    for members in partition.clusters() {
        if members.is_empty() {
            continue;
        }
        let c = centroid(x, &members).expect("nonempty cluster");
        for &i in &members {
            total += x.squared_distance_to(i, &c);
        }
    }
    total / x.len() as f64
}

/// Same objective computed from the distance matrix:
/// `(1/2n) * sum_S (1/|S|) * sum_{i,j in S} D_ij`.
///
/// Equals [`kmeans_value`] when `D` is exact (untruncated).
pub fn trace_form_value(d: &DistanceMatrix, partition: &Partition) -> f64 {
    let n = d.n();
    debug_assert_eq!(n, partition.len());
    let mut total = 0.0;
    for members in partition.clusters() {
        if members.is_empty() {
            continue;
        }
        let mut block = 0.0;
        for &i in &members {
            for &j in &members {
                block += d.entries()[(i, j)];
            }
        }
        total += block / members.len() as f64;
    }
    total / (2.0 * n as f64)
}

/// The block-constant encoding `Z_Gamma = sum_S (1/|S|) 1_S 1_S^T`.
pub fn partition_matrix(partition: &Partition) -> DMatrix<f64> {
    let n = partition.len();
    let sizes = partition.cluster_sizes();
    let mut z = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if partition.label(i) == partition.label(j) {
                z[(i, j)] = 1.0 / sizes[partition.label(i)] as f64;
            }
        }
    }
    z
}

/// Assign each point to its nearest center (ties to the lowest center index).
///
/// Centers that receive no point are dropped, so the returned partition may
/// have fewer clusters than `centers.len()`; callers needing exactly `k`
/// clusters must check.
pub fn assign_to_nearest(x: &Dataset, centers: &[DVector<f64>]) -> Partition {
    assert!(!centers.is_empty(), "need at least one center");
    let raw = assign_labels(x, centers);
    compact_labels(raw, centers.len())
}

/// Raw nearest-center labels in `[0, centers.len())`, empty centers allowed.
pub(crate) fn assign_labels(x: &Dataset, centers: &[DVector<f64>]) -> Vec<usize> {
    parallel::map_indexed(x.len(), |i| {
        let mut best = 0usize;
        let mut best_d = x.squared_distance_to(i, &centers[0]);
        for (c, center) in centers.iter().enumerate().skip(1) {
            let d = x.squared_distance_to(i, center);
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        best
    })
}

fn compact_labels(raw: Vec<usize>, k: usize) -> Partition {
    let mut used = vec![false; k];
    for &a in &raw {
        used[a] = true;
    }
    let mut remap = vec![usize::MAX; k];
    let mut next = 0usize;
    for c in 0..k {
        if used[c] {
            remap[c] = next;
            next += 1;
        }
    }
    let assignment: Vec<usize> = raw.into_iter().map(|a| remap[a]).collect();
    Partition::new(assignment, next).expect("compacted labels are valid")
}

/// Visit every partition of `[n]` into exactly `k` nonempty blocks, encoded as
/// restricted growth strings. `f` receives the block assignment of each point.
pub fn for_each_partition<F: FnMut(&[usize])>(n: usize, k: usize, mut f: F) {
    if k == 0 || k > n {
        return;
    }
    let mut assignment = vec![0usize; n];
    fn rec<F: FnMut(&[usize])>(
        assignment: &mut Vec<usize>,
        pos: usize,
        blocks: usize,
        n: usize,
        k: usize,
        f: &mut F,
    ) {
        if pos == n {
            if blocks == k {
                f(assignment);
            }
            return;
        }
        // not enough positions left to open the remaining blocks
        if blocks + (n - pos) < k {
            return;
        }
        let cap = blocks.min(k - 1);
        for b in 0..=cap {
            assignment[pos] = b;
            let new_blocks = if b == blocks { blocks + 1 } else { blocks };
            rec(assignment, pos + 1, new_blocks, n, k, f);
        }
    }
    rec(&mut assignment, 0, 0, n, k, &mut f);
}

/// Exhaustive minimum of the normalized k-means objective over all partitions
/// of `[n]` into `k` nonempty clusters. Test oracle only; `n` is capped.
pub fn brute_force_ip(x: &Dataset, k: usize) -> Result<(f64, Partition)> {
    let n = x.len();
    if n > ORACLE_LIMIT {
        return Err(Error::OracleLimitExceeded {
            n,
            max: ORACLE_LIMIT,
        });
    }
    if k == 0 || k > n {
        return Err(Error::InvalidInput(format!(
            "need 1 <= k <= n for the oracle, got k = {k}, n = {n}"
        )));
    }
    let mut best_value = f64::INFINITY;
    let mut best_assignment: Option<Vec<usize>> = None;
    for_each_partition(n, k, |assignment| {
        let p = Partition::new(assignment.to_vec(), k).expect("enumerated partition is valid");
        let v = kmeans_value(x, &p);
        if v < best_value {
            best_value = v;
            best_assignment = Some(assignment.to_vec());
        }
    });
    let assignment = best_assignment.expect("at least one partition exists");
    Ok((best_value, Partition::new(assignment, k)?))
}
