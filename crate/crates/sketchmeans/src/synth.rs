//! Synthetic datasets with planted labels: the stochastic ball model and
//! spherical Gaussian mixtures.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::dataset::Dataset;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SynthModel {
    /// Uniform draws from unit balls around the centers.
    StochasticBall,
    /// Identity-covariance Gaussian mixture.
    GaussianMixture,
}

/// A generated dataset together with its planted cluster labels.
#[derive(Debug, Clone)]
pub struct PlantedDataset {
    pub data: Dataset,
    pub labels: Vec<usize>,
    pub model: SynthModel,
    pub centers: Vec<DVector<f64>>,
    pub weights: Vec<f64>,
}

/// `m` points per center, each `center + g` with `g` uniform on the unit
/// ball (direction uniform on the sphere, radius `U^{1/d}`; rejection-free).
/// Points are ordered by cluster, `n = k m`.
pub fn sample_sbm(
    centers: &[DVector<f64>],
    m: usize,
    rng: &mut impl Rng,
) -> Result<PlantedDataset> {
    if centers.is_empty() || m == 0 {
        return Err(Error::InvalidInput(
            "stochastic ball model needs k >= 1 centers and m >= 1 points".into(),
        ));
    }
    let d = centers[0].len();
    if centers.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidInput("centers have mixed dimensions".into()));
    }
    let k = centers.len();
    let n = k * m;
    let mut coords = DMatrix::<f64>::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    let mut col = 0usize;
    for (a, center) in centers.iter().enumerate() {
        for _ in 0..m {
            let g = unit_ball_point(d, rng);
            coords.set_column(col, &(center + g));
            labels.push(a);
            col += 1;
        }
    }
    Ok(PlantedDataset {
        data: Dataset::from_coords(coords)?,
        labels,
        model: SynthModel::StochasticBall,
        centers: centers.to_vec(),
        weights: vec![1.0 / k as f64; k],
    })
}

/// One point uniform on the origin-centered unit ball.
pub fn sample_unit_ball(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    unit_ball_point(d, rng)
}

fn unit_ball_point(d: usize, rng: &mut impl Rng) -> DVector<f64> {
    let mut direction = DVector::<f64>::zeros(d);
    loop {
        for v in direction.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let norm = direction.norm();
        if norm > 1e-12 {
            direction /= norm;
            break;
        }
    }
    let radius = rng.random::<f64>().powf(1.0 / d as f64);
    direction * radius
}

/// `n` i.i.d. draws from the mixture `sum_t weights[t] N(means[t], I_d)`.
pub fn sample_gmm(
    means: &[DVector<f64>],
    weights: &[f64],
    n: usize,
    rng: &mut impl Rng,
) -> Result<PlantedDataset> {
    if means.is_empty() || means.len() != weights.len() {
        return Err(Error::InvalidInput(
            "need matching nonempty means and weights".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if weights.iter().any(|&w| w < 0.0) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput(
            "weights must be nonnegative and sum to 1".into(),
        ));
    }
    if n == 0 {
        return Err(Error::InvalidInput("need n >= 1 samples".into()));
    }
    let d = means[0].len();
    if means.iter().any(|c| c.len() != d) {
        return Err(Error::InvalidInput("means have mixed dimensions".into()));
    }
    let mut coords = DMatrix::<f64>::zeros(d, n);
    let mut labels = Vec::with_capacity(n);
    for col in 0..n {
        let t = draw_label(weights, rng);
        let mut point = means[t].clone();
        for v in point.iter_mut() {
            let g: f64 = rng.sample(StandardNormal);
            *v += g;
        }
        coords.set_column(col, &point);
        labels.push(t);
    }
    Ok(PlantedDataset {
        data: Dataset::from_coords(coords)?,
        labels,
        model: SynthModel::GaussianMixture,
        centers: means.to_vec(),
        weights: weights.to_vec(),
    })
}

fn draw_label(weights: &[f64], rng: &mut impl Rng) -> usize {
    let r: f64 = rng.random();
    let mut acc = 0.0;
    for (t, &w) in weights.iter().enumerate() {
        acc += w;
        if r < acc {
            return t;
        }
    }
    weights.len() - 1
}

/// Two unit-ball centers at separation `delta` along the first axis.
pub fn two_ball_centers(delta: f64, d: usize) -> Vec<DVector<f64>> {
    let mut a = DVector::<f64>::zeros(d);
    let mut b = DVector::<f64>::zeros(d);
    a[0] = -delta / 2.0;
    b[0] = delta / 2.0;
    vec![a, b]
}

/// Mixture centers drawn uniformly from a hypercube of the given side length.
pub fn hypercube_centers(k: usize, d: usize, side: f64, rng: &mut impl Rng) -> Vec<DVector<f64>> {
    (0..k)
        .map(|_| DVector::from_fn(d, |_, _| rng.random_range(0.0..side)))
        .collect()
}

/// The NORM-10 setting: 10000 points from 10 equal-weight identity-covariance
/// Gaussians with centers uniform in a 5-dimensional hypercube of side 500.
pub fn norm10(rng: &mut impl Rng) -> Result<PlantedDataset> {
    let centers = hypercube_centers(10, 5, 500.0, rng);
    let weights = vec![0.1; 10];
    sample_gmm(&centers, &weights, 10_000, rng)
}

/// The NORM-25 setting: 10000 points from 25 equal-weight identity-covariance
/// Gaussians with centers uniform in a 15-dimensional hypercube of side 500.
pub fn norm25(rng: &mut impl Rng) -> Result<PlantedDataset> {
    let centers = hypercube_centers(25, 15, 500.0, rng);
    let weights = vec![1.0 / 25.0; 25];
    sample_gmm(&centers, &weights, 10_000, rng)
}
