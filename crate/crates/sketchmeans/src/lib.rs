//! Sketch-and-solve k-means clustering with a dual-certified semidefinite relaxation.
//!
//! The library clusters Euclidean data by subsampling it, solving the Peng–Wei
//! semidefinite relaxation of k-means on the sample, and extrapolating back to
//! the full dataset. When the data is not separated enough for exact recovery,
//! repeated sketches yield high-confidence lower bounds on the optimal k-means
//! value, made rigorous through dual certificates even when the SDP solver
//! terminates inexactly.
//!
//! Module map:
//! - [`dataset`]: points, partitions, distance matrices, objectives, and a
//!   brute-force oracle for small instances.
//! - [`kmeans`]: Lloyd's algorithm, randomized and deterministic k-means++
//!   seeding, and the coverage radius.
//! - [`prox`]: separation diagnostics (alpha/beta margins, proximity value,
//!   shape parameter).
//! - [`sdp`]: the Peng–Wei relaxation, a first-order splitting solver, dual
//!   certificate repair, and solution rounding.
//! - [`bounds`]: uniform sketching and the Hoeffding/Markov Monte Carlo lower
//!   bounds with their k-means++ baselines.
//! - [`sketchsolve`]: the end-to-end Bernoulli sketch-and-solve pipeline.
//! - [`synth`]: stochastic ball model and Gaussian mixture generators with
//!   planted labels.

pub mod bounds;
pub mod dataset;
pub mod kmeans;
pub mod parallel;
pub mod prox;
pub mod sdp;
pub mod seeding;
pub mod sketchsolve;
pub mod synth;

pub use dataset::{Dataset, DistanceMatrix, Partition};

/// Errors shared across the library.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty cluster")]
    EmptyCluster,
    #[error("oracle limit exceeded: n = {n} > {max}")]
    OracleLimitExceeded { n: usize, max: usize },
    #[error("degenerate centroid pair ({s}, {t})")]
    DegenerateCentroidPair { s: usize, t: usize },
    #[error("sketch too small; increase p (got {got} points, need at least {need})")]
    SketchTooSmall { got: usize, need: usize },
    #[error("solver diverged (non-finite iterates; consider enabling the distance cap)")]
    SolverDiverged,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
