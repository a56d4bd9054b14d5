//! Uniform sketching and high-confidence lower bounds on the k-means value.
//!
//! Each trial solves the relaxation on a small uniform sketch and keeps the
//! *certified* dual bound, so inexact solves never invalidate the guarantee.
//! The Hoeffding reduction averages truncated trial values; the Markov
//! reduction scales the minimum. Both hold with probability at least
//! `1 - epsilon`. The `L`-baselines apply the same reductions to k-means++
//! initialization samples instead of sketched SDP values.
//!
//! Trials are independent and may run in parallel; every trial draws from its
//! own stream derived from `(seed, trial index)`, and results are reduced in
//! trial order, so output is bit-identical under any schedule.

use std::time::Instant;

use rand::Rng;

use crate::dataset::{Dataset, Partition};
use crate::sdp::{self, SolveStatus, SolverConfig};
use crate::{kmeans, parallel, seeding, Error, Result};

/// Stream-space offsets so different phases never share a ChaCha stream.
const BASELINE_STREAM_BASE: u64 = 1 << 32;
const RESTART_STREAM_BASE: u64 = 1 << 33;

/// Sampling mode for uniform sketches.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Replacement {
    With,
    Without,
}

/// Parameters shared by the bound estimators.
#[derive(Debug, Clone)]
pub struct BoundConfig {
    pub k: usize,
    /// Sketch size.
    pub s: usize,
    /// Number of independent trials.
    pub trials: usize,
    /// Error rate in (0, 1]; the bound holds with probability >= 1 - epsilon.
    pub epsilon: f64,
    /// Truncation level `u` for the Hoeffding variant. When unset, the
    /// coverage radius of the deterministic k-means++ seeding is used.
    pub truncation: Option<f64>,
    /// Sampling mode; the Hoeffding estimator requires `With`, the Markov
    /// estimator `Without`.
    pub replacement: Replacement,
    pub seed: u64,
    /// Entrywise cap on sketch distance matrices.
    pub cap: Option<f64>,
    pub solver: SolverConfig,
}

impl BoundConfig {
    pub fn hoeffding(k: usize, s: usize, trials: usize, epsilon: f64, seed: u64) -> Self {
        BoundConfig {
            k,
            s,
            trials,
            epsilon,
            truncation: None,
            replacement: Replacement::With,
            seed,
            cap: None,
            solver: SolverConfig::default(),
        }
    }

    pub fn markov(k: usize, s: usize, trials: usize, epsilon: f64, seed: u64) -> Self {
        BoundConfig {
            replacement: Replacement::Without,
            ..Self::hoeffding(k, s, trials, epsilon, seed)
        }
    }

    fn validate(&self, n: usize) -> Result<()> {
        if self.k < 2 || self.k > self.s {
            return Err(Error::InvalidInput(format!(
                "need 2 <= k <= s, got k = {}, s = {}",
                self.k, self.s
            )));
        }
        if self.trials == 0 {
            return Err(Error::InvalidInput("need at least one trial".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "error rate must be in (0, 1], got {}",
                self.epsilon
            )));
        }
        if self.replacement == Replacement::Without && self.s > n {
            return Err(Error::InvalidInput(format!(
                "sketch size {} exceeds n = {n} without replacement",
                self.s
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundMethod {
    Hoeffding,
    Markov,
    BaselineLH,
    BaselineLM,
}

/// Wall-clock seconds per phase, following the usual table layout.
#[derive(Debug, Clone, Copy, Default)]
pub struct PhaseTimings {
    /// Repeated k-means++ initializations (baseline samples).
    pub t_init: f64,
    /// Computing the truncation level / best k-means++ value.
    pub t_kpp: f64,
    /// Sketched SDP solves.
    pub t_sdp: f64,
}

/// Per-trial log line; every headline bound is recomputable from these.
#[derive(Debug, Clone)]
pub struct TrialRecord {
    pub trial: usize,
    /// FNV hash of the sketch indices, to audit sketch draws.
    pub sketch_hash: u64,
    pub primal_value: f64,
    /// Raw certified bound (before the nonnegativity floor).
    pub certified_bound: f64,
    pub wall_seconds: f64,
    pub solver_iterations: usize,
    pub diverged: bool,
}

/// Output of a lower-bound run.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub bound: f64,
    pub method: BoundMethod,
    /// Trial values after the nonnegativity floor (and before `u`-truncation).
    pub per_trial_values: Vec<f64>,
    /// Trials where `min(v_i, u)` actually clipped.
    pub truncation_count: usize,
    pub timings: PhaseTimings,
    /// Best k-means++ value on the full data, when known.
    pub upper_bound_minvi: Option<f64>,
    /// SDP trial details (empty for the baselines).
    pub trial_records: Vec<TrialRecord>,
}

/// Draw `s` indices uniformly from `[n]`, in draw order.
pub fn sketch_indices(
    n: usize,
    s: usize,
    replacement: Replacement,
    rng: &mut impl Rng,
) -> Result<Vec<usize>> {
    match replacement {
        Replacement::With => Ok((0..s).map(|_| rng.random_range(0..n)).collect()),
        Replacement::Without => {
            if s > n {
                return Err(Error::InvalidInput(format!(
                    "cannot draw {s} of {n} indices without replacement"
                )));
            }
            let mut pool: Vec<usize> = (0..n).collect();
            for t in 0..s {
                let j = rng.random_range(t..n);
                pool.swap(t, j);
            }
            pool.truncate(s);
            Ok(pool)
        }
    }
}

/// Uniform sketch of `x`, rows in draw order.
pub fn sketch_uniform(
    x: &Dataset,
    s: usize,
    replacement: Replacement,
    rng: &mut impl Rng,
) -> Result<Dataset> {
    let indices = sketch_indices(x.len(), s, replacement, rng)?;
    x.subset(&indices)
}

fn fnv_hash(indices: &[usize]) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &i in indices {
        h ^= i as u64;
        h = h.wrapping_mul(0x100000001b3);
    }
    h
}

/// Run the sketched SDP trials. Solver divergence yields trial value 0,
/// which keeps the bound valid for the nonnegative objective.
fn sdp_trials(
    x: &Dataset,
    cfg: &BoundConfig,
    replacement: Replacement,
) -> Result<Vec<TrialRecord>> {
    let n = x.len();
    let results: Vec<Result<TrialRecord>> = parallel::map_indexed(cfg.trials, |trial| {
        let mut sketch_rng = seeding::trial_rng(cfg.seed, 2 * trial as u64);
        let indices = sketch_indices(n, cfg.s, replacement, &mut sketch_rng)?;
        let sketch = x.subset(&indices)?;
        let start = Instant::now();
        let mut warm_rng = seeding::trial_rng(cfg.seed, 2 * trial as u64 + 1);
        let warm = kmeans::kmeanspp_lloyd(&sketch, cfg.k, &mut warm_rng, kmeans::LLOYD_MAX_ITER)?;
        let problem = sdp::build_problem(&sketch, cfg.k, cfg.cap)?;
        let solver_cfg = SolverConfig {
            warm_start: Some(warm.partition),
            ..cfg.solver.clone()
        };
        match sdp::solve_two_stage(&problem, &solver_cfg) {
            Ok(sol) => Ok(TrialRecord {
                trial,
                sketch_hash: fnv_hash(&indices),
                primal_value: sol.primal_value,
                certified_bound: sol.certified_lower_bound,
                wall_seconds: start.elapsed().as_secs_f64(),
                solver_iterations: sol.iterations,
                diverged: false,
            }),
            Err(Error::SolverDiverged) => Ok(TrialRecord {
                trial,
                sketch_hash: fnv_hash(&indices),
                primal_value: f64::NAN,
                certified_bound: 0.0,
                wall_seconds: start.elapsed().as_secs_f64(),
                solver_iterations: 0,
                diverged: true,
            }),
            Err(e) => Err(e),
        }
    });
    results.into_iter().collect()
}

/// Trial value: certified bound floored at zero (the objective is
/// nonnegative, so zero is always a valid lower bound).
fn trial_value(record: &TrialRecord) -> f64 {
    record.certified_bound.max(0.0)
}

/// Truncation level: configured `u`, else the coverage radius `b` of the
/// deterministic k-means++ seeding. Returns (u, seconds spent).
fn truncation_level(x: &Dataset, cfg: &BoundConfig) -> Result<(f64, f64)> {
    if let Some(u) = cfg.truncation {
        if u < 0.0 {
            return Err(Error::InvalidInput(format!(
                "truncation level must be nonnegative, got {u}"
            )));
        }
        return Ok((u, 0.0));
    }
    let start = Instant::now();
    let init = kmeans::deterministic_kmeanspp(x, cfg.k)?;
    let b = kmeans::coverage_radius_b(x, &init);
    Ok((b, start.elapsed().as_secs_f64()))
}

/// Hoeffding Monte Carlo lower bound:
/// `B_H = mean_i min(v_i, u) - sqrt(u^2 ln(1/eps) / (2 l))`,
/// over `l` sketches drawn with replacement. May be negative; reported as-is.
pub fn hoeffding_bound(x: &Dataset, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate(x.len())?;
    if cfg.replacement != Replacement::With {
        return Err(Error::InvalidInput(
            "the Hoeffding bound samples with replacement".into(),
        ));
    }
    let (u, t_kpp) = truncation_level(x, cfg)?;
    let sdp_start = Instant::now();
    let records = sdp_trials(x, cfg, Replacement::With)?;
    let t_sdp = sdp_start.elapsed().as_secs_f64();

    let values: Vec<f64> = records.iter().map(trial_value).collect();
    let truncation_count = values.iter().filter(|&&v| v > u).count();
    let l = cfg.trials as f64;
    let mean: f64 = values.iter().map(|&v| v.min(u)).sum::<f64>() / l;
    let deviation = (u * u / (2.0 * l) * (1.0 / cfg.epsilon).ln()).sqrt();
    Ok(BoundReport {
        bound: mean - deviation,
        method: BoundMethod::Hoeffding,
        per_trial_values: values,
        truncation_count,
        timings: PhaseTimings {
            t_init: 0.0,
            t_kpp,
            t_sdp,
        },
        upper_bound_minvi: None,
        trial_records: records,
    })
}

/// Markov Monte Carlo lower bound:
/// `B_M = eps^{1/l} * min_i v_i`, over `l` sketches drawn without
/// replacement. Always nonnegative.
pub fn markov_bound(x: &Dataset, cfg: &BoundConfig) -> Result<BoundReport> {
    cfg.validate(x.len())?;
    if cfg.replacement != Replacement::Without {
        return Err(Error::InvalidInput(
            "the Markov bound samples without replacement".into(),
        ));
    }
    let sdp_start = Instant::now();
    let records = sdp_trials(x, cfg, Replacement::Without)?;
    let t_sdp = sdp_start.elapsed().as_secs_f64();

    let values: Vec<f64> = records.iter().map(trial_value).collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let multiplier = cfg.epsilon.powf(1.0 / cfg.trials as f64);
    Ok(BoundReport {
        bound: multiplier * min,
        method: BoundMethod::Markov,
        per_trial_values: values,
        truncation_count: 0,
        timings: PhaseTimings {
            t_init: 0.0,
            t_kpp: 0.0,
            t_sdp,
        },
        upper_bound_minvi: None,
        trial_records: records,
    })
}

/// The k-means++ baselines: `L_H` and `L_M` apply the Hoeffding and Markov
/// reductions to `l` independent draws of `L = V^(0) / (8 (ln k + 2))`;
/// `avg_Li` is their mean (a lower bound only in expectation).
pub fn baseline_bounds(
    x: &Dataset,
    cfg: &BoundConfig,
) -> Result<(BoundReport, BoundReport, f64)> {
    cfg.validate(x.len())?;
    let (u, t_kpp) = truncation_level(x, cfg)?;
    let init_start = Instant::now();
    let samples: Vec<Result<f64>> = parallel::map_indexed(cfg.trials, |trial| {
        let mut rng = seeding::trial_rng(cfg.seed, BASELINE_STREAM_BASE + trial as u64);
        kmeans::kmeanspp_lb_sample(x, cfg.k, &mut rng)
    });
    let samples: Vec<f64> = samples.into_iter().collect::<Result<_>>()?;
    let t_init = init_start.elapsed().as_secs_f64();

    let l = cfg.trials as f64;
    let avg = samples.iter().sum::<f64>() / l;
    let truncation_count = samples.iter().filter(|&&v| v > u).count();
    let mean_truncated: f64 = samples.iter().map(|&v| v.min(u)).sum::<f64>() / l;
    let deviation = (u * u / (2.0 * l) * (1.0 / cfg.epsilon).ln()).sqrt();
    let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
    let multiplier = cfg.epsilon.powf(1.0 / l);

    let timings = PhaseTimings {
        t_init,
        t_kpp,
        t_sdp: 0.0,
    };
    let l_h = BoundReport {
        bound: mean_truncated - deviation,
        method: BoundMethod::BaselineLH,
        per_trial_values: samples.clone(),
        truncation_count,
        timings,
        upper_bound_minvi: None,
        trial_records: Vec::new(),
    };
    let l_m = BoundReport {
        bound: multiplier * min,
        method: BoundMethod::BaselineLM,
        per_trial_values: samples,
        truncation_count: 0,
        timings,
        upper_bound_minvi: None,
        trial_records: Vec::new(),
    };
    Ok((l_h, l_m, avg))
}

/// Best of `restarts` independent k-means++ / Lloyd runs on the full data:
/// the upper bound `min v_i` and the achieving partition. Restarts use
/// streams derived from a seed drawn once from `rng`, so they may run in
/// parallel with reproducible results.
pub fn best_kmeanspp_value(
    x: &Dataset,
    k: usize,
    restarts: usize,
    rng: &mut impl Rng,
) -> Result<(f64, Partition)> {
    if restarts == 0 {
        return Err(Error::InvalidInput("need at least one restart".into()));
    }
    let seed = rng.next_u64();
    let runs: Vec<Result<kmeans::KmeansResult>> = parallel::map_indexed(restarts, |i| {
        let mut run_rng = seeding::trial_rng(seed, RESTART_STREAM_BASE + i as u64);
        kmeans::kmeanspp_lloyd(x, k, &mut run_rng, kmeans::LLOYD_MAX_ITER)
    });
    let mut best: Option<kmeans::KmeansResult> = None;
    for run in runs {
        let run = run?;
        if best.as_ref().is_none_or(|b| run.value < b.value) {
            best = Some(run);
        }
    }
    let best = best.expect("restarts >= 1");
    Ok((best.value, best.partition))
}

/// Certified relaxation value of one explicit sketch: the floored certified
/// bound of a two-stage solve on `indices`. Used for expectation checks.
pub fn sketch_sdp_value(
    x: &Dataset,
    indices: &[usize],
    k: usize,
    cap: Option<f64>,
    solver: &SolverConfig,
) -> Result<(f64, SolveStatus)> {
    let sketch = x.subset(indices)?;
    let problem = sdp::build_problem(&sketch, k, cap)?;
    let sol = sdp::solve_two_stage(&problem, solver)?;
    Ok((sol.certified_lower_bound.max(0.0), sol.status))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::brute_force_ip;
    use crate::seeding;

    fn dataset_1d(values: &[f64]) -> Dataset {
        Dataset::from_scalars(values).unwrap()
    }

    #[test]
    fn sketch_without_replacement_is_permutation() {
        let mut rng = seeding::master_rng(61);
        let mut indices = sketch_indices(6, 6, Replacement::Without, &mut rng).unwrap();
        indices.sort_unstable();
        assert_eq!(indices, vec![0, 1, 2, 3, 4, 5]);
    }

    #[test]
    fn sketch_with_replacement_from_singleton() {
        let mut rng = seeding::master_rng(62);
        let x = dataset_1d(&[7.0]);
        let sketch = sketch_uniform(&x, 3, Replacement::With, &mut rng).unwrap();
        assert_eq!(sketch.len(), 3);
        assert!(sketch.coords().iter().all(|&v| v == 7.0));
    }

    #[test]
    fn sketch_without_replacement_rejects_oversize() {
        let mut rng = seeding::master_rng(63);
        assert!(sketch_indices(3, 4, Replacement::Without, &mut rng).is_err());
    }

    #[test]
    fn sketch_marginals_are_uniform() {
        let mut rng = seeding::master_rng(64);
        let draws = 100_000usize;
        let mut counts = [0usize; 4];
        for _ in 0..draws {
            let idx = sketch_indices(4, 1, Replacement::With, &mut rng).unwrap()[0];
            counts[idx] += 1;
        }
        for &c in &counts {
            let freq = c as f64 / draws as f64;
            assert!((freq - 0.25).abs() < 0.01, "frequency {freq}");
        }
    }

    fn small_cfg(k: usize, s: usize, trials: usize, epsilon: f64, seed: u64) -> BoundConfig {
        BoundConfig {
            solver: SolverConfig {
                tol_primal: 1e-7,
                tol_dual: 1e-7,
                tol_gap: 1e-7,
                ..SolverConfig::default()
            },
            ..BoundConfig::hoeffding(k, s, trials, epsilon, seed)
        }
    }

    #[test]
    fn hoeffding_epsilon_one_drops_deviation() {
        let x = dataset_1d(&[0.0, 1.0, 5.0, 6.0, 10.0, 11.0]);
        let cfg = small_cfg(2, 4, 3, 1.0, 71);
        let report = hoeffding_bound(&x, &cfg).unwrap();
        let u = {
            let init = kmeans::deterministic_kmeanspp(&x, 2).unwrap();
            kmeans::coverage_radius_b(&x, &init)
        };
        let expected: f64 = report
            .per_trial_values
            .iter()
            .map(|&v| v.min(u))
            .sum::<f64>()
            / 3.0;
        assert!((report.bound - expected).abs() < 1e-12);
    }

    #[test]
    fn hoeffding_coincident_points_zero() {
        let x = dataset_1d(&[2.0, 2.0, 2.0, 2.0]);
        let cfg = small_cfg(2, 3, 4, 0.1, 72);
        let report = hoeffding_bound(&x, &cfg).unwrap();
        assert_eq!(report.bound, 0.0);
        assert!(report.per_trial_values.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hoeffding_recomputable_from_trial_log() {
        // fixed-seed 40-point instance; recompute the closed form by hand
        let mut rng = seeding::master_rng(73);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let x = Dataset::from_rows(&rows).unwrap();
        let cfg = small_cfg(2, 8, 5, 0.05, 74);
        let report = hoeffding_bound(&x, &cfg).unwrap();
        let u = {
            let init = kmeans::deterministic_kmeanspp(&x, 2).unwrap();
            kmeans::coverage_radius_b(&x, &init)
        };
        let l = 5.0f64;
        let mean: f64 = report
            .per_trial_values
            .iter()
            .map(|&v| v.min(u))
            .sum::<f64>()
            / l;
        let dev = (u * u / (2.0 * l) * (1.0f64 / 0.05).ln()).sqrt();
        assert!((report.bound - (mean - dev)).abs() < 1e-12);
        assert_eq!(report.trial_records.len(), 5);
    }

    #[test]
    fn markov_single_trial_formula() {
        let x = dataset_1d(&[0.0, 1.0, 5.0, 6.0, 10.0, 11.0]);
        let cfg = BoundConfig {
            epsilon: 0.01,
            ..BoundConfig::markov(2, 4, 1, 0.01, 75)
        };
        let report = markov_bound(&x, &cfg).unwrap();
        assert!((report.bound - 0.01 * report.per_trial_values[0]).abs() < 1e-12);
    }

    #[test]
    fn markov_epsilon_one_gives_min() {
        let x = dataset_1d(&[0.0, 1.0, 5.0, 6.0, 10.0, 11.0]);
        let cfg = BoundConfig {
            epsilon: 1.0,
            ..BoundConfig::markov(2, 4, 4, 1.0, 76)
        };
        let report = markov_bound(&x, &cfg).unwrap();
        let min = report
            .per_trial_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert_eq!(report.bound, min);
    }

    #[test]
    fn markov_multiplier_thirty_trials() {
        // 0.01^(1/30) = 0.8577 to four decimal places
        let multiplier = 0.01f64.powf(1.0 / 30.0);
        assert!((multiplier - 0.8577).abs() < 5e-5);
        let x = dataset_1d(&[0.0, 1.0, 4.0, 5.0, 9.0, 10.0, 14.0, 15.0]);
        let cfg = BoundConfig {
            epsilon: 0.01,
            ..BoundConfig::markov(2, 4, 30, 0.01, 77)
        };
        let report = markov_bound(&x, &cfg).unwrap();
        let min = report
            .per_trial_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        assert!((report.bound - multiplier * min).abs() < 1e-12);
    }

    #[test]
    fn markov_requires_without_replacement() {
        let x = dataset_1d(&[0.0, 1.0, 5.0, 6.0]);
        let cfg = BoundConfig::hoeffding(2, 3, 2, 0.1, 78);
        assert!(markov_bound(&x, &cfg).is_err());
    }

    #[test]
    fn baselines_zero_when_n_equals_k() {
        let x = dataset_1d(&[0.0, 5.0, 9.0]);
        let cfg = BoundConfig::hoeffding(3, 3, 5, 0.1, 79);
        let (l_h, l_m, avg) = baseline_bounds(&x, &cfg).unwrap();
        assert_eq!(avg, 0.0);
        assert_eq!(l_m.bound, 0.0);
        assert!(l_h.bound <= 0.0); // deviation term only
    }

    #[test]
    fn baselines_recomputable_and_epsilon_one() {
        let x = dataset_1d(&[0.0, 0.5, 4.0, 4.5, 9.0, 9.5]);
        let cfg = BoundConfig {
            epsilon: 1.0,
            truncation: Some(2.0),
            ..BoundConfig::hoeffding(2, 4, 6, 1.0, 80)
        };
        let (l_h, l_m, avg) = baseline_bounds(&x, &cfg).unwrap();
        let samples = &l_h.per_trial_values;
        let mean_truncated: f64 = samples.iter().map(|&v| v.min(2.0)).sum::<f64>() / 6.0;
        assert!((l_h.bound - mean_truncated).abs() < 1e-12);
        let min = samples.iter().cloned().fold(f64::INFINITY, f64::min);
        assert_eq!(l_m.bound, min); // epsilon = 1
        assert!((avg - samples.iter().sum::<f64>() / 6.0).abs() < 1e-12);
    }

    #[test]
    fn best_kmeanspp_examples() {
        let mut rng = seeding::master_rng(81);
        let x = dataset_1d(&[0.0, 0.0, 5.0, 5.0]);
        let (v, _) = best_kmeanspp_value(&x, 2, 5, &mut rng).unwrap();
        assert_eq!(v, 0.0);

        let x = dataset_1d(&[0.0, 2.0, 10.0]);
        let (v, p) = best_kmeanspp_value(&x, 2, 20, &mut rng).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(p.assignment(), &[0, 0, 1]);

        // upper bound property against the oracle
        let (ip, _) = brute_force_ip(&x, 2).unwrap();
        assert!(v >= ip - 1e-12);
    }

    #[test]
    fn bounds_are_deterministic() {
        let mut rng = seeding::master_rng(82);
        let rows: Vec<Vec<f64>> = (0..15)
            .map(|_| vec![rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)])
            .collect();
        let x = Dataset::from_rows(&rows).unwrap();
        let cfg = BoundConfig {
            replacement: Replacement::Without,
            ..small_cfg(2, 6, 4, 0.1, 83)
        };
        let a = markov_bound(&x, &cfg).unwrap();
        let b = markov_bound(&x, &cfg).unwrap();
        assert_eq!(a.per_trial_values, b.per_trial_values);
        assert_eq!(a.bound, b.bound);
        let hashes_a: Vec<u64> = a.trial_records.iter().map(|r| r.sketch_hash).collect();
        let hashes_b: Vec<u64> = b.trial_records.iter().map(|r| r.sketch_hash).collect();
        assert_eq!(hashes_a, hashes_b);
    }

    #[test]
    fn bounds_below_kmeanspp_upper_bound() {
        // B <= min v_i must hold whenever the methods succeed, since the
        // optimum sits between them
        let mut rng = seeding::master_rng(84);
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let x = Dataset::from_rows(&rows).unwrap();
        let (min_vi, _) = best_kmeanspp_value(&x, 2, 10, &mut rng).unwrap();
        let cfg_m = BoundConfig {
            replacement: Replacement::Without,
            ..small_cfg(2, 8, 5, 0.1, 85)
        };
        let report_m = markov_bound(&x, &cfg_m).unwrap();
        assert!(report_m.bound <= min_vi + 1e-9);
        let mut cfg_h = small_cfg(2, 8, 5, 0.1, 86);
        cfg_h.truncation = Some(min_vi.max(1e-9));
        let report_h = hoeffding_bound(&x, &cfg_h).unwrap();
        assert!(report_h.bound <= min_vi + 1e-9);
    }

    #[test]
    fn mean_sketch_value_below_oracle_chain() {
        // small version of the expectation chain: mean certified SDP value
        // over sketches <= mean sketch IP <= full IP, within 3 SEs
        let mut rng = seeding::master_rng(87);
        let rows: Vec<Vec<f64>> = (0..10)
            .map(|_| vec![rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)])
            .collect();
        let x = Dataset::from_rows(&rows).unwrap();
        let (ip_full, _) = brute_force_ip(&x, 2).unwrap();
        let solver = SolverConfig::default();
        let sketches = 60usize;
        let mut sdp_vals = Vec::new();
        let mut ip_vals = Vec::new();
        for t in 0..sketches {
            let mut trial = seeding::trial_rng(88, t as u64);
            let indices = sketch_indices(10, 5, Replacement::With, &mut trial).unwrap();
            let (v, _) = sketch_sdp_value(&x, &indices, 2, None, &solver).unwrap();
            sdp_vals.push(v);
            let sketch = x.subset(&indices).unwrap();
            ip_vals.push(brute_force_ip(&sketch, 2).unwrap().0);
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let se = |v: &[f64]| {
            let m = mean(v);
            let var = v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64;
            (var / v.len() as f64).sqrt()
        };
        let gap1 = mean(&ip_vals) - mean(&sdp_vals);
        let gap2 = ip_full - mean(&ip_vals);
        assert!(gap1 >= -3.0 * (se(&sdp_vals) + se(&ip_vals)), "gap1 {gap1}");
        assert!(gap2 >= -3.0 * se(&ip_vals), "gap2 {gap2}");
    }
}
