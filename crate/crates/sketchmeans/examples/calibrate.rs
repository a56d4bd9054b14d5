use rand::Rng;
use sketchmeans::dataset::Dataset;
use sketchmeans::sdp::{build_problem, solve_two_stage, SolverConfig};
use sketchmeans::{kmeans, seeding};

fn main() {
    let mut rng = seeding::master_rng(1234);
    let k = 10usize;
    let d = 5usize;
    let centers: Vec<Vec<f64>> = (0..k)
        .map(|_| (0..d).map(|_| rng.random_range(0.0..500.0)).collect())
        .collect();
    let s = 300usize;
    let mut rows = Vec::with_capacity(s);
    for _ in 0..s {
        let c = rng.random_range(0..k);
        let row: Vec<f64> = (0..d).map(|j| centers[c][j] + gauss(&mut rng)).collect();
        rows.push(row);
    }
    let y = Dataset::from_rows(&rows).unwrap();

    let t0 = std::time::Instant::now();
    let km = kmeans::kmeanspp_lloyd(&y, k, &mut rng, 300).unwrap();
    println!("kmeans warm value {:.4}, t = {:?}", km.value, t0.elapsed());

    let problem = build_problem(&y, k, None).unwrap();
    let cfg = SolverConfig {
        warm_start: Some(km.partition.clone()),
        ..SolverConfig::default()
    };
    let t0 = std::time::Instant::now();
    let sol = solve_two_stage(&problem, &cfg).unwrap();
    println!(
        "s=300 k=10: primal {:.4}, cert {:.4}, iters {}, status {:?}, res p/d/g = {:.2e}/{:.2e}/{:.2e}, t = {:?}",
        sol.primal_value, sol.certified_lower_bound, sol.iterations, sol.status,
        sol.residuals.primal, sol.residuals.dual, sol.residuals.gap, t0.elapsed()
    );
}

fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random::<f64>().max(1e-12);
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}
