//! Deterministic per-trial random streams.
//!
//! Every randomized routine takes an explicit RNG; experiment drivers derive
//! one stream per trial from a master seed so that results do not depend on
//! the execution schedule.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Master stream for a seed.
pub fn master_rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream for (seed, index): same key, distinct ChaCha stream.
///
/// Streams with different indices never overlap, so trials may run in any
/// order or in parallel and still reproduce bit-identically.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let mut a = trial_rng(7, 3);
        let mut b = trial_rng(7, 3);
        let mut c = trial_rng(7, 4);
        let xa: f64 = a.random();
        let xb: f64 = b.random();
        let xc: f64 = c.random();
        assert_eq!(xa, xb);
        assert_ne!(xa, xc);
    }
}
