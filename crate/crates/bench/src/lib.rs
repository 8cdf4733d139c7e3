//! Fixtures shared by the benchmarks.

use scrambling_core::sampler::sample_rng;
use scrambling_core::slater::random_product_config;
use scrambling_core::SlaterState;

/// A random product state on `logical_len` sites with `particles` fermions,
/// evolved long enough to spread every orbital across the chain.
pub fn spread_state(logical_len: usize, particles: usize, seed: u64) -> SlaterState {
    let mut rng = sample_rng(seed, 0);
    let m0 = random_product_config(logical_len, particles, &mut rng).expect("valid sector");
    scrambling_core::initial_slater(&m0).evolve(logical_len as f64)
}
