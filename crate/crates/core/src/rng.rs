//! Seeded random streams.
//!
//! Every random draw in a run derives from the run seed, so a run is
//! reproducible from `(scenario, seed)`. Per-particle streams of the
//! Monte-Carlo step depend on `(seed, step, particle)` only, which makes the
//! result independent of the order in which particles are processed.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> SimRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// SplitMix64 finaliser.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one particle at one step.
pub fn particle_stream(seed: u64, step: usize, particle: usize) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(mix(seed) ^ step as u64));
    rng.set_stream(particle as u64);
    rng
}

/// Seed for a named sub-task (initial data, optimizer, replicate...).
pub fn derive(seed: u64, tag: u64) -> u64 {
    mix(seed ^ mix(tag))
}
