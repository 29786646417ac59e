//! Simulation of mixture-of-experts content generation offloaded across a
//! mobile edge network, together with a discrete soft actor-critic agent that
//! picks the edge device for each offloaded expert subtask.
//!
//! The crate is organised bottom-up:
//!
//! - [`scenario`]: seeded world generation (devices, experts, channels, tasks)
//! - [`cost`]: communication energy and compute cost
//! - [`quality`]: synthetic expert quality, gating weights and aggregation
//! - [`env`]: the offloading MDP (state encoding, step, reward)
//! - [`sac`]: networks, replay buffer and the discrete SAC learner
//! - [`baselines`]: random, benchmark, upper-bound and oracle policies
//! - [`harness`]: configuration, training/evaluation loops, metrics and plot data

pub mod baselines;
pub mod cost;
pub mod env;
pub mod error;
pub mod harness;
pub mod quality;
pub mod sac;
pub mod scenario;

pub use error::{Error, Result};

/// The random generator used everywhere in the crate.
///
/// ChaCha is portable: the same seed yields the same stream on every platform.
pub type SeededRng = rand_chacha::ChaCha8Rng;

/// Builds a generator for one named stream of a run seed.
pub fn seeded_rng(seed: u64, stream: u64) -> SeededRng {
    use rand::SeedableRng;
    let mut rng = SeededRng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
