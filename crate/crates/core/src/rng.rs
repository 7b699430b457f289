//! Reproducible random streams.
//!
//! Every parallel unit of work (a Monte Carlo trial, a binning draw) gets its
//! own ChaCha stream keyed by `(seed, stream)`, so results never depend on
//! how work is scheduled across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

pub fn stream_rng(seed: u64, stream: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream ids reserved for non-trial draws, kept far away from trial indices.
pub(crate) const BINNING_STREAM: u64 = u64::MAX - 1;
