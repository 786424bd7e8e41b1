//! Counter-based random streams.
//!
//! Every shot of an experiment owns two ChaCha streams addressed by
//! `(seed, shot)`: one for the noise realization and one for the position
//! measurements. Results therefore do not depend on how shots are scheduled
//! across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type StreamRng = ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Substream {
    Noise = 0,
    Measurement = 1,
}

pub fn stream(seed: u64, index: u64) -> StreamRng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn shot_stream(seed: u64, shot: u64, which: Substream) -> StreamRng {
    stream(seed, shot.wrapping_mul(2).wrapping_add(which as u64))
}
