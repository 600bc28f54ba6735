//! Deterministic random substreams.
//!
//! Every run derives its generators from a master seed, a seed index and a
//! stream tag, so seeds can be executed in any order (or in parallel) without
//! changing a single draw.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type SimRng = ChaCha8Rng;

/// Which component a generator belongs to. Components never share a stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Env = 1,
    CoAgent = 2,
    Agent = 3,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed for the `seed_index`-th independent run under `master_seed`.
pub fn run_seed(master_seed: u64, seed_index: u64) -> u64 {
    splitmix64(master_seed ^ splitmix64(seed_index.wrapping_add(0x5EED)))
}

/// Generator for one component of one run.
pub fn substream(run_seed: u64, stream: Stream) -> SimRng {
    let mut rng = ChaCha8Rng::seed_from_u64(run_seed);
    rng.set_stream(stream as u64);
    rng
}
