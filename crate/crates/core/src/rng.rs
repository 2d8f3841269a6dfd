use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

/// Seeded generator for one named stream of a run. Distinct `stream` values
/// give statistically independent sequences from the same run seed.
pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

// Stream ids used across the crate.
pub const STREAM_INIT: u64 = 1;
pub const STREAM_SPLIT: u64 = 2;
pub const STREAM_SHUFFLE: u64 = 3;
pub const STREAM_GMM: u64 = 4;
pub const STREAM_SVM: u64 = 5;
pub const STREAM_FOLDS: u64 = 6;
pub const STREAM_NOISE: u64 = 7;
pub const STREAM_RIR: u64 = 8;
pub const STREAM_ADAPT_INIT: u64 = 9;
pub const STREAM_SCRATCH_INIT: u64 = 10;
