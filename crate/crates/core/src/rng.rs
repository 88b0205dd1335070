//! Seeded random streams. A run seed owns several independent ChaCha
//! streams so that adding draws to one consumer never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Initial phases.
pub const STREAM_PHASES: u64 = 0;
/// Born-rule winner draw.
pub const STREAM_WINNER: u64 = 1;
/// Symmetry-breaking jitter in the optimizer.
pub const STREAM_JITTER: u64 = 2;

pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
