//! Seeded randomness. Every consumer draws from its own ChaCha8 stream of
//! the run seed, so adding draws in one place never shifts another.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    InitWeights,
    Subset,
    /// Presentation order for one training epoch.
    Epoch(u32),
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::InitWeights => 1,
            Stream::Subset => 2,
            Stream::Epoch(e) => 0x1_0000_0000 | u64::from(e),
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
