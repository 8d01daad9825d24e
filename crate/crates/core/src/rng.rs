//! Named random streams derived from a single seed.
//!
//! Each component draws from its own ChaCha stream so that, for example, the
//! negative-sampling stream can be held fixed while the shuffle order varies.

use rand::SeedableRng;
pub use rand_chacha::ChaCha8Rng as Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Split,
    Init,
    Sampling,
    Shuffle,
    Warp,
    Synthetic,
}

impl Stream {
    fn id(self) -> u64 {
        match self {
            Stream::Split => 1,
            Stream::Init => 2,
            Stream::Sampling => 3,
            Stream::Shuffle => 4,
            Stream::Warp => 5,
            Stream::Synthetic => 6,
        }
    }
}

pub fn stream(seed: u64, which: Stream) -> Rng {
    let mut rng = Rng::seed_from_u64(seed);
    rng.set_stream(which.id());
    rng
}
