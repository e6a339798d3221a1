//! Reproducible random substreams.
//!
//! Every random draw comes from a ChaCha8 stream selected by a user seed, a
//! domain, and an index (usually the frame id), so results do not depend on
//! how frames are spread across worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    Channel,
    Schedule,
}

/// Independent stream for `(seed, domain, index)`; `index` must be below 2^63.
pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha8Rng {
    debug_assert!(index < 1 << 63);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let tag = match domain {
        Domain::Channel => 0,
        Domain::Schedule => 1 << 63,
    };
    rng.set_stream(tag | index);
    rng
}
