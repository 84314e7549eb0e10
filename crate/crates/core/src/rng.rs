//! Reproducible random substreams.
//!
//! Work is split into fixed-size chunks and chunk `i` of component `tag`
//! draws from ChaCha20 seeded with `seed` on stream `(tag << 32) | i`.
//! Results therefore do not depend on the number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;

/// Component tags for stream derivation.
pub const TAG_QM_PRIOR: u32 = 1;
pub const TAG_LHV_PRIOR: u32 = 2;
pub const TAG_BIAS_PICK: u32 = 3;
pub const TAG_BIAS_SIMULATE: u32 = 4;
pub const TAG_MOCK_QM: u32 = 5;
pub const TAG_MOCK_LHV: u32 = 6;

/// Points per chunk of a parallel sampler.
pub const CHUNK: usize = 1024;

pub fn substream(seed: u64, tag: u32, index: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(((tag as u64) << 32) | (index & 0xffff_ffff));
    rng
}

/// Splits `n` items into `(chunk index, start, len)` triples.
pub fn chunks(n: usize) -> Vec<(u64, usize, usize)> {
    (0..n.div_ceil(CHUNK))
        .map(|c| {
            let start = c * CHUNK;
            (c as u64, start, CHUNK.min(n - start))
        })
        .collect()
}
