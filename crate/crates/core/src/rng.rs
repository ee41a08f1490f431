//! Seeded, splittable random streams.
//!
//! Every consumer derives its generator from a `(seed, stream)` pair. ChaCha
//! is counter based, so distinct stream ids give independent sequences and a
//! fold or restart can be replayed without touching any other stream.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub type Rng = ChaCha8Rng;

pub fn stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Stream id for a `(namespace, index, sub)` triple.
pub fn stream_id(namespace: u16, index: u32, sub: u16) -> u64 {
    (u64::from(namespace) << 48) | (u64::from(index) << 16) | u64::from(sub)
}

/// A child seed for APIs that take a plain `u64` seed.
pub fn derive_seed(seed: u64, namespace: u16, index: u32, sub: u16) -> u64 {
    use rand::RngCore;
    stream(seed, stream_id(namespace, index, sub)).next_u64()
}
