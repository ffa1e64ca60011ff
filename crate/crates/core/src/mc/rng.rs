//! Counter-based random streams.
//!
//! Every replicate gets its own ChaCha8 stream keyed by
//! `(global seed, purpose key)` and selected by the replicate index, so the
//! value drawn by replicate `i` never depends on how replicates are
//! scheduled across workers.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Mixes a seed with a purpose key into a 64-bit value.
pub fn derive_key(seed: u64, key: u64) -> u64 {
    let mut s = seed ^ key.rotate_left(32).wrapping_mul(0xD6E8_FEB8_6659_FD93);
    splitmix64(&mut s) ^ splitmix64(&mut s)
}

pub fn replicate_rng(seed: u64, key: u64, replicate: u64) -> ChaCha8Rng {
    let mut state = derive_key(seed, key);
    let mut bytes = [0u8; 32];
    for chunk in bytes.chunks_exact_mut(8) {
        chunk.copy_from_slice(&splitmix64(&mut state).to_le_bytes());
    }
    let mut rng = ChaCha8Rng::from_seed(bytes);
    rng.set_stream(replicate);
    rng
}
