//! Counter-based random streams.
//!
//! Every `(seed, stream, lane)` triple owns an independent ChaCha8 sequence:
//! `seed` and `lane` form the key and `stream` selects the ChaCha stream
//! id. Draws therefore do not depend on how work is split across threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const DOMAIN: [u8; 16] = *b"contest-entry-v1";

pub fn stream_rng(seed: u64, stream: u64, lane: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&lane.to_le_bytes());
    key[16..].copy_from_slice(&DOMAIN);
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(stream);
    rng
}
