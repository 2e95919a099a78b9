//! Per-purpose random streams derived from one trial seed.
//!
//! Every consumer gets its own ChaCha stream, and within a stream each
//! sequence number (frame, cycle) starts at a fixed word offset. A draw for
//! frame 17 therefore never depends on how many draws frame 16 made.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Noise = 1,
    Drop = 2,
    Latency = 3,
    Spatial = 4,
    Faults = 5,
}

const WORDS_PER_SEQ: u32 = 20;

pub fn stream_rng(seed: u64, stream: Stream, seq: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng.set_word_pos((seq as u128) << WORDS_PER_SEQ);
    rng
}
