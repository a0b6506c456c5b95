//! Counter-based random substreams.
//!
//! Every particle owns an independent ChaCha12 stream selected by
//! `(master seed, domain)` through the key and by the particle index through
//! the stream counter, so no draw depends on how particles are scheduled.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

/// Separates the streams of different consumers sharing one master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u64)]
pub enum Domain {
    Source = 0,
    Mimic = 1,
    Axioms = 2,
}

const KEY_TAG: u64 = 0x6d69_6d69_632d_7374;

pub fn substream(seed: u64, domain: Domain, index: u64) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(domain as u64).to_le_bytes());
    key[16..24].copy_from_slice(&KEY_TAG.to_le_bytes());
    let mut rng = ChaCha12Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
