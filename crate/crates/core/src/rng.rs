//! Per-clip random streams.
//!
//! Each clip gets its own ChaCha8 stream keyed by the first 8 bytes of
//! SHA-256(clip id), read little-endian, XOR the run seed. Results therefore
//! do not depend on clip processing order or worker count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Identifier written to sidecars and manifests.
pub const RNG_ALGORITHM: &str = "chacha8;key=le64(sha256(clip_id)[0..8])^seed";

pub type ClipRng = ChaCha8Rng;

pub fn clip_key(clip_id: &str, seed: u64) -> u64 {
    let digest = Sha256::digest(clip_id.as_bytes());
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(head) ^ seed
}

pub fn clip_rng(clip_id: &str, seed: u64) -> ClipRng {
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&clip_key(clip_id, seed).to_le_bytes());
    ChaCha8Rng::from_seed(bytes)
}
