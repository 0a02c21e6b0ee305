//! Core library for zero-shot ship state estimation: a container-ship
//! simulation benchmark, an unscented Kalman filter with pluggable process
//! models (including sequence-model dynamics conditioned on per-sigma-point
//! trajectory histories), the sequence-model training recipe, baseline
//! observers and the evaluation metrics.
//!
//! File formats, manifests and the command-line surface live in the
//! companion `fmukf-cli` crate; everything here operates on in-memory data.

pub mod ship;
pub mod signal;
pub mod traj;

pub use ship::{ControlInput, ShipParams, ShipState};
pub use traj::Trajectory;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Derives a deterministic, label-decorrelated RNG from a base seed. Every
/// randomized component draws from its own named stream so that adding a
/// consumer never perturbs the others.
pub fn seed_rng(seed: u64, label: &str) -> ChaCha8Rng {
    // FNV-1a over the label, mixed with the seed through splitmix64.
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in label.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    let mut z = seed ^ h;
    let mut key = [0u8; 32];
    for chunk in key.chunks_mut(8) {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut x = z;
        x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        x ^= x >> 31;
        chunk.copy_from_slice(&x.to_le_bytes());
    }
    ChaCha8Rng::from_seed(key)
}
