//! Deterministic randomness.
//!
//! Every random draw in the protocol comes from a ChaCha20 stream derived
//! from the run seed and a label path (for example
//! `["mean-round", "client", "clinic-3"]`). Streams for distinct paths are
//! independent, and a stream depends only on the seed and its own path —
//! never on how many other streams were created or in which order. That is
//! what makes runs reproducible byte-for-byte even when client work is
//! executed on a thread pool.

use rand_chacha::ChaCha20Rng;
use sha2::{Digest, Sha256};

/// Re-exported so callers can name the concrete RNG without depending on
/// `rand_chacha` themselves.
pub use rand::SeedableRng;

/// Derives an independent ChaCha20 stream for `labels` under `seed`.
///
/// The seed material is `SHA-256(seed_le || len(l_0) || l_0 || ...)` with
/// every label length-prefixed, so distinct label paths cannot collide by
/// concatenation (`["ab","c"]` vs `["a","bc"]`).
pub fn derive_rng(seed: u64, labels: &[&str]) -> ChaCha20Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for label in labels {
        let bytes = label.as_bytes();
        hasher.update((bytes.len() as u64).to_le_bytes());
        hasher.update(bytes);
    }
    let digest: [u8; 32] = hasher.finalize().into();
    ChaCha20Rng::from_seed(digest)
}
