//! Deterministic fan-out of a single root seed into per-component seeds.

use sha2::{Digest, Sha256};

/// Hashes the root seed together with a label path. Stable across platforms.
pub fn derive_seed(root: u64, labels: &[&str]) -> u64 {
    let mut h = Sha256::new();
    h.update(root.to_le_bytes());
    for l in labels {
        h.update((l.len() as u64).to_le_bytes());
        h.update(l.as_bytes());
    }
    let digest = h.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
