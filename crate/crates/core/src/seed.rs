//! Deterministic seed derivation.
//!
//! Every stochastic step derives its generator from a user-supplied
//! master seed, a purpose label and an index, so runs reproduce
//! bit-exactly across platforms and thread schedules.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// Identifier of the generator and derivation scheme, recorded in
/// output metadata.
pub const GENERATOR_ID: &str = "chacha8/sha256-derive";

fn derive_bytes(master: u64, label: &str, index: u64) -> [u8; 32] {
    let mut hasher = Sha256::new();
    hasher.update(master.to_le_bytes());
    hasher.update([0x1f]);
    hasher.update(label.as_bytes());
    hasher.update([0x1f]);
    hasher.update(index.to_le_bytes());
    hasher.finalize().into()
}

/// Derives a portable RNG from (seed, purpose label, index).
pub fn derive_rng(master: u64, label: &str, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::from_seed(derive_bytes(master, label, index))
}

/// Derives a child seed from (seed, purpose label, index).
pub fn derive_seed(master: u64, label: &str, index: u64) -> u64 {
    let bytes = derive_bytes(master, label, index);
    u64::from_le_bytes(bytes[..8].try_into().unwrap())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn derivation_is_deterministic_and_label_sensitive() {
        let a: f64 = derive_rng(7, "subsample", 0).random();
        let b: f64 = derive_rng(7, "subsample", 0).random();
        let c: f64 = derive_rng(7, "noise", 0).random();
        let d: f64 = derive_rng(7, "subsample", 1).random();
        assert_eq!(a, b);
        assert_ne!(a, c);
        assert_ne!(a, d);
    }

    #[test]
    fn derived_seeds_differ_by_index() {
        assert_ne!(derive_seed(0, "curve", 0), derive_seed(0, "curve", 1));
        assert_eq!(derive_seed(3, "x", 9), derive_seed(3, "x", 9));
    }
}
