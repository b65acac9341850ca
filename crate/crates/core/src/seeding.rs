//! Seed derivation for independent random streams.
//!
//! Every stream in an experiment is keyed on the master seed and a role
//! string such as `"oracle/run=3"`. The key is hashed with SHA-256, so streams
//! for distinct roles are independent and do not depend on scheduling order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

/// The generator used for every seeded stream.
pub type StreamRng = ChaCha8Rng;

pub fn derive_seed(master_seed: u64, role: &str) -> u64 {
    let digest = Sha256::new()
        .chain_update(master_seed.to_le_bytes())
        .chain_update(role.as_bytes())
        .finalize();
    let mut bytes = [0u8; 8];
    bytes.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(bytes)
}

pub fn stream(master_seed: u64, role: &str) -> StreamRng {
    StreamRng::seed_from_u64(derive_seed(master_seed, role))
}

pub fn seeded(seed: u64) -> StreamRng {
    StreamRng::seed_from_u64(seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn distinct_roles_distinct_seeds() {
        let a = derive_seed(1, "oracle/run=0");
        let b = derive_seed(1, "oracle/run=1");
        let c = derive_seed(2, "oracle/run=0");
        assert_ne!(a, b);
        assert_ne!(a, c);
        assert_eq!(a, derive_seed(1, "oracle/run=0"));
    }
}
