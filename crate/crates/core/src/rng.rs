//! Deterministic, labeled random-number streams.
//!
//! Every stochastic operation takes a [`SeededRng`]. Child streams are keyed
//! by stable string labels (user id, grid value, replicate index), so results
//! do not depend on iteration or scheduling order.

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Identifier of the generator and derivation scheme, recorded in reports.
pub const RNG_ALGORITHM: &str = "chacha8+fnv1a+splitmix64/v1";

/// Root of a deterministic stream family.
///
/// Identical seed and algorithm yield identical draw sequences on every
/// platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SeededRng {
    seed: u64,
}

impl SeededRng {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn algorithm(&self) -> &'static str {
        RNG_ALGORITHM
    }

    /// Derive the stream family for a labeled subtask.
    pub fn child(&self, label: &str) -> SeededRng {
        SeededRng {
            seed: splitmix64(self.seed ^ fnv1a64(label.as_bytes())),
        }
    }

    /// Concrete generator for this node of the family.
    pub fn rng(&self) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed)
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn same_seed_same_draws() {
        let a: Vec<u64> = SeededRng::new(7).rng().sample_iter(rand::distributions::Standard).take(16).collect();
        let b: Vec<u64> = SeededRng::new(7).rng().sample_iter(rand::distributions::Standard).take(16).collect();
        assert_eq!(a, b);
    }

    #[test]
    fn labels_separate_streams() {
        let root = SeededRng::new(1);
        let a = root.child("user=alpha").rng().gen::<u64>();
        let b = root.child("user=beta").rng().gen::<u64>();
        assert_ne!(a, b);
        // Re-derivation is stable.
        assert_eq!(a, root.child("user=alpha").rng().gen::<u64>());
    }

    #[test]
    fn children_differ_from_root() {
        let root = SeededRng::new(42);
        assert_ne!(root.child("x").seed(), root.seed());
    }
}
