//! Seed derivation.
//!
//! Every random draw in an episode comes from one top-level seed. Each
//! component gets its own ChaCha stream, keyed by a fixed tag, so any
//! component can be replayed in isolation:
//!
//! | tag        | consumer                                  |
//! |------------|-------------------------------------------|
//! | `structure`| latent structure sampling                 |
//! | `code`     | per-position vocabulary permutations      |
//! | `split`    | held-out test set selection               |
//! | `schedule` | supporting / querying game plans          |
//! | `scs`      | continuous stimulus samples               |
//! | `listener` | random-baseline listener decisions        |
//!
//! The stream seed is the first eight bytes of `SHA-256(tag || seed_le)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

pub type EpisodeRng = ChaCha8Rng;

pub const STRUCTURE: &str = "structure";
pub const CODE: &str = "code";
pub const SPLIT: &str = "split";
pub const SCHEDULE: &str = "schedule";
pub const SCS: &str = "scs";
pub const LISTENER: &str = "listener";

/// Derive the generator for one component of the run seeded by `seed`.
pub fn stream(seed: u64, tag: &str) -> EpisodeRng {
    let mut hasher = Sha256::new();
    hasher.update(tag.as_bytes());
    hasher.update(seed.to_le_bytes());
    let digest = hasher.finalize();
    let mut head = [0u8; 8];
    head.copy_from_slice(&digest[..8]);
    ChaCha8Rng::seed_from_u64(u64::from_le_bytes(head))
}
