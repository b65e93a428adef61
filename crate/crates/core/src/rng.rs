use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use sha2::{Digest, Sha256};

/// The deterministic generator used everywhere a seed is accepted.
pub type SeededRng = ChaCha12Rng;

pub fn seeded_rng(seed: u64) -> SeededRng {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derives an independent 64-bit seed from a base seed and a list of labels.
///
/// Labels are length-prefixed before hashing so `["ab", "c"]` and
/// `["a", "bc"]` map to different seeds.
pub fn derive_seed(base: u64, labels: &[&[u8]]) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(b"compriv/seed/v1");
    hasher.update(base.to_le_bytes());
    for label in labels {
        hasher.update((label.len() as u64).to_le_bytes());
        hasher.update(label);
    }
    let digest = hasher.finalize();
    let mut out = [0u8; 8];
    out.copy_from_slice(&digest[..8]);
    u64::from_le_bytes(out)
}
