use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) const CLUSTER_DOMAIN: u64 = 0x636c_7573_7465_7273;
pub(crate) const TEXTURE_DOMAIN: u64 = 0x7465_7874_7572_6573;

/// Independent ChaCha8 stream keyed by `(seed, domain, index)`.
pub(crate) fn substream(seed: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}
