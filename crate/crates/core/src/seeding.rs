use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent RNG stream for sample `index` under `seed`.
///
/// Streams never depend on thread scheduling, so any parallel reduction over
/// samples is reproducible as long as the reduction itself runs in order.
pub(crate) fn stream_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Stable 64-bit mix used to derive sub-seeds (splitmix64 finaliser).
pub(crate) fn mix(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}
