//! Deterministic RNG derivation.
//!
//! Every randomized component derives its generator from a user seed plus a
//! role ("stream") and an index, mixed through splitmix64. Independent roles
//! therefore never share state, and results are reproducible bit-for-bit for
//! a given seed regardless of evaluation order or thread count.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub(crate) fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A 64-bit seed mixed from `(seed, stream, index)`.
pub(crate) fn mixed_seed(seed: u64, stream: u64, index: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ stream) ^ index)
}

/// The per-(seed, stream, index) generator used across the crate.
pub(crate) fn rng_from(seed: u64, stream: u64, index: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mixed_seed(seed, stream, index))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::RngCore;

    #[test]
    fn derivation_is_deterministic_and_stream_separated() {
        let a1 = rng_from(7, 1, 0).next_u64();
        let a2 = rng_from(7, 1, 0).next_u64();
        assert_eq!(a1, a2);
        assert_ne!(rng_from(7, 1, 0).next_u64(), rng_from(7, 2, 0).next_u64());
        assert_ne!(rng_from(7, 1, 0).next_u64(), rng_from(7, 1, 1).next_u64());
        assert_ne!(rng_from(7, 1, 0).next_u64(), rng_from(8, 1, 0).next_u64());
    }

    #[test]
    fn splitmix_matches_reference_vector() {
        // Reference value for the standard splitmix64 finalizer at seed 0.
        assert_eq!(splitmix64(0), 0xE220_A839_7B1D_CDAF);
    }
}
