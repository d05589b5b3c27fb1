//! Counter-based random streams keyed by `(seed, realization, mode)`.
//!
//! Every `(realization, mode)` pair owns a disjoint window of the ChaCha8 keystream,
//! so draws do not depend on evaluation order or thread count.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// 32-bit words reserved per mode; one mode never draws more than `WORDS_PER_MODE / 2` f64s.
pub const WORDS_PER_MODE: u128 = 64;

pub fn stream(seed: u64, realization: u64, mode: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(realization);
    rng.set_word_pos(mode as u128 * WORDS_PER_MODE);
    rng
}

/// Uniform draw in the open interval (0, 1).
pub fn open_unit(rng: &mut impl Rng) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}
