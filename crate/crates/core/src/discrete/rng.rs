//! Counter-based uniform variates.
//!
//! A variate is a pure function of `(seed, episode, interval, stream)`: the
//! ChaCha8 keystream keyed by `seed` is addressed with the episode as the
//! stream id and `(interval, stream)` as the word position, so Monte Carlo
//! results do not depend on how episodes are scheduled.

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stream reserved for the type draws `(i, j)`; intervals 0 and 1.
pub const TYPE_STREAM: u64 = 0;
/// Stream of player 1's variates `zeta_{1,l}`.
pub const P1_STREAM: u64 = 1;
/// Stream of player 2's variates `zeta_{2,l}`.
pub const P2_STREAM: u64 = 2;
const STREAMS: u128 = 3;

/// Uniform variate in `[0, 1)` with 53 random bits.
pub fn uniform(seed: u64, episode: u64, interval: u64, stream: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(episode);
    // Two 32-bit words per variate.
    rng.set_word_pos(2 * (u128::from(interval) * STREAMS + u128::from(stream)));
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// The randomness of one episode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RandomSource {
    pub seed: u64,
    pub episode: u64,
}

impl RandomSource {
    pub fn new(seed: u64, episode: u64) -> Self {
        Self { seed, episode }
    }

    /// `zeta_{player, l}` for `player` in {1, 2}.
    pub fn zeta(&self, player: u8, interval: usize) -> f64 {
        let stream = if player == 1 { P1_STREAM } else { P2_STREAM };
        uniform(self.seed, self.episode, interval as u64, stream)
    }

    /// Variate for the draw of player `player`'s type.
    pub fn type_variate(&self, player: u8) -> f64 {
        uniform(self.seed, self.episode, u64::from(player - 1), TYPE_STREAM)
    }
}

/// Index drawn from `weights` by inverse CDF; the last positive weight
/// absorbs rounding in the cumulative sum.
pub fn inverse_cdf(weights: &[f64], u: f64) -> usize {
    let mut acc = 0.0;
    let mut last = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            acc += w;
            last = k;
            if u < acc {
                return k;
            }
        }
    }
    last
}
