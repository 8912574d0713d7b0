//! Seedable RNG streams.
//!
//! Every stochastic operation takes an explicit `u64` seed. Independent
//! sub-streams are derived with ChaCha stream ids, so results are
//! reproducible for a given seed regardless of thread count.

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::StandardNormal;

pub type Stream = ChaCha12Rng;

/// Root stream for a seed.
pub fn stream(seed: u64) -> Stream {
    ChaCha12Rng::seed_from_u64(seed)
}

/// Derived stream: same seed, distinct ChaCha stream id.
pub fn substream(seed: u64, id: u64) -> Stream {
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

pub fn standard_normal(rng: &mut Stream) -> f64 {
    rng.sample(StandardNormal)
}

/// Standard complex normal: real and imaginary parts i.i.d. N(0, 1/2),
/// so E|z|^2 = 1.
pub fn standard_complex_normal(rng: &mut Stream) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}
