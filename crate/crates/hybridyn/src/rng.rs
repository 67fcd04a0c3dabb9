//! Seeded random number generation.
//!
//! All stochastic code in the crate draws from a ChaCha12 stream cipher
//! generator. The algorithm is fixed (not `StdRng`, whose algorithm may change
//! between releases) so that a seed recorded in a config or output file
//! reproduces the same samples on any platform. Gaussian variates are produced
//! by an explicit Box-Muller transform for the same reason: the sampling
//! recipe is part of the reproducibility contract.

use rand::{Rng, SeedableRng};
pub use rand_chacha::ChaCha12Rng as SeededRng;

/// Generator for a given seed.
pub fn seeded(seed: u64) -> SeededRng {
    SeededRng::seed_from_u64(seed)
}

/// Standard normal variate via Box-Muller.
///
/// Consumes exactly two uniforms per call so the stream position is easy to
/// reason about.
pub fn standard_normal<R: Rng>(rng: &mut R) -> f64 {
    // 1 - u in (0, 1] keeps the logarithm finite.
    let u1: f64 = 1.0 - rng.random::<f64>();
    let u2: f64 = rng.random();
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Normal variate with the given mean and standard deviation.
pub fn normal<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    mean + sd * standard_normal(rng)
}

/// Exponential variate with the given mean, by inversion.
pub fn exponential<R: Rng>(rng: &mut R, mean: f64) -> f64 {
    let u: f64 = rng.random();
    -mean * (1.0 - u).ln()
}

/// Normal variate truncated to nonnegative values by rejection.
///
/// Matches a Gaussian density restricted to [0, inf) and renormalized.
pub fn normal_nonnegative<R: Rng>(rng: &mut R, mean: f64, sd: f64) -> f64 {
    loop {
        let x = normal(rng, mean, sd);
        if x >= 0.0 {
            return x;
        }
    }
}

/// Uniform variate on [lo, hi).
pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    lo + (hi - lo) * rng.random::<f64>()
}
