//! Seed derivation and categorical sampling.

use rand::Rng;

use crate::scalar::Scalar;

fn splitmix(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Derives an independent stream seed from a base seed and a path of indices.
pub fn mix_seed(seed: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(splitmix(seed), |acc, &p| splitmix(acc ^ splitmix(p)))
}

/// Draws an index with probability proportional to `probs`. Falls back to the
/// last positive entry when rounding leaves the draw past the total.
pub fn sample_index<S: Scalar, R: Rng + ?Sized>(probs: &[S], rng: &mut R) -> usize {
    let total: f64 = probs.iter().map(|p| p.as_f64()).sum();
    let mut u = rng.random::<f64>() * total;
    for (i, p) in probs.iter().enumerate() {
        u -= p.as_f64();
        if u < 0.0 {
            return i;
        }
    }
    probs.iter().rposition(|p| *p > S::zero()).unwrap_or(probs.len() - 1)
}
