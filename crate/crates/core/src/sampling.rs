use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Independent stream `index` derived from `seed`; results do not depend on evaluation order.
pub(crate) fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Draws an index with probability proportional to `weights`.
///
/// The uniform variate lies in the open interval (0, 1), so entries below the resolution of
/// the cumulative sum (e.g. rounding residue of an exact zero) are never selected.
pub(crate) fn pick_weighted<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let u: f64 = rng.sample(Open01);
    let target = u * total;
    let mut acc = 0.0;
    let mut last_positive = 0;
    for (k, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            last_positive = k;
        }
        let next = acc + w;
        if target < next && next > acc {
            return k;
        }
        acc = next;
    }
    last_positive
}

/// `true` with probability `p`; exact for `p = 0` and `p = 1`.
pub(crate) fn bernoulli<R: Rng + ?Sized>(rng: &mut R, p: f64) -> bool {
    rng.random::<f64>() < p
}
