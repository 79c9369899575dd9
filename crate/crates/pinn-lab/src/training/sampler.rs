//! Seeded sampling of collocation and condition points, plus the stream
//! derivation that keeps runs reproducible and independent.

use rand::RngCore;
use rand_chacha::ChaCha8Rng;

const F64_FROM_U53: f64 = 1.0 / (1u64 << 53) as f64;

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e3779b97f4a7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d049bb133111eb);
    x ^ (x >> 31)
}

/// Deterministically derive an independent stream seed from a run seed and
/// a purpose tag.
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    splitmix64(seed ^ splitmix64(tag))
}

/// Purpose tags for the per-run random streams.
pub mod stream {
    pub const NETWORK_INIT: u64 = 1;
    pub const COLLOCATION: u64 = 2;
    pub const IC: u64 = 3;
    pub const BC: u64 = 4;
    pub const LANDSCAPE: u64 = 5;
}

pub fn rng_for(seed: u64, tag: u64) -> ChaCha8Rng {
    use rand::SeedableRng;
    ChaCha8Rng::seed_from_u64(derive_seed(seed, tag))
}

pub fn uniform_unit(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * F64_FROM_U53
}

/// `n` points i.i.d. uniform on the box, row-major `[n][bounds.len()]`.
/// Deterministic given the rng state.
pub fn sample_collocation(bounds: &[(f64, f64)], n: usize, rng: &mut impl RngCore) -> Vec<f64> {
    let mut pts = Vec::with_capacity(n * bounds.len());
    for _ in 0..n {
        for &(lo, hi) in bounds {
            pts.push(lo + (hi - lo) * uniform_unit(rng));
        }
    }
    pts
}
