//! Seeded random states.
//!
//! Every stream is ChaCha8 (`rand_chacha::ChaCha8Rng::seed_from_u64`) fed
//! from one 64-bit seed; Gaussian draws use `rand_distr::StandardNormal`.
//! Mode `k = 1..=n` draws its real part then its imaginary part, in order.

use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::spectral::TorusFunction;
use crate::C64;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mean-zero real function with `|f̂(k)| ~ (1+|k|)^{−s−1}` and
/// `‖f‖_{H^s} = norm`.
pub fn random_state(seed: u64, n: usize, s: f64, norm: f64) -> TorusFunction {
    let mut r = rng(seed);
    random_state_from(&mut r, n, s, norm)
}

pub fn random_state_from(r: &mut ChaCha8Rng, n: usize, s: f64, norm: f64) -> TorusFunction {
    let mut coeffs = vec![C64::new(0.0, 0.0); 2 * n + 1];
    for k in 1..=n {
        let re: f64 = r.sample(StandardNormal);
        let im: f64 = r.sample(StandardNormal);
        let c = C64::new(re, im) * (1.0 + k as f64).powf(-s - 1.0);
        coeffs[n + k] = c;
        coeffs[n - k] = c.conj();
    }
    let f = TorusFunction::from_coeffs(n, coeffs, true).expect("Hermitian by construction");
    let current = f.sobolev_norm(s);
    if current > 0.0 {
        f.scaled(norm / current)
    } else {
        f
    }
}

/// `(u₀, u₁)` with unit `H^s` fluctuation norms and a shared random mean.
pub fn random_pair(seed: u64, n: usize, s: f64) -> (TorusFunction, TorusFunction) {
    let mut r = rng(seed);
    let mean: f64 = r.sample(StandardNormal);
    let constant = TorusFunction::constant(mean, n);
    let u0 = random_state_from(&mut r, n, s, 1.0).add(&constant);
    let u1 = random_state_from(&mut r, n, s, 1.0).add(&constant);
    (u0, u1)
}

/// Per-task seed derived from a base seed and an index (SplitMix64 step).
pub fn derive_seed(base: u64, index: u64) -> u64 {
    let mut z = base.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_mean_zero_and_normalized() {
        let a = random_state(7, 12, 1.0, 2.5);
        let b = random_state(7, 12, 1.0, 2.5);
        assert_eq!(a, b);
        assert_eq!(a.mean(), C64::new(0.0, 0.0));
        assert!((a.sobolev_norm(1.0) - 2.5).abs() < 1e-12);
        assert!(a.is_real());
        assert_ne!(a, random_state(8, 12, 1.0, 2.5));
    }

    #[test]
    fn pair_has_matched_means() {
        let (u0, u1) = random_pair(3, 8, 0.0);
        assert_eq!(u0.mean(), u1.mean());
        assert_ne!(u0, u1);
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(1, 0), derive_seed(1, 1));
        assert_eq!(derive_seed(5, 3), derive_seed(5, 3));
    }
}
