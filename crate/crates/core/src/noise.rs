//! Additive white Gaussian noise.
//!
//! Variates come from a ChaCha20 stream seeded with [`SeedableRng::seed_from_u64`]
//! and mapped to N(0, 1) by `rand_distr`'s ziggurat sampler. Pixels are
//! visited in row-major order, one variate each, so a given
//! `(image size, sigma, seed)` always yields the same realization on every
//! platform.

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::image::Image;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(invalid(
                "sigma",
                format!("must be finite and >= 0, got {sigma}"),
            ));
        }
        Ok(Self { sigma, seed })
    }
}

/// Returns `clean + sigma * n` with i.i.d. standard normal `n`. The result
/// is not clamped to the 8-bit range.
pub fn add_gaussian_noise(clean: &Image, spec: NoiseSpec) -> Image {
    let mut rng = ChaCha20Rng::seed_from_u64(spec.seed);
    let data = clean
        .pixels()
        .iter()
        .map(|&v| {
            let n: f64 = StandardNormal.sample(&mut rng);
            v + spec.sigma * n
        })
        .collect();
    Image::from_vec_unchecked(clean.width(), clean.height(), data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::psnr;

    fn ramp(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| ((x + 3 * y) % 256) as f64)
    }

    #[test]
    fn zero_sigma_is_identity() {
        let clean = ramp(17, 9);
        let noisy = add_gaussian_noise(&clean, NoiseSpec::new(0.0, 99).unwrap());
        assert_eq!(noisy, clean);
    }

    #[test]
    fn deterministic_per_seed() {
        let clean = ramp(32, 32);
        let a = add_gaussian_noise(&clean, NoiseSpec::new(20.0, 7).unwrap());
        let b = add_gaussian_noise(&clean, NoiseSpec::new(20.0, 7).unwrap());
        let c = add_gaussian_noise(&clean, NoiseSpec::new(20.0, 8).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn sample_mean_is_near_zero() {
        let clean = ramp(256, 256);
        let noisy = add_gaussian_noise(&clean, NoiseSpec::new(20.0, 1234).unwrap());
        let n = clean.len() as f64;
        let mean: f64 = noisy
            .pixels()
            .iter()
            .zip(clean.pixels())
            .map(|(a, b)| a - b)
            .sum::<f64>()
            / n;
        assert!(mean.abs() <= 3.0 * 20.0 / n.sqrt(), "mean {mean}");
    }

    #[test]
    fn psnr_matches_expected_mse() {
        // E[MSE] = sigma^2, so PSNR ~= 10 log10(255^2 / 400) = 22.11 dB
        let clean = ramp(256, 256);
        let noisy = add_gaussian_noise(&clean, NoiseSpec::new(20.0, 42).unwrap());
        let p = psnr(&noisy, &clean).unwrap();
        assert!((p - 22.11).abs() <= 0.15, "psnr {p}");
    }

    #[test]
    fn output_is_not_clamped() {
        let clean = Image::filled(64, 64, 0.0);
        let noisy = add_gaussian_noise(&clean, NoiseSpec::new(30.0, 3).unwrap());
        assert!(noisy.min() < 0.0);
    }

    #[test]
    fn rejects_negative_sigma() {
        assert!(NoiseSpec::new(-1.0, 0).is_err());
        assert!(NoiseSpec::new(f64::NAN, 0).is_err());
    }
}
