//! Image quality metrics: MSE, PSNR and SSIM.
//!
//! All metrics work on the real-valued images directly, without quantizing
//! to 8 bits first.

use crate::error::{Error, Result};
use crate::image::Image;

/// Peak value used by PSNR and the SSIM stabilizing constants.
pub const DYNAMIC_RANGE: f64 = 255.0;

/// SSIM window side (pixels).
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricsReport {
    pub mse: f64,
    /// `f64::INFINITY` when the images are identical.
    pub psnr_db: f64,
    pub ssim: f64,
}

impl MetricsReport {
    pub fn compute(estimate: &Image, reference: &Image) -> Result<Self> {
        let mse = mse(estimate, reference)?;
        Ok(Self {
            mse,
            psnr_db: psnr_from_mse(mse),
            ssim: ssim(estimate, reference)?,
        })
    }
}

pub fn mse(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let sum: f64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok(sum / a.len() as f64)
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10()
    }
}

/// Peak signal-to-noise ratio in dB; `+inf` for identical images.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    mse(a, b).map(psnr_from_mse)
}

/// Normalized 1-D Gaussian taps of the SSIM window.
pub fn ssim_window_taps() -> [f64; SSIM_WINDOW] {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut taps = [0.0; SSIM_WINDOW];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - r;
        *t = (-d * d / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|t| *t /= sum);
    taps
}

/// Mean SSIM over every 11x11 window lying fully inside the image.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    let (w, h) = (a.width(), a.height());
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            window: SSIM_WINDOW,
        });
    }
    let taps = ssim_window_taps();
    let (x, y) = (a.pixels(), b.pixels());
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(y).map(|(p, q)| p * q).collect();

    let mu_x = valid_filter(x, w, h, &taps);
    let mu_y = valid_filter(y, w, h, &taps);
    let e_xx = valid_filter(&xx, w, h, &taps);
    let e_yy = valid_filter(&yy, w, h, &taps);
    let e_xy = valid_filter(&xy, w, h, &taps);

    let c1 = (SSIM_K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (SSIM_K2 * DYNAMIC_RANGE).powi(2);
    let n = mu_x.len();
    let total: f64 = (0..n)
        .map(|i| {
            let (mx, my) = (mu_x[i], mu_y[i]);
            let vx = e_xx[i] - mx * mx;
            let vy = e_yy[i] - my * my;
            let cov = e_xy[i] - mx * my;
            ((2.0 * mx * my + c1) * (2.0 * cov + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / n as f64)
}

/// Separable correlation keeping only fully-covered output positions.
fn valid_filter(src: &[f64], w: usize, h: usize, taps: &[f64]) -> Vec<f64> {
    let k = taps.len();
    let (ow, oh) = (w - k + 1, h - k + 1);
    let mut horiz = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            horiz[y * ow + x] = taps.iter().zip(&row[x..x + k]).map(|(t, v)| t * v).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for (i, t) in taps.iter().enumerate() {
            let src_row = &horiz[(y + i) * ow..(y + i + 1) * ow];
            for (o, v) in out[y * ow..(y + 1) * ow].iter_mut().zip(src_row) {
                *o += t * v;
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
    }

    /// Unoptimized SSIM: every window evaluated from scratch with the 2-D
    /// Gaussian weights.
    fn ssim_brute_force(a: &Image, b: &Image) -> f64 {
        let r = (SSIM_WINDOW / 2) as isize;
        let mut weights = vec![vec![0.0; SSIM_WINDOW]; SSIM_WINDOW];
        let mut sum = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                let g = (-((dx * dx + dy * dy) as f64) / (2.0 * 1.5 * 1.5)).exp();
                weights[(dy + r) as usize][(dx + r) as usize] = g;
                sum += g;
            }
        }
        let c1 = (0.01f64 * 255.0).powi(2);
        let c2 = (0.03f64 * 255.0).powi(2);
        let mut total = 0.0;
        let mut count = 0;
        for cy in r..(a.height() as isize - r) {
            for cx in r..(a.width() as isize - r) {
                let (mut mx, mut my) = (0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let g = weights[(dy + r) as usize][(dx + r) as usize] / sum;
                        let (px, py) = ((cx + dx) as usize, (cy + dy) as usize);
                        mx += g * a.get(px, py);
                        my += g * b.get(px, py);
                    }
                }
                let (mut vx, mut vy, mut cov) = (0.0, 0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let g = weights[(dy + r) as usize][(dx + r) as usize] / sum;
                        let (px, py) = ((cx + dx) as usize, (cy + dy) as usize);
                        let (u, v) = (a.get(px, py) - mx, b.get(px, py) - my);
                        vx += g * u * u;
                        vy += g * v * v;
                        cov += g * u * v;
                    }
                }
                total += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
                count += 1;
            }
        }
        total / count as f64
    }

    #[test]
    fn mse_examples() {
        let a = Image::new(2, 1, vec![0.0, 0.0]).unwrap();
        let b = Image::new(2, 1, vec![3.0, 4.0]).unwrap();
        assert_eq!(mse(&a, &a).unwrap(), 0.0);
        assert_eq!(mse(&a, &b).unwrap(), 12.5);
    }

    #[test]
    fn mse_matches_double_loop() {
        let a = random_image(23, 17, 1);
        let b = random_image(23, 17, 2);
        let mut acc = 0.0;
        for y in 0..17 {
            for x in 0..23 {
                let d = a.get(x, y) - b.get(x, y);
                acc += d * d;
            }
        }
        assert_eq!(mse(&a, &b).unwrap(), acc / (23.0 * 17.0));
    }

    #[test]
    fn psnr_examples() {
        let a = random_image(12, 12, 3);
        assert_eq!(psnr(&a, &a).unwrap(), f64::INFINITY);

        let zero = Image::filled(4, 4, 0.0);
        let full = Image::filled(4, 4, 255.0);
        assert!(psnr(&zero, &full).unwrap().abs() < 1e-12);

        let shifted = a.map_pixels(|v| v + 1.0).unwrap();
        let p = psnr(&a, &shifted).unwrap();
        assert!((p - 10.0 * 65025f64.log10()).abs() < 1e-9);
        assert!((p - 48.13).abs() <= 0.01);
    }

    #[test]
    fn dimension_mismatch() {
        let a = Image::filled(4, 4, 0.0);
        let b = Image::filled(4, 5, 0.0);
        assert!(matches!(mse(&a, &b), Err(Error::DimensionMismatch { .. })));
        assert!(psnr(&a, &b).is_err());
        assert!(ssim(&a, &b).is_err());
    }

    #[test]
    fn ssim_identity_and_inversion() {
        let a = random_image(32, 24, 4);
        assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
        let inv = a.map_pixels(|v| 255.0 - v).unwrap();
        assert!(ssim(&a, &inv).unwrap() < 1.0);
    }

    #[test]
    fn ssim_too_small() {
        let a = Image::filled(10, 40, 1.0);
        assert!(matches!(ssim(&a, &a), Err(Error::ImageTooSmall { .. })));
    }

    #[test]
    fn ssim_matches_brute_force() {
        let a = random_image(64, 64, 5);
        let b = random_image(64, 64, 6);
        let fast = ssim(&a, &b).unwrap();
        let slow = ssim_brute_force(&a, &b);
        assert!((fast - slow).abs() <= 1e-9, "{fast} vs {slow}");

        // correlated pair exercises the covariance term
        let c = a.map_pixels(|v| 0.8 * v + 20.0).unwrap();
        let c = Image::from_fn(64, 64, |x, y| c.get(x, y) + b.get(x, y) * 0.1);
        assert!((ssim(&a, &c).unwrap() - ssim_brute_force(&a, &c)).abs() <= 1e-9);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn psnr_symmetric_and_offset_invariant(seed in any::<u64>(), offset in -50.0f64..50.0) {
            let a = random_image(16, 16, seed);
            let b = random_image(16, 16, seed.wrapping_add(1));
            let p = psnr(&a, &b).unwrap();
            prop_assert!((p - psnr(&b, &a).unwrap()).abs() < 1e-12);
            let a2 = a.map_pixels(|v| v + offset).unwrap();
            let b2 = b.map_pixels(|v| v + offset).unwrap();
            prop_assert!((p - psnr(&a2, &b2).unwrap()).abs() < 1e-9);
        }

        #[test]
        fn ssim_symmetric_and_reflexive(seed in any::<u64>()) {
            let a = random_image(16, 13, seed);
            let b = random_image(16, 13, seed ^ 0xdead_beef);
            prop_assert!((ssim(&a, &b).unwrap() - ssim(&b, &a).unwrap()).abs() < 1e-12);
            prop_assert!((ssim(&a, &a).unwrap() - 1.0).abs() < 1e-12);
            let s = ssim(&a, &b).unwrap();
            prop_assert!((-1.0..=1.0).contains(&s));
        }
    }
}
