//! Constant-time improved bilateral filtering.
//!
//! With the range kernel replaced by `sum_n c_n exp(i omega_n t)`, the
//! numerator and denominator of the bilateral filter become
//!
//! ```text
//! P(i) = sum_n c_n conj(G_n(i)) (F_n * g)(i),   F_n = G_n f
//! Q(i) = sum_n c_n conj(G_n(i)) (G_n * g)(i),   G_n = exp(i omega_n guide)
//! ```
//!
//! so each retained term costs a handful of Gaussian blurs regardless of
//! sigma_s. Terms `n` and `N - n` are complex conjugates of each other; the
//! default path accumulates one of each pair and doubles its real part.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::bilateral::{FilterParams, Variant};
use crate::error::{invalid, Error, Result};
use crate::gaussian::{GaussianAccuracy, GaussianFilter, GaussianSpec};
use crate::image::{ComplexImage, Image};
use crate::kernel::KernelApproximation;
use crate::prefilter::{box_filter, local_dynamic_range};

/// Denominators at or below this abort the filter.
pub const MIN_DENOMINATOR: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FastOptions {
    /// Replaces the regime default truncation tolerance.
    pub epsilon: Option<f64>,
    /// Accumulate conjugate pairs once (default) or every term literally.
    pub exploit_symmetry: bool,
    pub gaussian: GaussianAccuracy,
}

impl Default for FastOptions {
    fn default() -> Self {
        Self {
            epsilon: None,
            exploit_symmetry: true,
            gaussian: GaussianAccuracy::Fast,
        }
    }
}

/// Filter output with the quantities the run was configured by.
#[derive(Debug, Clone)]
pub struct FastOutput {
    pub image: Image,
    pub approximation: KernelApproximation,
    /// Smallest denominator over the image.
    pub min_denominator: f64,
    /// Largest `|Im| / |Re|` of the accumulated numerator and denominator.
    /// Only the literal path forms the imaginary parts; zero otherwise.
    pub max_imaginary_ratio: f64,
}

impl FastOutput {
    /// Number of terms accumulated, `N - 2M + 1`.
    pub fn retained_terms(&self) -> usize {
        self.approximation.terms().len()
    }
}

/// Box-guided bilateral filter via the shiftable expansion.
pub fn fast_improved_bilateral(
    img: &Image,
    params: &FilterParams,
    epsilon: Option<f64>,
) -> Result<Image> {
    let options = FastOptions {
        epsilon,
        ..FastOptions::default()
    };
    fast_improved_bilateral_with(img, params, &options).map(|o| o.image)
}

pub fn fast_improved_bilateral_with(
    img: &Image,
    params: &FilterParams,
    options: &FastOptions,
) -> Result<FastOutput> {
    if params.variant != Variant::Improved {
        return Err(invalid(
            "variant",
            format!(
                "the fast path implements the improved filter only, got {}",
                params.variant
            ),
        ));
    }
    params.validate()?;
    let guide = box_filter(img, params.box_radius);
    fast_bilateral_guided(img, &guide, params, options)
}

/// Shiftable-kernel bilateral filter with an arbitrary range guide.
///
/// The kernel is fitted on `[-T, T]`, `T` being the local dynamic range of
/// `guide` over the `W`-window.
pub fn fast_bilateral_guided(
    img: &Image,
    guide: &Image,
    params: &FilterParams,
    options: &FastOptions,
) -> Result<FastOutput> {
    params.validate()?;
    img.check_same_shape(guide)?;
    let t = local_dynamic_range(guide, params.window)?;
    let approximation = KernelApproximation::build_with(t, params.sigma_r, options.epsilon)?;
    let blur = GaussianFilter::new(GaussianSpec::new(params.sigma_s, options.gaussian)?);

    let (num, den, max_imaginary_ratio) = if options.exploit_symmetry {
        let (p, q) = accumulate_pairs(img, guide, &approximation, &blur);
        (p, q, 0.0)
    } else {
        let (p, q) = accumulate_literal(img, guide, &approximation, &blur);
        let ratio = p
            .pixels()
            .iter()
            .chain(q.pixels())
            .map(|z| z.im.abs() / z.re.abs().max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max);
        (p.re().into_pixels(), q.re().into_pixels(), ratio)
    };

    let (index, min_denominator) =
        den.iter()
            .copied()
            .enumerate()
            .fold(
                (0, f64::INFINITY),
                |best, (i, v)| if v < best.1 { (i, v) } else { best },
            );
    if min_denominator <= MIN_DENOMINATOR {
        return Err(Error::KernelBreakdown {
            index,
            value: min_denominator,
        });
    }
    let out: Vec<f64> = num.iter().zip(&den).map(|(p, q)| p / q).collect();
    Ok(FastOutput {
        image: Image::from_vec_unchecked(img.width(), img.height(), out),
        approximation,
        min_denominator,
        max_imaginary_ratio,
    })
}

/// Accumulates `Re P` and `Re Q` using one term of each conjugate pair.
/// Working set: two modulated planes, two blurred planes, `P`, `Q`.
fn accumulate_pairs(
    img: &Image,
    guide: &Image,
    approx: &KernelApproximation,
    blur: &GaussianFilter,
) -> (Vec<f64>, Vec<f64>) {
    let (w, h) = (img.width(), img.height());
    let len = w * h;
    let (f, fbar) = (img.pixels(), guide.pixels());
    let mut p = vec![0.0; len];
    let mut q = vec![0.0; len];
    let mut g_re = vec![0.0; len];
    let mut g_im = vec![0.0; len];
    let mut f_re = vec![0.0; len];
    let mut f_im = vec![0.0; len];
    let mut scratch = Vec::new();
    let order = approx.order();

    for term in approx.terms().iter().filter(|k| 2 * k.index <= order) {
        let (omega, coeff) = (term.omega, term.coeff);
        let weight = if 2 * term.index == order {
            coeff
        } else {
            2.0 * coeff
        };

        (&mut g_re, &mut g_im, &mut f_re, &mut f_im)
            .into_par_iter()
            .zip(fbar.par_iter().zip(f.par_iter()))
            .for_each(|((gr, gi, fr, fi), (&gv, &fv))| {
                let (s, c) = (omega * gv).sin_cos();
                *gr = c;
                *gi = s;
                *fr = c * fv;
                *fi = s * fv;
            });
        for plane in [&mut g_re, &mut g_im, &mut f_re, &mut f_im] {
            blur.apply_plane(plane, w, h, &mut scratch);
        }
        // Re(c conj(G) B) = c (cos B_re + sin B_im)
        (&mut p, &mut q)
            .into_par_iter()
            .zip((&g_re, &g_im, &f_re, &f_im).into_par_iter())
            .zip(fbar.par_iter())
            .for_each(|(((pv, qv), (gr, gi, fr, fi)), &gv)| {
                let (s, c) = (omega * gv).sin_cos();
                *pv += weight * (c * fr + s * fi);
                *qv += weight * (c * gr + s * gi);
            });
    }
    (p, q)
}

/// Term-by-term accumulation in complex arithmetic over every retained `n`.
fn accumulate_literal(
    img: &Image,
    guide: &Image,
    approx: &KernelApproximation,
    blur: &GaussianFilter,
) -> (ComplexImage, ComplexImage) {
    let (w, h) = (img.width(), img.height());
    let mut p = ComplexImage::zeros(w, h);
    let mut q = ComplexImage::zeros(w, h);
    for term in approx.terms() {
        let g: Vec<Complex64> = guide
            .pixels()
            .iter()
            .map(|&v| Complex64::new(0.0, term.omega * v).exp())
            .collect();
        let f: Vec<Complex64> = g.iter().zip(img.pixels()).map(|(z, &v)| z * v).collect();
        let g = ComplexImage::new(w, h, g).expect("finite modulation");
        let f = ComplexImage::new(w, h, f).expect("finite modulation");
        let gb = blur.apply_complex(&g);
        let fb = blur.apply_complex(&f);
        for i in 0..w * h {
            let hz = term.coeff * g.pixels()[i].conj();
            p.pixels_mut()[i] += hz * fb.pixels()[i];
            q.pixels_mut()[i] += hz * gb.pixels()[i];
        }
    }
    (p, q)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bilateral::{filter_improved, FilterParams};
    use crate::noise::{add_gaussian_noise, NoiseSpec};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Image::from_fn(w, h, |_, _| rng.random_range(0.0..255.0))
    }

    fn max_abs_diff(a: &Image, b: &Image) -> f64 {
        a.pixels()
            .iter()
            .zip(b.pixels())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    fn blocks(w: usize, h: usize) -> Image {
        Image::from_fn(w, h, |x, y| {
            let base = if (x / 12 + y / 12) % 2 == 0 {
                60.0
            } else {
                190.0
            };
            base + 0.3 * x as f64
        })
    }

    #[test]
    fn constant_input_is_fixed_point() {
        let img = Image::filled(40, 30, 123.0);
        let p = FilterParams::new(3.0, 30.0).unwrap();
        let out = fast_improved_bilateral(&img, &p, None).unwrap();
        assert!(out.pixels().iter().all(|v| (v - 123.0).abs() <= 1e-6));
    }

    #[test]
    fn flat_guide_reduces_to_gaussian_blur() {
        let img = random_image(48, 40, 1);
        let guide = Image::filled(48, 40, 80.0);
        let p = FilterParams::new(2.5, 20.0).unwrap();
        let out = fast_bilateral_guided(&img, &guide, &p, &FastOptions::default()).unwrap();
        assert_eq!(out.approximation.dynamic_range(), 0.0);
        assert_eq!(out.approximation.order(), 1);
        let blur = GaussianFilter::new(GaussianSpec::new(2.5, GaussianAccuracy::Fast).unwrap())
            .apply(&img);
        assert!(max_abs_diff(&out.image, &blur) <= 1e-6);
    }

    #[test]
    fn symmetric_and_literal_paths_agree() {
        let clean = blocks(64, 48);
        let img = add_gaussian_noise(&clean, NoiseSpec::new(15.0, 3).unwrap());
        let p = FilterParams::new(2.0, 25.0).unwrap();
        let fast = fast_improved_bilateral_with(&img, &p, &FastOptions::default()).unwrap();
        let literal = fast_improved_bilateral_with(
            &img,
            &p,
            &FastOptions {
                exploit_symmetry: false,
                ..FastOptions::default()
            },
        )
        .unwrap();
        assert!(max_abs_diff(&fast.image, &literal.image) <= 1e-9);
        assert!(
            literal.max_imaginary_ratio <= 1e-6,
            "{}",
            literal.max_imaginary_ratio
        );
        assert!(literal.min_denominator > 0.0);
    }

    #[test]
    fn gradient_fixture_agrees_with_direct() {
        let clean = crate::fixtures::gradient_edges();
        let noisy = crate::noise::add_gaussian_noise(
            &clean,
            crate::noise::NoiseSpec::new(20.0, 7).unwrap(),
        );
        let p = FilterParams::new(3.0, 30.0).unwrap();
        let direct = crate::bilateral::filter_improved(&noisy, &p).unwrap();
        let fast = fast_improved_bilateral(&noisy, &p, None).unwrap();
        let diffs: Vec<f64> = fast
            .pixels()
            .iter()
            .zip(direct.pixels())
            .map(|(a, b)| (a - b).abs())
            .collect();
        let max = diffs.iter().copied().fold(0.0, f64::max);
        let mean = diffs.iter().sum::<f64>() / diffs.len() as f64;
        assert!(max <= 1.0 && mean <= 0.1, "max {max} mean {mean}");
    }

    #[test]
    fn close_to_direct_filter() {
        let clean = blocks(96, 80);
        let img = add_gaussian_noise(&clean, NoiseSpec::new(20.0, 9).unwrap());
        let p = FilterParams::new(3.0, 30.0).unwrap();
        let fast = fast_improved_bilateral(&img, &p, None).unwrap();
        let direct = filter_improved(&img, &p).unwrap();
        let diff = max_abs_diff(&fast, &direct);
        assert!(diff <= 1.0, "max diff {diff}");
    }

    #[test]
    fn reports_regime_and_terms() {
        let img = random_image(40, 40, 4);
        let p = FilterParams::new(2.0, 10.0).unwrap();
        let out = fast_improved_bilateral_with(&img, &p, &FastOptions::default()).unwrap();
        let a = &out.approximation;
        assert_eq!(out.retained_terms(), a.order() - 2 * a.truncation() + 1);
        assert!(a.dynamic_range() > 0.0);
    }

    #[test]
    fn rejects_other_variants_and_bad_sigma() {
        let img = random_image(10, 10, 5);
        let p = FilterParams::new(1.0, 10.0).unwrap();
        assert!(fast_improved_bilateral(&img, &p.with_variant(Variant::Standard), None).is_err());
        let mut bad = p;
        bad.sigma_r = 0.0;
        assert!(fast_improved_bilateral(&img, &bad, None).is_err());
        assert!(fast_improved_bilateral(&img, &p, Some(1.5)).is_err());
    }

    #[test]
    fn smaller_epsilon_is_not_less_accurate() {
        let clean = blocks(64, 64);
        let img = add_gaussian_noise(&clean, NoiseSpec::new(25.0, 11).unwrap());
        let p = FilterParams::new(2.0, 15.0).unwrap();
        let direct = filter_improved(&img, &p).unwrap();
        let mut previous = f64::INFINITY;
        for eps in [0.2, 0.1, 0.01, 0.001] {
            let out = fast_improved_bilateral(&img, &p, Some(eps)).unwrap();
            let err = max_abs_diff(&out, &direct);
            assert!(err <= previous + 1e-6, "eps {eps}: {err} > {previous}");
            previous = err;
        }
    }
}
