//! Grayscale raster images and boundary extension.

use num_complex::Complex64;

use crate::error::{Error, Result};

/// How reads outside the raster are resolved.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoundaryPolicy {
    /// Half-sample symmetric reflection: `-1 -> 0`, `-2 -> 1`, `n -> n - 1`.
    #[default]
    SymmetricReflect,
}

/// Maps an arbitrary integer index onto `0..len` by half-sample symmetric
/// reflection. The extension is periodic with period `2 * len`.
#[inline]
pub fn reflect_index(index: isize, len: usize) -> usize {
    debug_assert!(len > 0);
    let period = 2 * len as isize;
    let m = index.rem_euclid(period) as usize;
    if m < len {
        m
    } else {
        2 * len - 1 - m
    }
}

/// A 2-D grayscale raster of real intensities stored row-major.
///
/// Values are nominally in `[0, 255]` but are never clamped here; noisy and
/// filtered images routinely leave that range.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Image {
    /// Builds an image from row-major data, checking the shape and that every
    /// value is finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some((index, &value)) = data.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFinite { index, value });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    /// Constant image. Panics on zero dimensions or a non-finite value.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self::new(width, height, vec![value; width * height]).expect("valid constant image")
    }

    /// Builds an image by evaluating `f(x, y)` at every pixel.
    ///
    /// Panics if a dimension is zero or `f` returns a non-finite value.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data).expect("from_fn produced an invalid image")
    }

    /// Internal constructor for filter outputs whose finiteness follows from
    /// finite inputs.
    pub(crate) fn from_vec_unchecked(width: usize, height: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), width * height);
        debug_assert!(data.iter().all(|v| v.is_finite()));
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn pixels(&self) -> &[f64] {
        &self.data
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    /// Reads the pixel at any integer coordinate, extending the raster with
    /// `policy` outside its bounds.
    #[inline]
    pub fn get_extended(&self, x: isize, y: isize, policy: BoundaryPolicy) -> f64 {
        match policy {
            BoundaryPolicy::SymmetricReflect => {
                let xi = reflect_index(x, self.width);
                let yi = reflect_index(y, self.height);
                self.data[yi * self.width + xi]
            }
        }
    }

    /// Applies `f` to every pixel. Fails if any result is not finite.
    pub fn map_pixels(&self, f: impl Fn(f64) -> f64) -> Result<Image> {
        Image::new(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
        )
    }

    pub fn same_shape(&self, other: &Image) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_shape(&self, other: &Image) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                left_width: self.width,
                left_height: self.height,
                right_width: other.width,
                right_height: other.height,
            })
        }
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }
}

/// Per-pixel complex values, row-major. Carries the modulated images and the
/// numerator/denominator accumulators of the shiftable fast filter.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexImage {
    width: usize,
    height: usize,
    data: Vec<Complex64>,
}

impl ComplexImage {
    pub fn new(width: usize, height: usize, data: Vec<Complex64>) -> Result<Self> {
        check_dims(width, height, data.len())?;
        if let Some((index, v)) = data
            .iter()
            .enumerate()
            .find(|(_, v)| !(v.re.is_finite() && v.im.is_finite()))
        {
            return Err(Error::NonFinite {
                index,
                value: if v.re.is_finite() { v.im } else { v.re },
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self::new(
            width,
            height,
            vec![Complex64::new(0.0, 0.0); width * height],
        )
        .expect("valid zero image")
    }

    /// Joins separate real and imaginary planes.
    pub fn from_parts(re: &Image, im: &Image) -> Result<Self> {
        re.check_same_shape(im)?;
        Ok(Self {
            width: re.width,
            height: re.height,
            data: re
                .pixels()
                .iter()
                .zip(im.pixels())
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Complex64] {
        &self.data
    }

    pub fn pixels_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn re(&self) -> Image {
        Image::from_vec_unchecked(
            self.width,
            self.height,
            self.data.iter().map(|c| c.re).collect(),
        )
    }

    pub fn im(&self) -> Image {
        Image::from_vec_unchecked(
            self.width,
            self.height,
            self.data.iter().map(|c| c.im).collect(),
        )
    }
}

fn check_dims(width: usize, height: usize, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::EmptyImage { width, height });
    }
    if width.checked_mul(height) != Some(len) {
        return Err(Error::LengthMismatch { width, height, len });
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const REFLECT: BoundaryPolicy = BoundaryPolicy::SymmetricReflect;

    #[test]
    fn single_pixel_reflects_to_itself() {
        let img = Image::new(1, 1, vec![7.0]).unwrap();
        assert_eq!(img.get_extended(-3, 5, REFLECT), 7.0);
    }

    #[test]
    fn half_sample_reflection() {
        let img = Image::new(3, 1, vec![1.0, 2.0, 3.0]).unwrap();
        assert_eq!(img.get_extended(-1, 0, REFLECT), 1.0);
        assert_eq!(img.get_extended(-2, 0, REFLECT), 2.0);
        assert_eq!(img.get_extended(3, 0, REFLECT), 3.0);
        // 4 -> 1
        assert_eq!(img.get_extended(4, 0, REFLECT), 2.0);
    }

    #[test]
    fn map_pixels_examples() {
        let img = Image::filled(4, 3, 5.0);
        assert_eq!(img.map_pixels(|v| v).unwrap(), img);
        assert_eq!(
            img.map_pixels(|v| v * 2.0).unwrap(),
            Image::filled(4, 3, 10.0)
        );

        let edge = Image::new(2, 1, vec![0.0, 255.0]).unwrap();
        assert_eq!(edge.map_pixels(|v| v.clamp(0.0, 255.0)).unwrap(), edge);
    }

    #[test]
    fn map_pixels_rejects_non_finite() {
        let img = Image::new(2, 1, vec![0.0, 1.0]).unwrap();
        assert!(matches!(
            img.map_pixels(|v| 1.0 / v),
            Err(Error::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn construction_errors() {
        assert!(matches!(
            Image::new(0, 3, vec![]),
            Err(Error::EmptyImage { .. })
        ));
        assert!(matches!(
            Image::new(2, 2, vec![0.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
        assert!(matches!(
            Image::new(1, 1, vec![f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    proptest! {
        #[test]
        fn extension_agrees_in_bounds(w in 1usize..9, h in 1usize..9, seed in any::<u64>()) {
            let img = Image::from_fn(w, h, |x, y| ((x * 31 + y * 17) as u64 ^ seed) as f64 % 251.0);
            for y in 0..h {
                for x in 0..w {
                    prop_assert_eq!(img.get_extended(x as isize, y as isize, REFLECT), img.get(x, y));
                }
            }
        }

        #[test]
        fn reflection_is_an_involution_of_the_mirror(len in 1usize..20, i in -100isize..100) {
            let r = reflect_index(i, len);
            prop_assert!(r < len);
            // mirror across the left edge: -1 - i
            prop_assert_eq!(reflect_index(-1 - i, len), r);
            // mirror across the right edge: 2 len - 1 - i
            prop_assert_eq!(reflect_index(2 * len as isize - 1 - i, len), r);
        }
    }
}
