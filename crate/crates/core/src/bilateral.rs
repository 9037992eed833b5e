//! Direct bilateral filtering, `O(W^2)` work per pixel.
//!
//! All four variants share one kernel: a weighted mean over the
//! `[-W, W]^2` window with weights `g_s(j) g_r(guide(i - j) - guide(i))`.
//! They differ only in which image drives the range weights.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};
use crate::image::{reflect_index, Image};
use crate::prefilter::{box_filter, BoxRadius};

/// Which image the range kernel compares.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Variant {
    /// The noisy input itself.
    Standard,
    /// The box-filtered input.
    #[default]
    Improved,
    /// The clean image (needs a reference).
    Oracle,
    /// The output of a standard pass.
    Iterated,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::Standard,
        Variant::Improved,
        Variant::Oracle,
        Variant::Iterated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Standard => "standard",
            Variant::Improved => "ibf",
            Variant::Oracle => "oracle",
            Variant::Iterated => "iterated",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "standard" | "sbf" => Ok(Variant::Standard),
            "improved" | "ibf" => Ok(Variant::Improved),
            "oracle" | "obf" => Ok(Variant::Oracle),
            "iterated" => Ok(Variant::Iterated),
            other => Err(invalid("variant", format!("unknown variant `{other}`"))),
        }
    }
}

/// Parameters shared by every filter in the crate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FilterParams {
    pub sigma_s: f64,
    pub sigma_r: f64,
    /// Half-width of the spatial window.
    pub window: usize,
    /// Box prefilter radius, used by [`Variant::Improved`] only.
    pub box_radius: BoxRadius,
    pub variant: Variant,
}

/// `ceil(3 sigma_s)`, at least 1.
pub fn default_window(sigma_s: f64) -> usize {
    ((3.0 * sigma_s).ceil() as usize).max(1)
}

impl FilterParams {
    /// Improved filter with `W = ceil(3 sigma_s)` and `L = 1`.
    pub fn new(sigma_s: f64, sigma_r: f64) -> Result<Self> {
        let p = Self {
            sigma_s,
            sigma_r,
            window: if sigma_s.is_finite() && sigma_s > 0.0 {
                default_window(sigma_s)
            } else {
                1
            },
            box_radius: BoxRadius(1),
            variant: Variant::Improved,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_variant(mut self, variant: Variant) -> Self {
        self.variant = variant;
        self
    }

    pub fn with_box_radius(mut self, l: usize) -> Self {
        self.box_radius = BoxRadius(l);
        self
    }

    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sigma_s.is_finite() && self.sigma_s > 0.0) {
            return Err(invalid(
                "sigma_s",
                format!("must be finite and > 0, got {}", self.sigma_s),
            ));
        }
        if !(self.sigma_r.is_finite() && self.sigma_r > 0.0) {
            return Err(invalid(
                "sigma_r",
                format!("must be finite and > 0, got {}", self.sigma_r),
            ));
        }
        if self.window == 0 {
            return Err(invalid("window", "must be at least 1"));
        }
        Ok(())
    }
}

/// `exp(-(dx^2 + dy^2) / (2 sigma_s^2))`, not normalized.
#[inline]
pub fn gaussian_spatial_weight(dx: i64, dy: i64, sigma_s: f64) -> f64 {
    (-((dx * dx + dy * dy) as f64) / (2.0 * sigma_s * sigma_s)).exp()
}

/// The image whose intensity differences feed the range kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeGuide(pub Image);

impl RangeGuide {
    /// Builds the guide `variant` calls for. `clean` is only read by
    /// [`Variant::Oracle`].
    pub fn for_variant(img: &Image, clean: Option<&Image>, params: &FilterParams) -> Result<Self> {
        let guide = match params.variant {
            Variant::Standard => img.clone(),
            Variant::Improved => box_filter(img, params.box_radius),
            Variant::Oracle => {
                let clean = clean.ok_or(Error::MissingReference)?;
                img.check_same_shape(clean)?;
                clean.clone()
            }
            Variant::Iterated => bilateral_direct(img, &RangeGuide(img.clone()), params)?,
        };
        Ok(RangeGuide(guide))
    }

    pub fn image(&self) -> &Image {
        &self.0
    }
}

/// Weighted mean over `[-W, W]^2` with spatial and range Gaussian weights;
/// the range weights compare `guide` values. Boundaries are reflected.
pub fn bilateral_direct(img: &Image, guide: &RangeGuide, params: &FilterParams) -> Result<Image> {
    params.validate()?;
    let guide = guide.image();
    img.check_same_shape(guide)?;
    let (w, h) = (img.width(), img.height());
    let r = params.window as isize;
    let side = 2 * params.window + 1;

    let spatial: Vec<f64> = (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .map(|(dx, dy)| gaussian_spatial_weight(dx as i64, dy as i64, params.sigma_s))
        .collect();
    let range_scale = -1.0 / (2.0 * params.sigma_r * params.sigma_r);
    // reflected coordinates for x + dx and y + dy, offset by W
    let xs: Vec<usize> = (-r..w as isize + r).map(|i| reflect_index(i, w)).collect();
    let ys: Vec<usize> = (-r..h as isize + r).map(|i| reflect_index(i, h)).collect();
    let (src, gd) = (img.pixels(), guide.pixels());

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, o) in row.iter_mut().enumerate() {
            let center = gd[y * w + x];
            let (mut num, mut den) = (0.0, 0.0);
            for (ky, &sy) in ys[y..y + side].iter().enumerate() {
                let base = sy * w;
                let weights = &spatial[ky * side..(ky + 1) * side];
                for (&sx, &ws) in xs[x..x + side].iter().zip(weights) {
                    let d = gd[base + sx] - center;
                    let wgt = ws * (d * d * range_scale).exp();
                    num += wgt * src[base + sx];
                    den += wgt;
                }
            }
            // den >= the centre weight, which is 1
            *o = num / den;
        }
    });
    Ok(Image::from_vec_unchecked(w, h, out))
}

/// Runs the direct filter for `params.variant`. `clean` is required by the
/// oracle variant and ignored otherwise.
pub fn filter_direct(img: &Image, clean: Option<&Image>, params: &FilterParams) -> Result<Image> {
    params.validate()?;
    let guide = RangeGuide::for_variant(img, clean, params)?;
    bilateral_direct(img, &guide, params)
}

pub fn filter_standard(img: &Image, params: &FilterParams) -> Result<Image> {
    filter_direct(img, None, &params.with_variant(Variant::Standard))
}

pub fn filter_improved(img: &Image, params: &FilterParams) -> Result<Image> {
    filter_direct(img, None, &params.with_variant(Variant::Improved))
}

pub fn filter_oracle(img: &Image, clean: &Image, params: &FilterParams) -> Result<Image> {
    filter_direct(img, Some(clean), &params.with_variant(Variant::Oracle))
}

pub fn filter_iterated(img: &Image, params: &FilterParams) -> Result<Image> {
    filter_direct(img, None, &params.with_variant(Variant::Iterated))
}
