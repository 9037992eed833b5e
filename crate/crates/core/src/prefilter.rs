//! Box filtering and the local dynamic range of a guide image.
//!
//! Both run in time independent of the window radius: the box filter uses
//! separable running sums, the range uses van Herk / Gil-Werman sliding
//! max/min. Boundaries are symmetrically reflected.

use crate::error::{invalid, Result};
use crate::image::{reflect_index, Image};

/// Running sums are recomputed from scratch after this many updates.
const REACCUMULATE_EVERY: usize = 1 << 16;

/// Half-width of the box filter window; the window is `(2L+1) x (2L+1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct BoxRadius(pub usize);

impl BoxRadius {
    pub fn side(self) -> usize {
        2 * self.0 + 1
    }
}

/// Mean over the `(2L+1)^2` neighbourhood of every pixel.
pub fn box_filter(img: &Image, radius: BoxRadius) -> Image {
    let l = radius.0;
    if l == 0 {
        return img.clone();
    }
    let (w, h) = (img.width(), img.height());
    let src = img.pixels();
    let l = l as isize;

    let mut horiz = vec![0.0; w * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        let out = &mut horiz[y * w..(y + 1) * w];
        let window_sum =
            |x: isize| -> f64 { (x - l..=x + l).map(|i| row[reflect_index(i, w)]).sum() };
        let mut sum = 0.0;
        for x in 0..w as isize {
            if (x as usize).is_multiple_of(REACCUMULATE_EVERY) {
                sum = window_sum(x);
            } else {
                sum += row[reflect_index(x + l, w)] - row[reflect_index(x - l - 1, w)];
            }
            out[x as usize] = sum;
        }
    }

    let norm = 1.0 / (radius.side() * radius.side()) as f64;
    let mut out = vec![0.0; w * h];
    let mut sums = vec![0.0; w];
    let hrow = |y: isize| &horiz[reflect_index(y, h) * w..(reflect_index(y, h) + 1) * w];
    for y in 0..h as isize {
        if (y as usize).is_multiple_of(REACCUMULATE_EVERY) {
            sums.iter_mut().for_each(|s| *s = 0.0);
            for yy in y - l..=y + l {
                for (s, v) in sums.iter_mut().zip(hrow(yy)) {
                    *s += v;
                }
            }
        } else {
            let (add, sub) = (hrow(y + l), hrow(y - l - 1));
            for ((s, a), b) in sums.iter_mut().zip(add).zip(sub) {
                *s += a - b;
            }
        }
        let dst = &mut out[y as usize * w..(y as usize + 1) * w];
        for (d, s) in dst.iter_mut().zip(&sums) {
            *d = s * norm;
        }
    }
    Image::from_vec_unchecked(w, h, out)
}

#[derive(Clone, Copy)]
enum Extreme {
    Max,
    Min,
}

impl Extreme {
    #[inline]
    fn pick(self, a: f64, b: f64) -> f64 {
        match self {
            Extreme::Max => a.max(b),
            Extreme::Min => a.min(b),
        }
    }
}

/// van Herk / Gil-Werman: extreme of every `2r+1` window of a reflected line,
/// three comparisons per sample whatever `r` is.
fn sliding_extreme_line(
    line: &[f64],
    r: usize,
    op: Extreme,
    out: &mut [f64],
    scratch: &mut Vec<f64>,
) {
    let n = line.len();
    let k = 2 * r + 1;
    let padded_len = n + 2 * r;
    scratch.clear();
    scratch.extend((0..padded_len).map(|i| line[reflect_index(i as isize - r as isize, n)]));
    let padded = &scratch[..];

    // prefix extremes within blocks of k, and suffix extremes
    let mut prefix = vec![0.0; padded_len];
    let mut suffix = vec![0.0; padded_len];
    for i in 0..padded_len {
        prefix[i] = if i % k == 0 {
            padded[i]
        } else {
            op.pick(prefix[i - 1], padded[i])
        };
    }
    for i in (0..padded_len).rev() {
        suffix[i] = if i == padded_len - 1 || (i + 1) % k == 0 {
            padded[i]
        } else {
            op.pick(suffix[i + 1], padded[i])
        };
    }
    for (x, o) in out.iter_mut().enumerate() {
        // window covers padded[x ..= x + 2r]
        *o = op.pick(suffix[x], prefix[x + k - 1]);
    }
}

fn sliding_extreme(img: &Image, r: usize, op: Extreme) -> Image {
    let (w, h) = (img.width(), img.height());
    let mut scratch = Vec::new();
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        sliding_extreme_line(
            img.row(y),
            r,
            op,
            &mut rows[y * w..(y + 1) * w],
            &mut scratch,
        );
    }
    let mut column = vec![0.0; h];
    let mut filtered = vec![0.0; h];
    let mut out = vec![0.0; w * h];
    for x in 0..w {
        for y in 0..h {
            column[y] = rows[y * w + x];
        }
        sliding_extreme_line(&column, r, op, &mut filtered, &mut scratch);
        for y in 0..h {
            out[y * w + x] = filtered[y];
        }
    }
    Image::from_vec_unchecked(w, h, out)
}

/// Maximum over the `(2r+1)^2` reflected neighbourhood of every pixel.
pub fn max_filter(img: &Image, r: usize) -> Image {
    sliding_extreme(img, r, Extreme::Max)
}

/// Minimum over the `(2r+1)^2` reflected neighbourhood of every pixel.
pub fn min_filter(img: &Image, r: usize) -> Image {
    sliding_extreme(img, r, Extreme::Min)
}

/// Largest intensity spread (window max minus window min) over all
/// `(2W+1)^2` windows of `guide`.
///
/// This bounds `|guide(i - j) - guide(i)|` for every pixel `i` and offset
/// `j` in `[-W, W]^2`, which is the interval the range kernel must cover.
pub fn local_dynamic_range(guide: &Image, window_radius: usize) -> Result<f64> {
    if window_radius == 0 {
        return Err(invalid("window_radius", "must be at least 1"));
    }
    let hi = max_filter(guide, window_radius);
    let lo = min_filter(guide, window_radius);
    Ok(hi
        .pixels()
        .iter()
        .zip(lo.pixels())
        .map(|(a, b)| a - b)
        .fold(0.0, f64::max))
}
