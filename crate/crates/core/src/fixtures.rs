//! Synthetic test images, generated deterministically.

use crate::image::Image;

pub const CHECKER_SIZE: usize = 150;
pub const CHECKER_TILE: usize = 30;
pub const CHECKER_DARK: f64 = 0.0;
pub const CHECKER_LIGHT: f64 = 255.0;

/// 150x150 checkerboard, 5x5 tiles of 30 pixels alternating between 0 and 255.
pub fn checkerboard() -> Image {
    checkerboard_sized(CHECKER_SIZE, CHECKER_TILE)
}

pub fn checkerboard_sized(size: usize, tile: usize) -> Image {
    Image::from_fn(size, size, |x, y| {
        if (x / tile + y / tile).is_multiple_of(2) {
            CHECKER_DARK
        } else {
            CHECKER_LIGHT
        }
    })
}

pub const GRADIENT_SIZE: usize = 128;

/// 128x128 scene: a left-to-right intensity ramp crossed by a bright
/// rectangle, a dark disc and a thin vertical bar.
pub fn gradient_edges() -> Image {
    gradient_edges_sized(GRADIENT_SIZE)
}

/// The gradient-and-edges scene drawn at `size x size`; shapes scale with it.
pub fn gradient_edges_sized(size: usize) -> Image {
    let s = size as f64;
    Image::from_fn(size, size, |x, y| {
        let (u, v) = (x as f64 / s, y as f64 / s);
        let mut value = 30.0 + 150.0 * u;
        if (0.15..0.45).contains(&u) && (0.55..0.85).contains(&v) {
            value = 230.0;
        }
        let (du, dv) = (u - 0.68, v - 0.32);
        if du * du + dv * dv < 0.18 * 0.18 {
            value = 20.0;
        }
        if (0.86..0.9).contains(&u) {
            value = 245.0;
        }
        value
    })
}

/// Named fixtures, as accepted by the command line.
pub fn by_name(name: &str) -> Option<Image> {
    match name {
        "checkerboard" | "checker" => Some(checkerboard()),
        "gradient" | "gradient-edges" => Some(gradient_edges()),
        "bench" | "gradient-512" => Some(gradient_edges_sized(512)),
        _ => None,
    }
}

pub const NAMES: [&str; 3] = ["checkerboard", "gradient", "gradient-512"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checkerboard_layout() {
        let c = checkerboard();
        assert_eq!((c.width(), c.height()), (150, 150));
        assert_eq!(c.get(0, 0), 0.0);
        assert_eq!(c.get(29, 0), 0.0);
        assert_eq!(c.get(30, 0), 255.0);
        assert_eq!(c.get(30, 30), 0.0);
        // 13 dark tiles, 12 light
        assert!((c.mean() - 12.0 * 255.0 / 25.0).abs() < 1e-9);
    }

    #[test]
    fn gradient_scene_has_all_parts() {
        let g = gradient_edges();
        assert_eq!((g.width(), g.height()), (128, 128));
        assert_eq!(g.get(38, 90), 230.0);
        assert_eq!(g.get(87, 41), 20.0);
        assert_eq!(g.get(112, 5), 245.0);
        assert!(g.get(1, 1) < g.get(60, 1));
    }

    #[test]
    fn lookup_by_name() {
        for name in NAMES {
            assert!(by_name(name).is_some());
        }
        assert!(by_name("lena").is_none());
    }
}
