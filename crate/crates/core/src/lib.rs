//! Bilateral denoising of grayscale images.
//!
//! The crate provides the standard bilateral filter together with its
//! oracle, iterated and box-guided ("improved") variants, computed either
//! directly or, for the box-guided variant, in constant time per pixel by
//! expanding the Gaussian range kernel into raised-cosine terms that are
//! each a plain Gaussian blur.

pub mod bilateral;
pub mod error;
pub mod experiment;
pub mod fast;
pub mod fixtures;
pub mod gaussian;
pub mod image;
pub mod kernel;
pub mod metrics;
pub mod noise;
pub mod pgm;
pub mod prefilter;

pub use error::{Error, Result};
pub use image::{BoundaryPolicy, ComplexImage, Image};
