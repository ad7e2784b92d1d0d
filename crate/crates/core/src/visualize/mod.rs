//! Whole-file renderings: grayscale, bit-class map, sliding entropy, and
//! the per-offset classification overlay.

pub mod image;
pub mod render;
pub mod scan;

pub use image::{read_ppm, write_image, Image, ImageFormat, Rgb};
pub use render::{
    render_bitimage, render_grayscale, render_structural_entropy, sliding_entropy, DEFAULT_WIDTH,
};
pub use scan::{render_classification, scan, Decision, ScanReport, Window};
