use super::image::{Image, Rgb, BLACK, WHITE};
use crate::classifiers::entropy::entropy_from_histogram;
use crate::error::{Error, Result};

pub const DEFAULT_WIDTH: usize = 128;
pub const LIGHT_BLUE: Rgb = [173, 216, 230];
pub const RED: Rgb = [255, 0, 0];
pub const GREEN: Rgb = [0, 255, 0];
pub const GRAY: Rgb = [128, 128, 128];

/// One gray pixel per byte.
pub fn render_grayscale(file: &[u8], width: usize) -> Result<Image> {
    Image::from_colors(width, file.len(), file.iter().map(|&v| [v, v, v]))
}

pub fn bit_color(v: u8) -> Rgb {
    match v {
        0x00 => WHITE,
        0x01..=0x1F => LIGHT_BLUE,
        0x20..=0x7F => RED,
        0x80..=0xFF => BLACK,
    }
}

/// Four-color byte class map: null, control, ASCII, high.
pub fn render_bitimage(file: &[u8], width: usize) -> Result<Image> {
    Image::from_colors(width, file.len(), file.iter().map(|&v| bit_color(v)))
}

/// Entropy rate of every `window`-byte span at each offset, in order.
pub fn sliding_entropy(file: &[u8], window: usize) -> Result<Vec<f64>> {
    if window == 0 || file.len() < window {
        return Err(Error::TooShort {
            len: file.len(),
            window,
        });
    }
    let mut hist = [0u32; 256];
    for &b in &file[..window] {
        hist[b as usize] += 1;
    }
    let mut out = Vec::with_capacity(file.len() - window + 1);
    out.push(entropy_from_histogram(&hist, window));
    for o in 1..=file.len() - window {
        hist[file[o - 1] as usize] -= 1;
        hist[file[o + window - 1] as usize] += 1;
        out.push(entropy_from_histogram(&hist, window));
    }
    Ok(out)
}

/// One pixel per window offset (shift 1), gray level `round(255 * H)`.
pub fn render_structural_entropy(file: &[u8], window: usize, width: usize) -> Result<Image> {
    let h = sliding_entropy(file, window)?;
    Image::from_colors(
        width,
        h.len(),
        h.iter().map(|&h| {
            let g = (255.0 * h).round() as u8;
            [g, g, g]
        }),
    )
}
