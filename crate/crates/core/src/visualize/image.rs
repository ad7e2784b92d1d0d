use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

pub type Rgb = [u8; 3];

pub const BLACK: Rgb = [0, 0, 0];
pub const WHITE: Rgb = [255, 255, 255];

/// Row-major 8-bit RGB raster.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
}

impl Image {
    /// `pixels` holds `width * height` RGB triples.
    pub fn new(width: usize, height: usize, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!("image dimensions {width}x{height}")));
        }
        if pixels.len() != width * height * 3 {
            return Err(Error::Shape {
                op: "image",
                expected: vec![height, width, 3],
                actual: vec![pixels.len()],
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Lays `colors` out row-major at `width` pixels per row, padding the
    /// last row with black.
    pub fn from_colors<I>(width: usize, count: usize, colors: I) -> Result<Self>
    where
        I: IntoIterator<Item = Rgb>,
    {
        if width == 0 {
            return Err(Error::Config("image width must be positive".into()));
        }
        if count == 0 {
            return Err(Error::Empty("image contents"));
        }
        let height = count.div_ceil(width);
        let mut pixels = Vec::with_capacity(width * height * 3);
        for c in colors.into_iter().take(count) {
            pixels.extend_from_slice(&c);
        }
        pixels.resize(width * height * 3, 0);
        Self::new(width, height, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        let i = (y * self.width + x) * 3;
        [self.pixels[i], self.pixels[i + 1], self.pixels[i + 2]]
    }

    /// Pixel at row-major index `i`.
    pub fn nth(&self, i: usize) -> Rgb {
        self.pixel(i % self.width, i / self.width)
    }

    /// Binary PPM: `P6\n<w> <h>\n255\n` then raw RGB.
    pub fn write_ppm<W: Write>(&self, mut w: W) -> Result<()> {
        write!(w, "P6\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.pixels)?;
        Ok(())
    }

    /// Reads binary PPM with maxval 255. Comments are accepted in the header.
    pub fn read_ppm<R: Read>(r: R) -> Result<Self> {
        let mut r = BufReader::new(r);
        let mut fields = Vec::new();
        while fields.len() < 4 {
            let mut line = String::new();
            if r.read_line(&mut line)? == 0 {
                return Err(Error::Config("truncated PPM header".into()));
            }
            let line = line.split('#').next().unwrap_or("");
            fields.extend(line.split_whitespace().map(str::to_owned));
        }
        if fields[0] != "P6" || fields.len() != 4 {
            return Err(Error::Config("not a binary PPM".into()));
        }
        let num = |s: &str| usize::from_str(s).map_err(|_| Error::Config(format!("bad PPM field {s:?}")));
        let (w, h, max) = (num(&fields[1])?, num(&fields[2])?, num(&fields[3])?);
        if max != 255 {
            return Err(Error::Config(format!("unsupported PPM maxval {max}")));
        }
        let mut pixels = vec![0u8; w * h * 3];
        r.read_exact(&mut pixels)?;
        Self::new(w, h, pixels)
    }

    pub fn write_png<W: Write>(&self, w: W) -> Result<()> {
        let png_err = |e: png::EncodingError| Error::Png(e.to_string());
        let mut enc = png::Encoder::new(w, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgb);
        enc.set_depth(png::BitDepth::Eight);
        let mut writer = enc.write_header().map_err(png_err)?;
        writer.write_image_data(&self.pixels).map_err(png_err)?;
        writer.finish().map_err(png_err)?;
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ImageFormat {
    #[default]
    Ppm,
    Png,
}

impl FromStr for ImageFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ppm" => Ok(ImageFormat::Ppm),
            "png" => Ok(ImageFormat::Png),
            _ => Err(Error::Config(format!("unknown image format {s:?}"))),
        }
    }
}

impl ImageFormat {
    pub fn extension(self) -> &'static str {
        match self {
            ImageFormat::Ppm => "ppm",
            ImageFormat::Png => "png",
        }
    }
}

pub fn write_image(img: &Image, path: &Path, format: ImageFormat) -> Result<()> {
    let file = File::create(path).map_err(Error::at_path(path))?;
    let mut w = BufWriter::new(file);
    match format {
        ImageFormat::Ppm => img.write_ppm(&mut w)?,
        ImageFormat::Png => img.write_png(&mut w)?,
    }
    w.flush().map_err(Error::at_path(path))?;
    Ok(())
}

pub fn read_ppm(path: &Path) -> Result<Image> {
    Image::read_ppm(File::open(path).map_err(Error::at_path(path))?)
}
