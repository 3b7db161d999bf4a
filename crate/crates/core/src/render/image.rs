use std::io::Write;
use std::path::Path;

use crate::error::{precondition, Error, Result};

pub type Rgb = [u8; 3];

/// 8-bit RGB raster, rows top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    width: usize,
    height: usize,
    pixels: Vec<Rgb>,
}

impl Image {
    pub fn new(width: usize, height: usize, background: Rgb) -> Result<Self> {
        if width == 0 || height == 0 {
            return precondition(format!("image size must be positive, got {width}x{height}"));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![background; width * height],
        })
    }

    pub(crate) fn from_pixels(width: usize, height: usize, pixels: Vec<Rgb>) -> Self {
        debug_assert_eq!(pixels.len(), width * height);
        Self { width, height, pixels }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[Rgb] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, c: Rgb) {
        self.pixels[y * self.width + x] = c;
    }

    /// Binary PPM (P6).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.reserve(self.pixels.len() * 3);
        for p in &self.pixels {
            out.extend_from_slice(p);
        }
        out
    }

    pub fn to_png(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        {
            let mut enc = png::Encoder::new(&mut buf, self.width as u32, self.height as u32);
            enc.set_color(png::ColorType::Rgb);
            enc.set_depth(png::BitDepth::Eight);
            let mut w = enc.write_header().map_err(|e| Error::Io(e.to_string()))?;
            let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
            w.write_image_data(&flat).map_err(|e| Error::Io(e.to_string()))?;
        }
        Ok(buf)
    }

    /// Writes PNG or PPM depending on the extension (PPM unless `.png`).
    pub fn save(&self, path: &Path) -> Result<()> {
        let bytes = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => self.to_png()?,
            _ => self.to_ppm(),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    /// Pixels differing from `other` by more than `tol` in some channel.
    pub fn count_differences(&self, other: &Image, tol: u8) -> usize {
        assert_eq!((self.width, self.height), (other.width, other.height));
        self.pixels
            .iter()
            .zip(&other.pixels)
            .filter(|(a, b)| (0..3).any(|k| a[k].abs_diff(b[k]) > tol))
            .count()
    }
}

/// Rec. 601 luma.
pub fn luminance(c: Rgb) -> f64 {
    0.299 * c[0] as f64 + 0.587 * c[1] as f64 + 0.114 * c[2] as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_header_and_size() {
        let mut img = Image::new(3, 2, [0, 0, 0]).unwrap();
        img.set(2, 1, [255, 10, 20]);
        let ppm = img.to_ppm();
        assert!(ppm.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(ppm.len(), 11 + 18);
        assert_eq!(&ppm[ppm.len() - 3..], &[255, 10, 20]);
        assert!(Image::new(0, 2, [0; 3]).is_err());
    }

    #[test]
    fn png_signature() {
        let img = Image::new(4, 4, [1, 2, 3]).unwrap();
        let png = img.to_png().unwrap();
        assert_eq!(&png[..8], &[137, 80, 78, 71, 13, 10, 26, 10]);
    }
}
