//! Layered RGB overlays of rasters sharing one window.

use std::io::{self, Write};

use num_complex::Complex64;
use thiserror::Error;

use crate::pnm::write_ppm;
use crate::raster::{Raster, Window};

pub type Rgb = [u8; 3];

pub const GREEN: Rgb = [0, 128, 0];
pub const LIGHT_BLUE: Rgb = [120, 180, 230];
pub const DARK_BROWN: Rgb = [101, 67, 33];
pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("layer {0} has a different window from layer 0")]
    WindowMismatch(usize),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("png encoding: {0}")]
    Png(#[from] png::EncodingError),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub width: usize,
    pub height: usize,
    /// Row-major RGB triples.
    pub pixels: Vec<u8>,
}

impl Image {
    pub fn solid(width: usize, height: usize, color: Rgb) -> Self {
        Self { width, height, pixels: color.repeat(width * height) }
    }

    pub fn get(&self, i: usize, j: usize) -> Rgb {
        let k = 3 * (j * self.width + i);
        [self.pixels[k], self.pixels[k + 1], self.pixels[k + 2]]
    }

    pub fn set(&mut self, i: usize, j: usize, color: Rgb) {
        let k = 3 * (j * self.width + i);
        self.pixels[k..k + 3].copy_from_slice(&color);
    }

    /// Draws a `+` of 1-pixel lines centered on `at`, each arm spanning
    /// `fraction` of the window in its direction.
    pub fn cross(&mut self, window: &Window, at: Complex64, fraction: f64, color: Rgb) {
        let Some((ci, cj)) = window.pixel_of(at) else { return };
        let half_w = ((fraction * window.width as f64) / 2.0).round() as usize;
        let half_h = ((fraction * window.height as f64) / 2.0).round() as usize;
        for i in ci.saturating_sub(half_w)..=(ci + half_w).min(self.width - 1) {
            self.set(i, cj, color);
        }
        for j in cj.saturating_sub(half_h)..=(cj + half_h).min(self.height - 1) {
            self.set(ci, j, color);
        }
    }

    pub fn write_ppm(&self, out: impl Write) -> io::Result<()> {
        write_ppm(self.width, self.height, &self.pixels, out)
    }

    pub fn write_png(&self, out: impl Write) -> Result<(), RenderError> {
        let mut encoder = png::Encoder::new(out, self.width as u32, self.height as u32);
        encoder.set_color(png::ColorType::Rgb);
        encoder.set_depth(png::BitDepth::Eight);
        let mut writer = encoder.write_header()?;
        writer.write_image_data(&self.pixels)?;
        writer.finish()?;
        Ok(())
    }
}

/// Paints each layer's Inside pixels over the background, in order.
/// With no layers the result is `None`, since there is no window to size it.
pub fn render_overlay(layers: &[(&Raster, Rgb)], background: Rgb) -> Result<Option<Image>, RenderError> {
    let Some((first, _)) = layers.first() else { return Ok(None) };
    let window = first.window();
    if let Some(k) = layers.iter().position(|(r, _)| r.window() != window) {
        return Err(RenderError::WindowMismatch(k));
    }
    let mut image = Image::solid(window.width, window.height, background);
    for (raster, color) in layers {
        for (k, &cell) in raster.cells().iter().enumerate() {
            if cell == crate::raster::INSIDE {
                image.pixels[3 * k..3 * k + 3].copy_from_slice(color);
            }
        }
    }
    Ok(Some(image))
}
