use alloc::vec::Vec;

use crate::tensor::Tensor;

/// 8-bit raster, row-major, channels interleaved.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RasterError {
    #[error("image dimensions must be at least 1x1, got {width}x{height}")]
    EmptyImage { width: usize, height: usize },
    #[error("unsupported channel count {0}, expected 1 or 3")]
    Channels(usize),
    #[error("expected {expected} samples, got {actual}")]
    SampleCount { expected: usize, actual: usize },
}

impl RasterImage {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<u8>) -> Result<Self, RasterError> {
        if width == 0 || height == 0 {
            return Err(RasterError::EmptyImage { width, height });
        }
        if channels != 1 && channels != 3 {
            return Err(RasterError::Channels(channels));
        }
        let expected = width * height * channels;
        if pixels.len() != expected {
            return Err(RasterError::SampleCount { expected, actual: pixels.len() });
        }
        Ok(Self { width, height, channels, pixels })
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: u8) -> Result<Self, RasterError> {
        Self::new(width, height, channels, alloc::vec![value; width * height * channels])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn get(&self, x: usize, y: usize, c: usize) -> u8 {
        self.pixels[(y * self.width + x) * self.channels + c]
    }

    /// Raw sample values (0..=255) as an `H x W x C` tensor over the
    /// 0-based half-open window `[y0, y1) x [x0, x1)`.
    pub fn window_tensor(&self, x0: usize, y0: usize, x1: usize, y1: usize) -> Tensor {
        let (w, h, c) = (x1 - x0, y1 - y0, self.channels);
        let mut data = Vec::with_capacity(w * h * c);
        for y in y0..y1 {
            let row = &self.pixels[(y * self.width + x0) * c..(y * self.width + x1) * c];
            data.extend(row.iter().map(|&v| f64::from(v)));
        }
        Tensor::from_vec(&[h, w, c], data).expect("window size matches")
    }

    pub fn to_tensor(&self) -> Tensor {
        self.window_tensor(0, 0, self.width, self.height)
    }

    /// Quantizes an `H x W x C` tensor of values in `[0, 1]` to 8 bits (round half up, clamped).
    pub fn from_unit_tensor(t: &Tensor) -> Result<Self, RasterError> {
        let &[h, w, c] = t.shape() else {
            return Err(RasterError::SampleCount { expected: 3, actual: t.shape().len() });
        };
        let pixels = t.data().iter().map(|&v| libm::floor(v.clamp(0.0, 1.0) * 255.0 + 0.5) as u8).collect();
        Self::new(w, h, c, pixels)
    }
}

/// Luma conversion `0.299 R + 0.587 G + 0.114 B`, rounded half up.
/// Single-channel images are returned unchanged.
pub fn to_grayscale(img: &RasterImage) -> RasterImage {
    if img.channels == 1 {
        return img.clone();
    }
    let pixels = img
        .pixels
        .chunks_exact(3)
        .map(|px| {
            let weighted = 299 * u32::from(px[0]) + 587 * u32::from(px[1]) + 114 * u32::from(px[2]);
            ((weighted + 500) / 1000) as u8
        })
        .collect();
    RasterImage { width: img.width, height: img.height, channels: 1, pixels }
}
