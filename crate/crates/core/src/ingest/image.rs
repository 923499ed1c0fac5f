//! Center-crop / zero-pad resizing and per-channel normalization for RGB
//! pixel arrays, as expected by CLIP-style image embedders.

use crate::error::{Error, Result};

pub const CHANNEL_MEAN: [f64; 3] = [0.48145466, 0.4578275, 0.40821073];
pub const CHANNEL_STD: [f64; 3] = [0.26862954, 0.26130258, 0.27577711];

/// Decoded image, `height × width × 3`, stored row-major with interleaved channels.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    pub height: usize,
    pub width: usize,
    pub data: Vec<f64>,
}

impl Image {
    pub fn new(height: usize, width: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 {
            return Err(Error::invalid(format!(
                "image dimensions must be positive, got {height}x{width}"
            )));
        }
        if data.len() != height * width * 3 {
            return Err(Error::invalid(format!(
                "pixel buffer has {} values, expected {}",
                data.len(),
                height * width * 3
            )));
        }
        Ok(Image {
            height,
            width,
            data,
        })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Result<Self> {
        Self::new(height, width, vec![value; height * width * 3])
    }

    #[inline]
    pub fn pixel(&self, y: usize, x: usize) -> [f64; 3] {
        let o = (y * self.width + x) * 3;
        [self.data[o], self.data[o + 1], self.data[o + 2]]
    }
}

/// Where source index `i` of a length-`src` axis lands in a length-`dst` axis,
/// cropping or padding around the center (odd remainders go to the far side).
fn axis_offset(src: usize, dst: usize) -> isize {
    if src >= dst {
        -(((src - dst) / 2) as isize)
    } else {
        ((dst - src) / 2) as isize
    }
}

/// Resizes to `side × side` by center-cropping or symmetric zero-padding per
/// axis, rescales to [0,1] and normalizes each channel.
pub fn preprocess_image(img: &Image, side: usize) -> Result<Image> {
    if side == 0 || img.height == 0 || img.width == 0 {
        return Err(Error::invalid("image and target sizes must be positive"));
    }
    let dy = axis_offset(img.height, side);
    let dx = axis_offset(img.width, side);
    let mut data = Vec::with_capacity(side * side * 3);
    for y in 0..side {
        let sy = y as isize - dy;
        for x in 0..side {
            let sx = x as isize - dx;
            let inside = sy >= 0
                && sx >= 0
                && (sy as usize) < img.height
                && (sx as usize) < img.width;
            let px = if inside {
                img.pixel(sy as usize, sx as usize)
            } else {
                [0.0; 3]
            };
            for c in 0..3 {
                data.push((px[c] / 255.0 - CHANNEL_MEAN[c]) / CHANNEL_STD[c]);
            }
        }
    }
    Image::new(side, side, data)
}
