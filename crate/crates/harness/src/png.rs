//! 8-bit RGB PNG encoding of stimuli.

use std::io::Cursor;
use std::path::Path;

use image::{ExtendedColorType, ImageEncoder, ImageFormat};
use stereo_core::AnaglyphImage;

use crate::{HarnessError, Result};

pub fn encode(img: &AnaglyphImage) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    image::codecs::png::PngEncoder::new(&mut out)
        .write_image(img.as_bytes(), img.width() as u32, img.height() as u32, ExtendedColorType::Rgb8)
        .map_err(|e| HarnessError::Png(e.to_string()))?;
    Ok(out)
}

pub fn decode(bytes: &[u8]) -> Result<AnaglyphImage> {
    let rgb = image::load(Cursor::new(bytes), ImageFormat::Png)
        .map_err(|e| HarnessError::Png(e.to_string()))?
        .to_rgb8();
    let (w, h) = rgb.dimensions();
    Ok(AnaglyphImage::new(w as usize, h as usize, rgb.into_raw())?)
}

pub fn write(path: &Path, img: &AnaglyphImage) -> Result<()> {
    std::fs::write(path, encode(img)?).map_err(|e| HarnessError::io(path, e))
}

pub fn read(path: &Path) -> Result<AnaglyphImage> {
    decode(&std::fs::read(path).map_err(|e| HarnessError::io(path, e))?)
}
