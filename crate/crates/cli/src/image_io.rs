//! Grayscale image files. Binary PGM (8- and 16-bit) always; PNG with the
//! `png` feature. Intensities are mapped to `[0, 1]`.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use image::codecs::pnm::{GraymapHeader, PnmEncoder, SampleEncoding};
use image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageReader};
use inertial_fb::imaging::ImageGrid;

use crate::error::{CliError, Result};

pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let img = ImageReader::open(path)?.with_guessed_format()?.decode()?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let pixels: Vec<f64> = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw().into_iter().map(|v| v as f64 / 255.0).collect(),
        other => other.into_luma16().into_raw().into_iter().map(|v| v as f64 / 65535.0).collect(),
    };
    ImageGrid::new(w, h, pixels).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn quantize(v: f64, max: f64) -> f64 {
    (v.clamp(0.0, 1.0) * max).round()
}

/// Binary PGM with `maxval` 255 or 65535; values are clamped to `[0, 1]`.
pub fn write_pgm(path: &Path, img: &ImageGrid, sixteen_bit: bool) -> Result<()> {
    let (w, h) = (img.width as u32, img.height as u32);
    let out = BufWriter::new(File::create(path)?);
    if sixteen_bit {
        let header = GraymapHeader { encoding: SampleEncoding::Binary, width: w, height: h, maxwhite: 65535 };
        let bytes: Vec<u8> = img.pixels.iter().flat_map(|v| (quantize(*v, 65535.0) as u16).to_ne_bytes()).collect();
        PnmEncoder::new(out).with_header(header.into()).write_image(&bytes, w, h, ExtendedColorType::L16)?;
    } else {
        let header = GraymapHeader { encoding: SampleEncoding::Binary, width: w, height: h, maxwhite: 255 };
        let bytes: Vec<u8> = img.pixels.iter().map(|v| quantize(*v, 255.0) as u8).collect();
        PnmEncoder::new(out).with_header(header.into()).write_image(&bytes, w, h, ExtendedColorType::L8)?;
    }
    Ok(())
}

#[cfg(feature = "png")]
pub fn write_png(path: &Path, img: &ImageGrid) -> Result<()> {
    let buf: Vec<u16> = img.pixels.iter().map(|v| quantize(*v, 65535.0) as u16).collect();
    let out = image::ImageBuffer::<image::Luma<u16>, _>::from_raw(img.width as u32, img.height as u32, buf)
        .expect("buffer matches dimensions");
    out.save(path)?;
    Ok(())
}
