//! Raster input. The format is sniffed from the leading bytes: PNG
//! (8/16-bit grayscale, 8-bit RGB), TIFF (same sample types; a multi-page
//! file becomes a `(z, y, x)` volume with one slice per page) or a tensor
//! file. Sample values are kept as stored, without rescaling.

use std::io::Cursor;
use std::path::Path;

use image::{DynamicImage, ImageFormat};
use tiff::decoder::{Decoder, DecodingResult};
use tiff::ColorType;

use crate::error::{Error, Result};
use crate::grid::Grid;

use super::{read_bytes, Tensor, MAGIC};

const PNG_SIG: &[u8] = b"\x89PNG\r\n\x1a\n";

pub fn read_image(path: &Path) -> Result<Grid> {
    decode_image(&read_bytes(path)?, path)
}

pub fn decode_image(bytes: &[u8], path: &Path) -> Result<Grid> {
    if bytes.starts_with(MAGIC) {
        Tensor::decode(bytes, path)?.to_grid(path)
    } else if bytes.starts_with(PNG_SIG) {
        decode_png(bytes, path)
    } else if bytes.starts_with(b"II*\0") || bytes.starts_with(b"MM\0*") {
        decode_tiff(bytes, path)
    } else {
        Err(Error::format(
            path,
            "unrecognized image format (expected PNG, TIFF or tensor file)",
        ))
    }
}

fn decode_png(bytes: &[u8], path: &Path) -> Result<Grid> {
    let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)
        .map_err(|e| Error::format(path, format!("PNG decode failed: {e}")))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let (channels, data): (usize, Vec<f64>) = match img {
        DynamicImage::ImageLuma8(b) => (1, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageLuma16(b) => (1, b.into_raw().into_iter().map(f64::from).collect()),
        DynamicImage::ImageRgb8(b) => (3, b.into_raw().into_iter().map(f64::from).collect()),
        other => {
            return Err(Error::format(
                path,
                format!("unsupported PNG pixel type {:?}", other.color()),
            ))
        }
    };
    Grid::new(&[h, w], channels, data).map_err(|e| Error::format(path, e.to_string()))
}

fn decode_tiff(bytes: &[u8], path: &Path) -> Result<Grid> {
    let fail = |m: String| Error::format(path, m);
    let mut dec = Decoder::new(Cursor::new(bytes)).map_err(|e| fail(format!("TIFF: {e}")))?;
    let mut pages = 0usize;
    let mut dims = None;
    let mut data = Vec::new();
    loop {
        let (w, h) = dec.dimensions().map_err(|e| fail(format!("TIFF: {e}")))?;
        let ch = match dec.colortype().map_err(|e| fail(format!("TIFF: {e}")))? {
            ColorType::Gray(8) | ColorType::Gray(16) => 1,
            ColorType::RGB(8) => 3,
            other => return Err(fail(format!("unsupported TIFF sample type {other:?}"))),
        };
        if *dims.get_or_insert((w, h, ch)) != (w, h, ch) {
            return Err(fail(format!(
                "page {pages} is {w}x{h}x{ch}, earlier pages differ"
            )));
        }
        match dec
            .read_image()
            .map_err(|e| fail(format!("TIFF page {pages}: {e}")))?
        {
            DecodingResult::U8(v) => data.extend(v.into_iter().map(f64::from)),
            DecodingResult::U16(v) => data.extend(v.into_iter().map(f64::from)),
            _ => {
                return Err(fail(format!(
                    "unsupported TIFF sample format on page {pages}"
                )))
            }
        }
        pages += 1;
        if !dec.more_images() {
            break;
        }
        dec.next_image().map_err(|e| fail(format!("TIFF: {e}")))?;
    }
    let (w, h, channels) = dims.expect("at least one page");
    let shape = if pages == 1 {
        vec![h as usize, w as usize]
    } else {
        vec![pages, h as usize, w as usize]
    };
    Grid::new(&shape, channels, data).map_err(|e| Error::format(path, e.to_string()))
}
