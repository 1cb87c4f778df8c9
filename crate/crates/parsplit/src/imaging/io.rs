//! Portable image I/O: binary PGM (P5, 8-bit) for inputs and outputs,
//! PFM (32-bit float, grayscale) for lossless intermediate dumps.
//!
//! PGM samples map linearly between `[0, 255]` and `[0, 1]`; writing
//! clamps to the unit interval and rounds to nearest.  PFM follows the
//! usual bottom-to-top row order with a negative scale marking
//! little-endian data.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::imaging::Image;

fn parse_err(path: &Path, what: &str) -> Error {
    Error::Parse(format!("{}: {what}", path.display()))
}

/// Reads ASCII header tokens (magic, dims, maxval), skipping whitespace
/// and `#` comments; returns the tokens and the offset of the raster.
fn header_tokens(data: &[u8], count: usize) -> Option<(Vec<String>, usize)> {
    let mut tokens = Vec::new();
    let mut i = 0;
    while tokens.len() < count && i < data.len() {
        while i < data.len() && (data[i].is_ascii_whitespace() || data[i] == b'#') {
            if data[i] == b'#' {
                while i < data.len() && data[i] != b'\n' {
                    i += 1;
                }
            } else {
                i += 1;
            }
        }
        let start = i;
        while i < data.len() && !data[i].is_ascii_whitespace() {
            i += 1;
        }
        if i > start {
            tokens.push(String::from_utf8_lossy(&data[start..i]).into_owned());
        }
    }
    // exactly one whitespace byte separates the header from the raster
    if tokens.len() == count && i < data.len() {
        Some((tokens, i + 1))
    } else {
        None
    }
}

/// Loads an 8-bit binary PGM into unit-range samples.
pub fn read_pgm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = fs::read(path)?;
    let (tokens, offset) =
        header_tokens(&data, 4).ok_or_else(|| parse_err(path, "truncated PGM header"))?;
    if tokens[0] != "P5" {
        return Err(parse_err(path, "not a binary PGM (P5)"));
    }
    let width: usize = tokens[1]
        .parse()
        .map_err(|_| parse_err(path, "bad width"))?;
    let height: usize = tokens[2]
        .parse()
        .map_err(|_| parse_err(path, "bad height"))?;
    let maxval: u32 = tokens[3]
        .parse()
        .map_err(|_| parse_err(path, "bad maxval"))?;
    if maxval == 0 || maxval > 255 {
        return Err(parse_err(path, "unsupported maxval (8-bit only)"));
    }
    let n = width * height;
    let raster = data
        .get(offset..offset + n)
        .ok_or_else(|| parse_err(path, "truncated raster"))?;
    // raster is row-major top-to-bottom; store column-major
    let mut pixels = vec![0.0; n];
    for i in 0..height {
        for j in 0..width {
            pixels[j * height + i] = raster[i * width + j] as f64 / maxval as f64;
        }
    }
    Image::new(width, height, pixels)
}

/// Writes an 8-bit binary PGM, clamping samples to `[0, 1]`.
pub fn write_pgm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let mut out = Vec::with_capacity(image.len() + 32);
    write!(out, "P5\n{} {}\n255\n", image.width, image.height)?;
    for i in 0..image.height {
        for j in 0..image.width {
            let v = image.get(i, j).clamp(0.0, 1.0);
            out.push((v * 255.0).round() as u8);
        }
    }
    fs::write(path, out)?;
    Ok(())
}

/// Loads a grayscale little-endian PFM.
pub fn read_pfm(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let data = fs::read(path)?;
    let (tokens, offset) =
        header_tokens(&data, 4).ok_or_else(|| parse_err(path, "truncated PFM header"))?;
    if tokens[0] != "Pf" {
        return Err(parse_err(path, "not a grayscale PFM (Pf)"));
    }
    let width: usize = tokens[1]
        .parse()
        .map_err(|_| parse_err(path, "bad width"))?;
    let height: usize = tokens[2]
        .parse()
        .map_err(|_| parse_err(path, "bad height"))?;
    let scale: f64 = tokens[3]
        .parse()
        .map_err(|_| parse_err(path, "bad scale"))?;
    if scale >= 0.0 {
        return Err(parse_err(path, "big-endian PFM unsupported"));
    }
    let n = width * height;
    let raster = data
        .get(offset..offset + 4 * n)
        .ok_or_else(|| parse_err(path, "truncated raster"))?;
    // PFM rows run bottom-to-top
    let mut pixels = vec![0.0; n];
    for row in 0..height {
        let i = height - 1 - row;
        for j in 0..width {
            let k = 4 * (row * width + j);
            let bits = [raster[k], raster[k + 1], raster[k + 2], raster[k + 3]];
            pixels[j * height + i] = f32::from_le_bytes(bits) as f64;
        }
    }
    Image::new(width, height, pixels)
}

/// Writes a grayscale little-endian PFM (lossless for f32 data).
pub fn write_pfm(path: impl AsRef<Path>, image: &Image) -> Result<()> {
    let mut out = Vec::with_capacity(4 * image.len() + 32);
    write!(out, "Pf\n{} {}\n-1.0\n", image.width, image.height)?;
    for row in 0..image.height {
        let i = image.height - 1 - row;
        for j in 0..image.width {
            out.extend_from_slice(&(image.get(i, j) as f32).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}
