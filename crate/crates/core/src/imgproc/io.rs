//! Raster decoding and the float plane container.
//!
//! Plane files are little-endian:
//!
//! | bytes | field |
//! |-------|-------|
//! | 4     | magic `HPLN` |
//! | 4     | version (u32, currently 1) |
//! | 4     | height (u32) |
//! | 4     | width (u32) |
//! | 4     | channels (u32) |
//! | 4·h·w·c | samples as f32, row-major, channels interleaved |

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use super::Image;
use crate::error::{Error, Result};

pub const PLANE_MAGIC: &[u8; 4] = b"HPLN";
pub const PLANE_VERSION: u32 = 1;

/// Decodes an 8-bit PNG or JPEG into a 3-channel image scaled by 1/255.
pub fn load_rgb(path: &Path) -> Result<Image> {
    let decoded = image::open(path)?.to_rgb8();
    let (w, h) = decoded.dimensions();
    let data = decoded
        .into_raw()
        .into_iter()
        .map(|v| f64::from(v) / 255.0)
        .collect();
    Image::new(h as usize, w as usize, 3, data)
}

/// Quantizes each sample to 8 bits, the inverse of [`load_rgb`]'s scaling.
pub fn to_u8(img: &Image) -> Vec<u8> {
    img.data()
        .iter()
        .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect()
}

/// Writes a 1- or 3-channel image as an 8-bit PNG.
pub fn save_png(img: &Image, path: &Path) -> Result<()> {
    let (h, w, c) = img.dims();
    let bytes = to_u8(img);
    let color = if c == 3 {
        image::ExtendedColorType::Rgb8
    } else {
        image::ExtendedColorType::L8
    };
    image::save_buffer(path, &bytes, w as u32, h as u32, color)?;
    Ok(())
}

pub fn encode_plane(img: &Image) -> Vec<u8> {
    let (h, w, c) = img.dims();
    let mut out = Vec::with_capacity(20 + 4 * img.data().len());
    out.extend_from_slice(PLANE_MAGIC);
    for v in [PLANE_VERSION, h as u32, w as u32, c as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in img.data() {
        out.extend_from_slice(&(*v as f32).to_le_bytes());
    }
    out
}

pub fn decode_plane(bytes: &[u8], path: &Path) -> Result<Image> {
    let header = |i: usize| -> Result<u32> {
        let b = bytes
            .get(4 + 4 * i..8 + 4 * i)
            .ok_or_else(|| Error::format(path, "truncated header"))?;
        Ok(u32::from_le_bytes(b.try_into().unwrap()))
    };
    if bytes.len() < 20 || &bytes[..4] != PLANE_MAGIC {
        return Err(Error::format(path, "not a plane file (bad magic)"));
    }
    let version = header(0)?;
    if version != PLANE_VERSION {
        return Err(Error::format(path, format!("unsupported plane version {version}")));
    }
    let (h, w, c) = (header(1)? as usize, header(2)? as usize, header(3)? as usize);
    let payload = &bytes[20..];
    if payload.len() != 4 * h * w * c {
        return Err(Error::format(
            path,
            format!("expected {} payload bytes, found {}", 4 * h * w * c, payload.len()),
        ));
    }
    let data = payload
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    Image::new(h, w, c, data).map_err(|e| Error::format(path, e.to_string()))
}

pub fn write_plane(img: &Image, path: &Path) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    file.write_all(&encode_plane(img))
        .map_err(|e| Error::io(path, e))
}

pub fn read_plane(path: &Path) -> Result<Image> {
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode_plane(&bytes, path)
}
