//! Local binary patterns with circular, bilinearly interpolated sampling.

use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use super::{FeatureSource, FeatureVector};
use crate::error::{Error, Result};
use crate::imgproc::Image;

/// Number of bins in the uniform-pattern histogram: 58 uniform codes plus one
/// bin shared by every non-uniform code.
pub const UNIFORM_BINS: usize = 59;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    /// Off-grid neighbors are blended from the four surrounding pixels.
    Bilinear,
    /// Off-grid neighbors snap to the nearest pixel.
    Nearest,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbpParams {
    pub neighbors: usize,
    pub radius: f64,
    pub uniform: bool,
    pub interpolation: Interpolation,
}

impl Default for LbpParams {
    fn default() -> Self {
        LbpParams {
            neighbors: 8,
            radius: 1.0,
            uniform: true,
            interpolation: Interpolation::Bilinear,
        }
    }
}

impl LbpParams {
    fn validate(&self) -> Result<()> {
        if self.neighbors != 8 {
            return Err(Error::Parameter(format!(
                "only 8-neighbor patterns are supported, got {}",
                self.neighbors
            )));
        }
        if !(self.radius >= 1.0) || !self.radius.is_finite() {
            return Err(Error::Parameter(format!(
                "LBP radius must be >= 1, got {}",
                self.radius
            )));
        }
        Ok(())
    }

    /// Pixels within this distance of a border have no complete neighborhood.
    fn margin(&self) -> usize {
        self.radius.ceil() as usize
    }

    /// Neighbor offsets `(dx, dy)` in image coordinates (y grows downward),
    /// starting east and turning counter-clockwise.
    fn offsets(&self) -> [(f64, f64); 8] {
        let snap = |v: f64| (v * 1e9).round() / 1e9;
        let mut out = [(0.0, 0.0); 8];
        for (i, o) in out.iter_mut().enumerate() {
            let angle = 2.0 * PI * i as f64 / 8.0;
            let dx = snap(self.radius * angle.cos());
            let dy = snap(-self.radius * angle.sin());
            *o = match self.interpolation {
                Interpolation::Bilinear => (dx, dy),
                Interpolation::Nearest => (dx.round(), dy.round()),
            };
        }
        out
    }
}

/// Sample minus `center` at a fractional position. Written in difference form
/// so a flat neighborhood yields exactly zero.
fn offset_from_center(img: &Image, x: f64, y: f64, center: f64) -> f64 {
    let (x0, y0) = (x.floor(), y.floor());
    let (fx, fy) = (x - x0, y - y0);
    let (x0, y0) = (x0 as usize, y0 as usize);
    let p00 = img.get(y0, x0, 0);
    if fx == 0.0 && fy == 0.0 {
        return p00 - center;
    }
    let x1 = (x0 + 1).min(img.width() - 1);
    let y1 = (y0 + 1).min(img.height() - 1);
    let p10 = img.get(y0, x1, 0);
    let p01 = img.get(y1, x0, 0);
    let p11 = img.get(y1, x1, 0);
    (p00 - center) + fx * (p10 - p00) + fy * (p01 - p00) + fx * fy * (p11 - p10 - p01 + p00)
}

fn code_unchecked(img: &Image, x: usize, y: usize, offsets: &[(f64, f64); 8]) -> u8 {
    let center = img.get(y, x, 0);
    let mut code = 0u8;
    for (bit, (dx, dy)) in offsets.iter().enumerate() {
        let d = offset_from_center(img, x as f64 + dx, y as f64 + dy, center);
        if d >= 0.0 {
            code |= 1 << bit;
        }
    }
    code
}

/// 8-bit pattern at `(x, y)`: bit `i` is set when neighbor `i` is at least as
/// bright as the center. Bit 0 (least significant) is the east neighbor.
pub fn lbp_code(img: &Image, x: usize, y: usize, params: &LbpParams) -> Result<u8> {
    params.validate()?;
    img.require_channels(1, "lbp_code")?;
    let m = params.margin();
    if x < m || y < m || x + m >= img.width() || y + m >= img.height() {
        return Err(Error::OutOfDomain {
            x,
            y,
            reason: format!("needs {m} pixel(s) of margin on every side"),
        });
    }
    Ok(code_unchecked(img, x, y, &params.offsets()))
}

fn transitions(code: u8) -> u32 {
    (code ^ code.rotate_right(1)).count_ones()
}

/// Histogram bin of `code` in the uniform mapping: uniform patterns (at most
/// two circular 0/1 transitions) take bins 0..58 in increasing code order;
/// everything else lands in bin 58.
pub fn uniform_bin(code: u8) -> usize {
    static TABLE: OnceLock<[u8; 256]> = OnceLock::new();
    let table = TABLE.get_or_init(|| {
        let mut table = [0u8; 256];
        let mut next = 0u8;
        for c in 0..=255u8 {
            if transitions(c) <= 2 {
                table[c as usize] = next;
                next += 1;
            } else {
                table[c as usize] = (UNIFORM_BINS - 1) as u8;
            }
        }
        debug_assert_eq!(next as usize, UNIFORM_BINS - 1);
        table
    });
    table[code as usize] as usize
}

/// L1-normalized pattern histogram over every pixel with a full
/// neighborhood: 59 bins in uniform mode, 256 otherwise.
pub fn lbp_histogram(img: &Image, params: &LbpParams) -> Result<FeatureVector> {
    params.validate()?;
    img.require_channels(1, "lbp_histogram")?;
    let m = params.margin();
    if img.width() <= 2 * m + 1 || img.height() <= 2 * m + 1 {
        return Err(Error::Shape(format!(
            "image {}x{} too small for LBP radius {}",
            img.height(),
            img.width(),
            params.radius
        )));
    }
    let bins = if params.uniform { UNIFORM_BINS } else { 256 };
    let mut counts = vec![0u64; bins];
    let offsets = params.offsets();
    for y in m..img.height() - m {
        for x in m..img.width() - m {
            let code = code_unchecked(img, x, y, &offsets);
            let bin = if params.uniform {
                uniform_bin(code)
            } else {
                code as usize
            };
            counts[bin] += 1;
        }
    }
    let total: u64 = counts.iter().sum();
    let values = counts
        .into_iter()
        .map(|c| c as f64 / total as f64)
        .collect();
    FeatureVector::new(FeatureSource::Lbp, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params() -> LbpParams {
        LbpParams::default()
    }

    #[test]
    fn flat_image_sets_every_bit() {
        let img = Image::filled(5, 5, 1, 0.3).unwrap();
        assert_eq!(lbp_code(&img, 2, 2, &params()).unwrap(), 255);
    }

    #[test]
    fn east_and_northeast_brighter() {
        // rows top to bottom; center (1,1) = 5, east and north-east = 6
        let img = Image::new(3, 3, 1, vec![4., 4., 6., 4., 5., 6., 4., 4., 4.]).unwrap();
        assert_eq!(lbp_code(&img, 1, 1, &params()).unwrap(), 3);
    }

    #[test]
    fn bright_center_clears_every_bit() {
        let img = Image::new(3, 3, 1, vec![1., 2., 3., 4., 9., 4., 3., 2., 1.]).unwrap();
        assert_eq!(lbp_code(&img, 1, 1, &params()).unwrap(), 0);
    }

    #[test]
    fn border_pixel_is_out_of_domain() {
        let img = Image::filled(5, 5, 1, 0.3).unwrap();
        assert!(matches!(lbp_code(&img, 0, 2, &params()), Err(Error::OutOfDomain { .. })));
        assert!(matches!(lbp_code(&img, 2, 4, &params()), Err(Error::OutOfDomain { .. })));
    }

    #[test]
    fn uniform_table_has_58_uniform_codes() {
        let uniform = (0..=255u8).filter(|&c| uniform_bin(c) < UNIFORM_BINS - 1).count();
        assert_eq!(uniform, 58);
        assert_eq!(uniform_bin(0), 0);
        assert_eq!(uniform_bin(255), 57);
        assert_eq!(uniform_bin(0b0101_0101), 58);
    }

    #[test]
    fn flat_histogram_is_single_bin() {
        let img = Image::filled(6, 7, 1, 0.8).unwrap();
        let h = lbp_histogram(&img, &params()).unwrap();
        assert_eq!(h.values().len(), 59);
        assert_eq!(h.values()[uniform_bin(255)], 1.0);
        assert_eq!(h.values().iter().filter(|&&v| v > 0.0).count(), 1);
    }

    #[test]
    fn tiny_image_rejected() {
        let img = Image::filled(3, 8, 1, 0.8).unwrap();
        assert!(matches!(lbp_histogram(&img, &params()), Err(Error::Shape(_))));
    }
}
