use serde::{Deserialize, Serialize};

use super::Image;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidedFilterParams {
    pub radius: usize,
    /// Regularization added to the window variance of the guide.
    pub regularization: f64,
}

impl Default for GuidedFilterParams {
    fn default() -> Self {
        GuidedFilterParams {
            radius: 10,
            regularization: 0.01,
        }
    }
}

impl GuidedFilterParams {
    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::Parameter("guided filter radius must be >= 1".into()));
        }
        if !(self.regularization >= 0.0) || !self.regularization.is_finite() {
            return Err(Error::Parameter(format!(
                "guided filter regularization must be finite and >= 0, got {}",
                self.regularization
            )));
        }
        Ok(())
    }
}

/// Summed-area table with a zero row and column prepended.
pub(super) struct Integral {
    width: usize,
    sums: Vec<f64>,
}

impl Integral {
    pub(super) fn new(values: &[f64], height: usize, width: usize) -> Self {
        let stride = width + 1;
        let mut sums = vec![0.0; (height + 1) * stride];
        for y in 0..height {
            let mut row = 0.0;
            for x in 0..width {
                row += values[y * width + x];
                sums[(y + 1) * stride + x + 1] = sums[y * stride + x + 1] + row;
            }
        }
        Integral { width, sums }
    }

    /// Sum over rows `y0..y1` and columns `x0..x1` (half-open).
    #[inline]
    pub(super) fn rect(&self, y0: usize, x0: usize, y1: usize, x1: usize) -> f64 {
        let s = self.width + 1;
        self.sums[y1 * s + x1] - self.sums[y0 * s + x1] - self.sums[y1 * s + x0]
            + self.sums[y0 * s + x0]
    }
}

fn check_radius(radius: usize, height: usize, width: usize) -> Result<()> {
    if radius < 1 {
        return Err(Error::Parameter("box radius must be >= 1".into()));
    }
    if radius >= height.min(width) {
        return Err(Error::DegenerateWindow {
            radius,
            height,
            width,
        });
    }
    Ok(())
}

/// Windowed mean over a plane, windows clipped to the image bounds.
fn box_mean_plane(values: &[f64], height: usize, width: usize, radius: usize) -> Vec<f64> {
    let integral = Integral::new(values, height, width);
    let mut out = Vec::with_capacity(height * width);
    for y in 0..height {
        let y0 = y.saturating_sub(radius);
        let y1 = (y + radius + 1).min(height);
        for x in 0..width {
            let x0 = x.saturating_sub(radius);
            let x1 = (x + radius + 1).min(width);
            let count = ((y1 - y0) * (x1 - x0)) as f64;
            out.push(integral.rect(y0, x0, y1, x1) / count);
        }
    }
    out
}

/// Mean of the `(2r+1)x(2r+1)` window around each pixel, clipped at the
/// borders and normalized by the in-bounds pixel count. Constant time per
/// pixel regardless of the radius.
pub fn box_mean(img: &Image, radius: usize) -> Result<Image> {
    img.require_channels(1, "box_mean")?;
    check_radius(radius, img.height(), img.width())?;
    let out = box_mean_plane(img.data(), img.height(), img.width(), radius);
    Ok(Image::from_raw(img.height(), img.width(), 1, out))
}

fn guided_plane(
    input: &[f64],
    guide: &[f64],
    height: usize,
    width: usize,
    params: &GuidedFilterParams,
) -> Vec<f64> {
    let r = params.radius;
    let mean = |v: &[f64]| box_mean_plane(v, height, width, r);
    let guide_sq: Vec<f64> = guide.iter().map(|g| g * g).collect();
    let cross: Vec<f64> = guide.iter().zip(input).map(|(g, p)| g * p).collect();

    let mean_g = mean(guide);
    let mean_p = mean(input);
    let corr_gg = mean(&guide_sq);
    let corr_gp = mean(&cross);

    let n = height * width;
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let var = (corr_gg[i] - mean_g[i] * mean_g[i]).max(0.0);
        let cov = corr_gp[i] - mean_g[i] * mean_p[i];
        let denom = var + params.regularization;
        // A flat guide window with no regularization carries no slope.
        let ak = if denom > 0.0 { cov / denom } else { 0.0 };
        a.push(ak);
        b.push(mean_p[i] - ak * mean_g[i]);
    }
    let mean_a = mean(&a);
    let mean_b = mean(&b);
    (0..n).map(|i| mean_a[i] * guide[i] + mean_b[i]).collect()
}

/// He et al.'s guided filter for a single-channel input and guide.
///
/// Three-channel inputs are filtered channel by channel, each channel serving
/// as its own guide, provided `guide` is the input itself. For a separate
/// guide both images must be single-channel.
pub fn guided_filter(input: &Image, guide: &Image, params: &GuidedFilterParams) -> Result<Image> {
    params.validate()?;
    input.same_dims(guide, "guided_filter input/guide mismatch")?;
    let (h, w, c) = input.dims();
    check_radius(params.radius, h, w)?;
    if c == 1 {
        let out = guided_plane(input.data(), guide.data(), h, w, params);
        return Ok(Image::from_raw(h, w, 1, out));
    }
    let planes = (0..c)
        .map(|ch| {
            let p = input.channel(ch)?;
            let g = guide.channel(ch)?;
            let out = guided_plane(p.data(), g.data(), h, w, params);
            Ok(Image::from_raw(h, w, 1, out))
        })
        .collect::<Result<Vec<_>>>()?;
    Image::from_planes(&planes)
}
