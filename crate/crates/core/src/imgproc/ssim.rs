use serde::{Deserialize, Serialize};

use super::filter::Integral;
use super::Image;
use crate::error::{Error, Result};

/// Structural-similarity settings. The window is uniform (box), not
/// Gaussian.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SsimParams {
    pub window: usize,
    pub k1: f64,
    pub k2: f64,
    pub dynamic_range: f64,
}

impl Default for SsimParams {
    fn default() -> Self {
        SsimParams {
            window: 11,
            k1: 0.01,
            k2: 0.03,
            dynamic_range: 1.0,
        }
    }
}

impl SsimParams {
    pub fn validate(&self) -> Result<()> {
        if self.window < 3 || self.window % 2 == 0 {
            return Err(Error::Parameter(format!(
                "SSIM window must be odd and >= 3, got {}",
                self.window
            )));
        }
        if !(self.k1 > 0.0 && self.k2 > 0.0) {
            return Err(Error::Parameter("SSIM k1 and k2 must be > 0".into()));
        }
        if !(self.dynamic_range > 0.0) {
            return Err(Error::Parameter("SSIM dynamic range must be > 0".into()));
        }
        Ok(())
    }
}

/// Mean SSIM over every full `window x window` position.
pub fn ssim(a: &Image, b: &Image, params: &SsimParams) -> Result<f64> {
    params.validate()?;
    a.require_channels(1, "ssim")?;
    a.same_dims(b, "ssim operands")?;
    let (h, w, _) = a.dims();
    let win = params.window;
    if h < win || w < win {
        return Err(Error::Shape(format!(
            "SSIM window {win} does not fit a {h}x{w} image"
        )));
    }
    let c1 = (params.k1 * params.dynamic_range).powi(2);
    let c2 = (params.k2 * params.dynamic_range).powi(2);

    let sq = |v: &[f64]| v.iter().map(|x| x * x).collect::<Vec<_>>();
    let ab: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    let sum_a = Integral::new(a.data(), h, w);
    let sum_b = Integral::new(b.data(), h, w);
    let sum_aa = Integral::new(&sq(a.data()), h, w);
    let sum_bb = Integral::new(&sq(b.data()), h, w);
    let sum_ab = Integral::new(&ab, h, w);

    let n = (win * win) as f64;
    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=(h - win) {
        for x0 in 0..=(w - win) {
            let (y1, x1) = (y0 + win, x0 + win);
            let mu_a = sum_a.rect(y0, x0, y1, x1) / n;
            let mu_b = sum_b.rect(y0, x0, y1, x1) / n;
            let var_a = sum_aa.rect(y0, x0, y1, x1) / n - mu_a * mu_a;
            let var_b = sum_bb.rect(y0, x0, y1, x1) / n - mu_b * mu_b;
            let cov = sum_ab.rect(y0, x0, y1, x1) / n - mu_a * mu_b;
            let num = (2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2);
            let den = (mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2);
            total += num / den;
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(-1.0, 1.0))
}

/// Keeps frame 0, then every frame whose SSIM against the last kept frame
/// falls below `threshold`.
pub fn select_frames(frames: &[Image], params: &SsimParams, threshold: f64) -> Result<Vec<usize>> {
    if !(threshold > -1.0 && threshold <= 1.0) {
        return Err(Error::Parameter(format!(
            "frame-selection threshold must lie in (-1, 1], got {threshold}"
        )));
    }
    let Some(first) = frames.first() else {
        return Ok(Vec::new());
    };
    let mut kept = vec![0];
    let mut last = first;
    for (i, frame) in frames.iter().enumerate().skip(1) {
        if ssim(frame, last, params)? < threshold {
            kept.push(i);
            last = frame;
        }
    }
    Ok(kept)
}
