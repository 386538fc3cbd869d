use serde::{Deserialize, Serialize};

use super::{detail_layer, guided_filter, normalize_minmax, resize_bilinear, rgb_to_luma};
use super::{GuidedFilterParams, Image};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PreprocessParams {
    pub guided: GuidedFilterParams,
    /// Stabilizer in the detail-layer denominator.
    pub epsilon: f64,
    /// Side length of the square network input.
    pub output_size: usize,
}

impl PreprocessParams {
    /// Full-resolution settings: radius 10 on 1600x1200 captures, 224x224
    /// network input.
    pub fn paper() -> Self {
        PreprocessParams {
            guided: GuidedFilterParams::default(),
            epsilon: 1e-3,
            output_size: 224,
        }
    }

    /// Scaled-down settings for small synthetic images.
    pub fn desk() -> Self {
        PreprocessParams {
            guided: GuidedFilterParams {
                radius: 2,
                regularization: 0.01,
            },
            epsilon: 1e-3,
            output_size: 32,
        }
    }
}

/// Both network inputs plus the full-resolution detail luma that LBP
/// features are computed on.
#[derive(Debug, Clone, PartialEq)]
pub struct Preprocessed {
    /// Resized guided-filter output, 3 channels.
    pub low: Image,
    /// Resized normalized detail luma, 1 channel.
    pub high: Image,
    /// Normalized detail luma before resizing.
    pub detail: Image,
}

/// Runs filter -> divide -> luma -> normalize -> resize on a color image.
pub fn preprocess_full(img: &Image, params: &PreprocessParams) -> Result<Preprocessed> {
    img.require_channels(3, "preprocess")?;
    let smoothed = guided_filter(img, img, &params.guided)?;
    let detail = detail_layer(img, &smoothed, params.epsilon)?;
    let detail = normalize_minmax(&rgb_to_luma(&detail)?)?;
    let size = params.output_size;
    Ok(Preprocessed {
        low: resize_bilinear(&smoothed, size, size)?,
        high: resize_bilinear(&detail, size, size)?,
        detail,
    })
}

/// The `(low, high)` pair fed to the two network streams.
pub fn preprocess(img: &Image, params: &PreprocessParams) -> Result<(Image, Image)> {
    let out = preprocess_full(img, params)?;
    Ok((out.low, out.high))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_gray_gives_flat_outputs() {
        let img = Image::filled(40, 30, 3, 0.5).unwrap();
        let (low, high) = preprocess(&img, &PreprocessParams::desk()).unwrap();
        assert_eq!(low.dims(), (32, 32, 3));
        assert_eq!(high.dims(), (32, 32, 1));
        assert!(low.data().iter().all(|v| (v - 0.5).abs() < 1e-12));
        assert!(high.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn paper_preset_shapes() {
        let img = Image::from_fn(60, 50, 3, |y, x, c| ((y * 7 + x * 3 + c) % 11) as f64 / 10.0)
            .unwrap();
        let (low, high) = preprocess(&img, &PreprocessParams::paper()).unwrap();
        assert_eq!(low.dims(), (224, 224, 3));
        assert_eq!(high.dims(), (224, 224, 1));
    }

    #[test]
    fn grayscale_input_rejected() {
        let img = Image::filled(40, 30, 1, 0.5).unwrap();
        assert!(preprocess(&img, &PreprocessParams::desk()).is_err());
    }
}
