use super::Image;
use crate::error::{Error, Result};

/// Y' weights for R, G, B.
pub const LUMA_COEFFS: [f64; 3] = [0.2989, 0.5870, 0.1140];

/// High-frequency layer: element-wise `original / (smoothed + epsilon)`.
pub fn detail_layer(original: &Image, smoothed: &Image, epsilon: f64) -> Result<Image> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::Parameter(format!(
            "detail-layer epsilon must be finite and > 0, got {epsilon}"
        )));
    }
    original.same_dims(smoothed, "detail_layer operands")?;
    // Guided-filter output can overshoot slightly below zero at strong
    // edges; the denominator is clamped so the layer stays finite and >= 0.
    let data = original
        .data()
        .iter()
        .zip(smoothed.data())
        .map(|(i, l)| i.max(0.0) / (l.max(0.0) + epsilon))
        .collect();
    let (h, w, c) = original.dims();
    Image::new(h, w, c, data)
}

pub fn rgb_to_luma(img: &Image) -> Result<Image> {
    img.require_channels(3, "rgb_to_luma")?;
    let data = img
        .data()
        .chunks_exact(3)
        .map(|px| LUMA_COEFFS[0] * px[0] + LUMA_COEFFS[1] * px[1] + LUMA_COEFFS[2] * px[2])
        .collect();
    Ok(Image::from_raw(img.height(), img.width(), 1, data))
}

/// Per-image min-max scaling to `[0, 1]`. A constant image maps to zeros.
pub fn normalize_minmax(img: &Image) -> Result<Image> {
    img.require_channels(1, "normalize_minmax")?;
    if img.data().is_empty() {
        return Err(Error::Shape("cannot normalize an empty image".into()));
    }
    let (lo, hi) = img
        .data()
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
            (lo.min(v), hi.max(v))
        });
    let range = hi - lo;
    let data = if range > 0.0 {
        img.data().iter().map(|v| (v - lo) / range).collect()
    } else {
        vec![0.0; img.data().len()]
    };
    Ok(Image::from_raw(img.height(), img.width(), 1, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn detail_of_constant_pair() {
        let img = Image::filled(3, 3, 3, 0.5).unwrap();
        let out = detail_layer(&img, &img, 1e-3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.5 / (0.5 + 1e-3)));
    }

    #[test]
    fn detail_with_zero_smoothed_is_finite() {
        let img = Image::filled(2, 2, 1, 0.25).unwrap();
        let zero = Image::filled(2, 2, 1, 0.0).unwrap();
        let out = detail_layer(&img, &zero, 1e-3).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.25 / 1e-3 && v.is_finite()));
    }

    #[test]
    fn detail_rejects_nonpositive_epsilon() {
        let img = Image::filled(2, 2, 1, 0.25).unwrap();
        assert!(matches!(detail_layer(&img, &img, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(detail_layer(&img, &img, -1.0), Err(Error::Parameter(_))));
    }

    #[test]
    fn luma_examples() {
        let white = Image::filled(1, 1, 3, 1.0).unwrap();
        assert!((rgb_to_luma(&white).unwrap().get(0, 0, 0) - 0.9999).abs() < 1e-12);
        let red = Image::new(1, 1, 3, vec![1.0, 0.0, 0.0]).unwrap();
        assert_eq!(rgb_to_luma(&red).unwrap().get(0, 0, 0), 0.2989);
        let gray = Image::filled(2, 2, 1, 0.3).unwrap();
        assert!(matches!(rgb_to_luma(&gray), Err(Error::Shape(_))));
    }

    #[test]
    fn minmax_examples() {
        let img = Image::new(2, 2, 1, vec![0.2, 0.6, 1.0, 0.2]).unwrap();
        let out = normalize_minmax(&img).unwrap();
        let expected = [0.0, 0.5, 1.0, 0.0];
        for (a, b) in out.data().iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        let flat = Image::filled(3, 2, 1, 0.7).unwrap();
        assert!(normalize_minmax(&flat).unwrap().data().iter().all(|&v| v == 0.0));
        let spanning = Image::new(1, 3, 1, vec![0.0, 0.25, 1.0]).unwrap();
        assert_eq!(normalize_minmax(&spanning).unwrap(), spanning);
    }
}
