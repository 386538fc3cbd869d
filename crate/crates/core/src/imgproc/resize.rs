use super::Image;
use crate::error::{Error, Result};

/// Source coordinate and blend weight for one output index under
/// half-pixel center alignment.
fn source_taps(out_len: usize, in_len: usize) -> Vec<(usize, usize, f64)> {
    let scale = in_len as f64 / out_len as f64;
    (0..out_len)
        .map(|o| {
            let src = ((o as f64 + 0.5) * scale - 0.5).clamp(0.0, (in_len - 1) as f64);
            let lo = src.floor() as usize;
            let hi = (lo + 1).min(in_len - 1);
            (lo, hi, src - lo as f64)
        })
        .collect()
}

/// Bilinear resampling with pixel centers at half-integer coordinates.
pub fn resize_bilinear(img: &Image, out_h: usize, out_w: usize) -> Result<Image> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::Parameter(format!(
            "resize target must be non-empty, got {out_h}x{out_w}"
        )));
    }
    let (h, w, c) = img.dims();
    if h == 0 || w == 0 {
        return Err(Error::Shape("cannot resize an empty image".into()));
    }
    if (h, w) == (out_h, out_w) {
        return Ok(img.clone());
    }
    let rows = source_taps(out_h, h);
    let cols = source_taps(out_w, w);
    let mut data = Vec::with_capacity(out_h * out_w * c);
    for &(y0, y1, fy) in &rows {
        for &(x0, x1, fx) in &cols {
            for ch in 0..c {
                let top = img.get(y0, x0, ch) * (1.0 - fx) + img.get(y0, x1, ch) * fx;
                let bottom = img.get(y1, x0, ch) * (1.0 - fx) + img.get(y1, x1, ch) * fx;
                data.push(top * (1.0 - fy) + bottom * fy);
            }
        }
    }
    Ok(Image::from_raw(out_h, out_w, c, data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_resize() {
        let img = Image::from_fn(5, 4, 3, |y, x, c| (y * 12 + x * 3 + c) as f64 / 60.0).unwrap();
        assert_eq!(resize_bilinear(&img, 5, 4).unwrap(), img);
    }

    #[test]
    fn two_by_two_to_one() {
        let img = Image::new(2, 2, 1, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let out = resize_bilinear(&img, 1, 1).unwrap();
        assert!((out.get(0, 0, 0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn gradient_downsample_matches_formula() {
        // 4 -> 2 maps output i to source 2i + 0.5
        let img = Image::from_fn(4, 4, 1, |y, x, _| (y * 4 + x) as f64 / 15.0).unwrap();
        let out = resize_bilinear(&img, 2, 2).unwrap();
        for oy in 0..2 {
            for ox in 0..2 {
                let sy = 2.0 * oy as f64 + 0.5;
                let sx = 2.0 * ox as f64 + 0.5;
                let expected = (sy * 4.0 + sx) / 15.0;
                assert!((out.get(oy, ox, 0) - expected).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn zero_target_rejected() {
        let img = Image::filled(3, 3, 1, 0.1).unwrap();
        assert!(matches!(resize_bilinear(&img, 0, 3), Err(Error::Parameter(_))));
    }
}
