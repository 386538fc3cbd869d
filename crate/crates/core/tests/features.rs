use std::path::Path;

use handid::features::{
    lbp_code, lbp_histogram, read_feature_csv, uniform_bin, write_feature_csv, FeatureSource, FeatureVector,
    Interpolation, LbpParams, UNIFORM_BINS,
};
use handid::imgproc::Image;
use handid::Error;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_image(h: usize, w: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Image::from_fn(h, w, 1, |_, _, _| rng.random::<f64>()).unwrap()
}

fn raw(uniform: bool) -> LbpParams {
    LbpParams {
        uniform,
        ..LbpParams::default()
    }
}

/// Independent bilinear sampler for radius-1 neighbors, east first and
/// counter-clockwise with y pointing down.
fn oracle_code(img: &Image, x: usize, y: usize) -> Option<u8> {
    let c = img.get(y, x, 0);
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let offs = [(1.0, 0.0), (s, -s), (0.0, -1.0), (-s, -s), (-1.0, 0.0), (-s, s), (0.0, 1.0), (s, s)];
    let mut code = 0u8;
    for (bit, (dx, dy)) in offs.iter().enumerate() {
        let (fx, fy) = (x as f64 + dx, y as f64 + dy);
        let (x0, y0) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - x0, fy - y0);
        let (x0, y0) = (x0 as usize, y0 as usize);
        let g = |yy: usize, xx: usize| img.get(yy.min(img.height() - 1), xx.min(img.width() - 1), 0);
        let v = g(y0, x0) * (1.0 - tx) * (1.0 - ty)
            + g(y0, x0 + 1) * tx * (1.0 - ty)
            + g(y0 + 1, x0) * (1.0 - tx) * ty
            + g(y0 + 1, x0 + 1) * tx * ty;
        if (v - c).abs() < 1e-9 {
            return None;
        }
        if v >= c {
            code |= 1 << bit;
        }
    }
    Some(code)
}

#[test]
fn hand_evaluated_codes() {
    let p = LbpParams::default();
    let flat = Image::filled(5, 5, 1, 0.5).unwrap();
    assert_eq!(lbp_code(&flat, 2, 2, &p).unwrap(), 255);
    let mut v = vec![4.0; 9];
    v[4] = 5.0;
    v[5] = 6.0; // east
    v[2] = 6.0; // north-east
    let img = Image::new(3, 3, 1, v).unwrap();
    let nearest = LbpParams { interpolation: Interpolation::Nearest, ..p };
    assert_eq!(lbp_code(&img, 1, 1, &nearest).unwrap(), 3);
    let mut v = vec![0.1; 9];
    v[4] = 0.9;
    assert_eq!(lbp_code(&Image::new(3, 3, 1, v).unwrap(), 1, 1, &p).unwrap(), 0);
    assert!(matches!(lbp_code(&flat, 0, 2, &p), Err(Error::OutOfDomain { .. })));
}

#[test]
fn codes_match_bilinear_oracle() {
    let img = random_image(20, 20, 3);
    let p = LbpParams::default();
    for y in 1..19 {
        for x in 1..19 {
            if let Some(expect) = oracle_code(&img, x, y) {
                assert_eq!(lbp_code(&img, x, y, &p).unwrap(), expect, "({x}, {y})");
            }
        }
    }
}

#[test]
fn uniform_table() {
    let bins: std::collections::BTreeSet<usize> = (0..=255u8).map(uniform_bin).collect();
    assert_eq!(bins.len(), UNIFORM_BINS);
    let uniform = (0..=255u8).filter(|c| (c ^ c.rotate_right(1)).count_ones() <= 2).count();
    assert_eq!(uniform, 58);
    assert_eq!(uniform_bin(0b0101_0101), UNIFORM_BINS - 1);
}

#[test]
fn flat_histogram_has_one_bin() {
    let h = lbp_histogram(&Image::filled(8, 8, 1, 0.3).unwrap(), &LbpParams::default()).unwrap();
    assert_eq!(h.len(), UNIFORM_BINS);
    assert_eq!(h.values()[uniform_bin(255)], 1.0);
    assert_eq!(h.values().iter().filter(|&&v| v > 0.0).count(), 1);
    assert!(matches!(lbp_histogram(&Image::filled(3, 3, 1, 0.0).unwrap(), &LbpParams::default()), Err(Error::Shape(_))));
}

#[test]
fn raw_histogram_equals_counting_oracle() {
    let img = random_image(32, 32, 5);
    let h = lbp_histogram(&img, &raw(false)).unwrap();
    assert_eq!(h.len(), 256);
    let mut counts = vec![0usize; 256];
    for y in 1..31 {
        for x in 1..31 {
            counts[lbp_code(&img, x, y, &raw(false)).unwrap() as usize] += 1;
        }
    }
    let expect: Vec<f64> = counts.iter().map(|&c| c as f64 / 900.0).collect();
    assert_eq!(h.values(), &expect[..]);
}

proptest! {
    #[test]
    fn histogram_sums_to_one(seed in any::<u64>(), uniform in any::<bool>()) {
        let h = lbp_histogram(&random_image(12, 15, seed), &raw(uniform)).unwrap();
        prop_assert!((h.values().iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn nearest_codes_survive_monotone_remap(seed in any::<u64>()) {
        let img = random_image(10, 10, seed);
        let warped = Image::from_fn(10, 10, 1, |y, x, _| img.get(y, x, 0).powi(3) * 0.5 + 0.1).unwrap();
        let p = LbpParams { interpolation: Interpolation::Nearest, ..LbpParams::default() };
        for y in 1..9 {
            for x in 1..9 {
                prop_assert_eq!(lbp_code(&img, x, y, &p).unwrap(), lbp_code(&warped, x, y, &p).unwrap());
            }
        }
    }

    #[test]
    fn constant_shift_keeps_histogram(seed in any::<u64>()) {
        // dyadic pixel values and shift keep every interpolation exact
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let img = Image::from_fn(12, 12, 1, |_, _, _| rng.random_range(0..64) as f64 / 128.0).unwrap();
        let shifted = Image::from_fn(12, 12, 1, |y, x, _| img.get(y, x, 0) + 0.25).unwrap();
        let p = LbpParams { interpolation: Interpolation::Nearest, ..LbpParams::default() };
        prop_assert_eq!(lbp_histogram(&img, &p).unwrap(), lbp_histogram(&shifted, &p).unwrap());
    }
}

#[test]
fn feature_csv_roundtrip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("f.csv");
    let v = vec![
        FeatureVector::new(FeatureSource::Fc9, vec![0.1, -2.5, 3e-9]).unwrap(),
        FeatureVector::new(FeatureSource::Lbp, vec![0.25, 0.75]).unwrap(),
    ];
    write_feature_csv(&path, &v).unwrap();
    assert_eq!(read_feature_csv(&path).unwrap(), v);
    assert!(FeatureVector::new(FeatureSource::Fc10, vec![f64::NAN]).is_err());
    assert!(read_feature_csv(Path::new("/nonexistent.csv")).is_err());
}
