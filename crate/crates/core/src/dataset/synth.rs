//! Procedural hand-like images. Each subject is an elliptical silhouette
//! whose width and height carry the gender cue, filled with a skin tone
//! modulated by a subject-specific periodic micro-texture.

use std::collections::HashMap;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metadata::write_metadata;
use super::record::{Gender, Hand, HandRecord, Side};
use super::Dataset;
use crate::error::{Error, Result};
use crate::imgproc::io::save_png;
use crate::imgproc::Image;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SynthSides {
    Dorsal,
    Palmar,
    /// Alternates sides image by image.
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_subjects: usize,
    pub images_per_subject: usize,
    /// Strength in [0, 1] of the silhouette cue that separates genders.
    pub gender_signal: f64,
    /// Strength in [0, 1] of the per-subject texture contrast.
    pub subject_signal: f64,
    pub image_size: usize,
    pub seed: u64,
    /// Probability that an image shows an accessory band.
    pub accessory_rate: f64,
    pub sides: SynthSides,
    /// Standard deviation of per-pixel noise.
    pub noise: f64,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_subjects: 20,
            images_per_subject: 20,
            gender_signal: 0.8,
            subject_signal: 0.8,
            image_size: 64,
            seed: 0,
            accessory_rate: 0.0,
            sides: SynthSides::Dorsal,
            noise: 0.02,
        }
    }
}

impl SynthParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("gender_signal", self.gender_signal),
            ("subject_signal", self.subject_signal),
            ("accessory_rate", self.accessory_rate),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::Parameter(format!("{name} {v} outside [0, 1]")));
            }
        }
        if self.image_size < 16 {
            return Err(Error::Parameter(format!(
                "image size {} is below the minimum of 16",
                self.image_size
            )));
        }
        if self.n_subjects == 0 || self.images_per_subject == 0 {
            return Err(Error::Parameter("need at least one subject and one image".into()));
        }
        if !(self.noise >= 0.0 && self.noise.is_finite()) {
            return Err(Error::Parameter("noise must be a finite nonnegative value".into()));
        }
        Ok(())
    }

    pub fn side_of(&self, image: usize) -> Side {
        match self.sides {
            SynthSides::Dorsal => Side::Dorsal,
            SynthSides::Palmar => Side::Palmar,
            SynthSides::Both => {
                if image % 2 == 0 {
                    Side::Dorsal
                } else {
                    Side::Palmar
                }
            }
        }
    }
}

fn mix(seed: u64, a: u64, b: u64) -> u64 {
    // splitmix64 finalizer over the combined words
    let mut z = seed
        .wrapping_add(a.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(b.wrapping_mul(0xD1B5_4A32_D192_ED03));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Subject {
    gender: Gender,
    age: u32,
    tone: [f64; 3],
    skin: &'static str,
    width: f64,
    height: f64,
    period: usize,
    tile: Vec<f64>,
}

fn subject(params: &SynthParams, s: usize) -> Subject {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(params.seed, s as u64, u64::MAX));
    let gender = if s % 2 == 0 { Gender::Male } else { Gender::Female };
    let g = if gender == Gender::Male { 1.0 } else { -1.0 };
    let mut n = || rng.sample::<f64, _>(StandardNormal);
    let width = 1.0 + 0.3 * params.gender_signal * g + 0.05 * n();
    let height = 1.0 - 0.1 * params.gender_signal * g + 0.03 * n();
    let base: f64 = rng.random_range(0.5..0.9);
    let skin = if base < 0.63 {
        "dark"
    } else if base < 0.77 {
        "medium"
    } else {
        "fair"
    };
    let period = rng.random_range(4..8);
    let tile = (0..period * period).map(|_| rng.random_range(-1.0..1.0)).collect();
    Subject {
        gender,
        age: rng.random_range(18..76),
        tone: [base, base * 0.78, base * 0.66],
        skin,
        width,
        height,
        period,
        tile,
    }
}

fn accessory(params: &SynthParams, s: usize, k: usize) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(mix(params.seed, s as u64, (k as u64) << 1 | 1));
    params.accessory_rate > 0.0 && rng.random::<f64>() < params.accessory_rate
}

/// Image `k` of subject `s`, quantized to 8-bit levels.
pub fn synth_image(params: &SynthParams, s: usize, k: usize) -> Result<Image> {
    params.validate()?;
    if s >= params.n_subjects || k >= params.images_per_subject {
        return Err(Error::Parameter(format!("no synthetic image ({s}, {k})")));
    }
    let subj = subject(params, s);
    let has_band = accessory(params, s, k);
    let mut rng = ChaCha8Rng::seed_from_u64(mix(params.seed, s as u64, (k as u64) << 1));
    let size = params.image_size as f64;
    let px = size / 64.0;
    let n = |rng: &mut ChaCha8Rng| rng.sample::<f64, _>(StandardNormal);
    let cx = size / 2.0 + px * n(&mut rng);
    let cy = size / 2.0 + px * n(&mut rng);
    let scale = 1.0 + 0.02 * n(&mut rng);
    let semi_x = 0.22 * size * subj.width * scale;
    let semi_y = 0.36 * size * subj.height * scale;
    let oy = rng.random_range(0..subj.period);
    let ox = rng.random_range(0..subj.period);
    let band_y = cy + rng.random_range(-0.2..0.2) * semi_y;
    let contrast = 0.3 * params.subject_signal;
    let n_px = params.image_size * params.image_size * 3;
    let noise: Vec<f64> = (0..n_px).map(|_| params.noise * n(&mut rng)).collect();
    let p = subj.period;
    Image::from_fn(params.image_size, params.image_size, 3, |y, x, c| {
        let u = (x as f64 + 0.5 - cx) / semi_x;
        let v = (y as f64 + 0.5 - cy) / semi_y;
        let r = (u * u + v * v).sqrt();
        let dist = (1.0 - r) * semi_x.min(semi_y);
        let mask = 1.0 / (1.0 + (-2.0 * dist).exp());
        let t = subj.tile[((y + oy) % p) * p + (x + ox) % p];
        let mut skin = subj.tone[c] * (1.0 + contrast * t);
        if has_band && (y as f64 + 0.5 - band_y).abs() < 1.5 * px {
            skin = [0.15, 0.15, 0.22][c];
        }
        let value = 0.94 * (1.0 - mask) + skin * mask + noise[(y * params.image_size + x) * 3 + c];
        (value.clamp(0.0, 1.0) * 255.0).round() / 255.0
    })
}

/// Metadata for a generated corpus rooted at `root`; pixels are produced on
/// demand by [`Dataset::load_image`].
pub fn synth_dataset(params: &SynthParams, root: &Path) -> Result<Dataset> {
    params.validate()?;
    let mut records = Vec::with_capacity(params.n_subjects * params.images_per_subject);
    let mut index = HashMap::new();
    for s in 0..params.n_subjects {
        let subj = subject(params, s);
        for k in 0..params.images_per_subject {
            let path = root.join(format!("Hand_{:04}_{:03}.png", s + 1, k));
            index.insert(path.clone(), (s, k));
            records.push(HandRecord {
                image_path: path,
                subject_id: s as u32 + 1,
                gender: subj.gender,
                age: subj.age,
                skin_color: subj.skin.to_string(),
                hand: if k % 4 < 2 { Hand::Right } else { Hand::Left },
                side: params.side_of(k),
                accessories: accessory(params, s, k),
                nail_polish: false,
                irregularities: false,
            });
        }
    }
    Ok(Dataset::new(records)?.with_synth(params.clone(), index))
}

/// Writes every image as PNG under `root` plus `HandInfo.csv`.
pub fn write_corpus(dataset: &Dataset, root: &Path) -> Result<()> {
    std::fs::create_dir_all(root).map_err(|e| Error::io(root, e))?;
    (0..dataset.len()).into_par_iter().try_for_each(|i| {
        let img = dataset.load_image(i)?;
        let name = dataset.records()[i]
            .image_path
            .file_name()
            .ok_or_else(|| Error::Data("record without a file name".into()))?;
        save_png(&img, &root.join(name))
    })?;
    let rel: Vec<HandRecord> = dataset
        .records()
        .iter()
        .map(|r| {
            let mut r = r.clone();
            r.image_path = root.join(r.image_path.file_name().unwrap());
            r
        })
        .collect();
    write_metadata(&root.join("HandInfo.csv"), root, &rel)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_quantized() {
        let p = SynthParams {
            n_subjects: 2,
            images_per_subject: 2,
            ..SynthParams::default()
        };
        let a = synth_image(&p, 1, 1).unwrap();
        let b = synth_image(&p, 1, 1).unwrap();
        assert_eq!(a, b);
        assert!(a.data().iter().all(|v| (v * 255.0 - (v * 255.0).round()).abs() < 1e-9));
        assert_ne!(a, synth_image(&p, 1, 0).unwrap());
    }

    #[test]
    fn parameter_ranges() {
        let p = SynthParams {
            gender_signal: 1.5,
            ..SynthParams::default()
        };
        assert!(p.validate().is_err());
        let p = SynthParams {
            image_size: 8,
            ..SynthParams::default()
        };
        assert!(p.validate().is_err());
    }
}
