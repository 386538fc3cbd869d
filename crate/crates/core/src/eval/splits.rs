//! Seeded train/test partitions for both protocols. All indices refer to
//! the records of the dataset passed in.

use std::collections::BTreeMap;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, Gender, Side};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderSplitSpec {
    pub train_per_gender: usize,
    pub test_per_gender: usize,
}

impl Default for GenderSplitSpec {
    fn default() -> Self {
        GenderSplitSpec {
            train_per_gender: 1000,
            test_per_gender: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenderSplit {
    pub side: Side,
    pub seed: u64,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions subjects of each gender into train and test first, then
/// samples images: training images come from the accessory-free images of
/// train subjects, test images from all images of test subjects.
pub fn make_gender_split(ds: &Dataset, side: Side, seed: u64, spec: &GenderSplitSpec) -> Result<GenderSplit> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let subjects = ds.subjects();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for gender in [Gender::Male, Gender::Female] {
        let mut ids: Vec<u32> = subjects
            .iter()
            .filter(|(_, idx)| ds.records()[idx[0]].gender == gender)
            .map(|(id, _)| *id)
            .collect();
        ids.shuffle(&mut rng);
        let on_side = |id: u32, clean: bool| -> Vec<usize> {
            subjects[&id]
                .iter()
                .copied()
                .filter(|&i| {
                    let r = &ds.records()[i];
                    r.side == side && !(clean && r.accessories)
                })
                .collect()
        };
        let (mut train_pool, mut test_pool) = (Vec::new(), Vec::new());
        for id in ids {
            if train_pool.len() < spec.train_per_gender {
                train_pool.extend(on_side(id, true));
            } else {
                test_pool.extend(on_side(id, false));
            }
        }
        if train_pool.len() < spec.train_per_gender || test_pool.len() < spec.test_per_gender {
            return Err(Error::Capacity(format!(
                "{gender} {side}: need {} accessory-free training and {} test images from disjoint \
                 subjects, found {} and {}",
                spec.train_per_gender,
                spec.test_per_gender,
                train_pool.len(),
                test_pool.len()
            )));
        }
        let mut pick = |pool: &[usize], n: usize| -> Vec<usize> {
            let mut chosen: Vec<usize> = pool.choose_multiple(&mut rng, n).copied().collect();
            chosen.sort_unstable();
            chosen
        };
        train.extend(pick(&train_pool, spec.train_per_gender));
        test.extend(pick(&test_pool, spec.test_per_gender));
    }
    Ok(GenderSplit {
        side,
        seed,
        train,
        test,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSplitSpec {
    pub train_per_subject: usize,
    pub test_per_subject: usize,
    /// Allows subject counts other than 80, 100 or 120.
    pub force: bool,
}

impl Default for IdSplitSpec {
    fn default() -> Self {
        IdSplitSpec {
            train_per_subject: 10,
            test_per_subject: 4,
            force: false,
        }
    }
}

pub const ID_SUBJECT_COUNTS: [usize; 3] = [80, 100, 120];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IdSplit {
    pub side: Side,
    pub seed: u64,
    pub subjects: Vec<u32>,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Picks subjects uniformly among those with enough accessory-free images
/// on the side, then splits each one's images into train and test.
pub fn make_id_split(ds: &Dataset, side: Side, n_subjects: usize, seed: u64, spec: &IdSplitSpec) -> Result<IdSplit> {
    if !spec.force && !ID_SUBJECT_COUNTS.contains(&n_subjects) {
        return Err(Error::Config(format!(
            "identification uses 80, 100 or 120 subjects; {n_subjects} needs --force"
        )));
    }
    if n_subjects == 0 || spec.train_per_subject == 0 || spec.test_per_subject == 0 {
        return Err(Error::Config("identification split needs subjects, train and test images".into()));
    }
    let per_subject = spec.train_per_subject + spec.test_per_subject;
    let mut eligible: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for (id, idx) in ds.subjects() {
        let clean: Vec<usize> = idx
            .into_iter()
            .filter(|&i| {
                let r = &ds.records()[i];
                r.side == side && !r.accessories
            })
            .collect();
        if clean.len() >= per_subject {
            eligible.insert(id, clean);
        }
    }
    if eligible.len() < n_subjects {
        return Err(Error::Capacity(format!(
            "{side}: {n_subjects} subjects with at least {per_subject} accessory-free images requested, \
             only {} available",
            eligible.len()
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<u32> = eligible.keys().copied().collect();
    let mut subjects: Vec<u32> = ids.choose_multiple(&mut rng, n_subjects).copied().collect();
    subjects.sort_unstable();
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for id in &subjects {
        let mut chosen: Vec<usize> = eligible[id].choose_multiple(&mut rng, per_subject).copied().collect();
        chosen.shuffle(&mut rng);
        let (a, b) = chosen.split_at(spec.train_per_subject);
        train.extend(a);
        test.extend(b);
    }
    Ok(IdSplit {
        side,
        seed,
        subjects,
        train,
        test,
    })
}
