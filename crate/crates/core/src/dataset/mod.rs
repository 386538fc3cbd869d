//! Hand-image corpora: metadata ingestion, accessory filtering, a
//! procedural generator for small synthetic corpora, and a cache for
//! preprocessed planes.

mod cache;
mod metadata;
mod record;
mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

pub use cache::{preprocess_cached, PlaneCache};
pub use metadata::{load_metadata, write_metadata, ColumnMap};
pub use record::{parse_aspect, parse_flag, Gender, Hand, HandRecord, Side};
pub use synth::{synth_dataset, synth_image, write_corpus, SynthParams, SynthSides};

use crate::error::{Error, Result};
use crate::imgproc::io::load_rgb;
use crate::imgproc::Image;

#[derive(Debug, Clone, PartialEq)]
struct SynthOrigin {
    params: SynthParams,
    /// image path -> (subject index, image index)
    index: HashMap<PathBuf, (usize, usize)>,
}

/// Immutable, path-sorted collection of hand records.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    records: Vec<HandRecord>,
    synth: Option<Arc<SynthOrigin>>,
}

impl Dataset {
    /// Validates and sorts by image path.
    pub fn new(mut records: Vec<HandRecord>) -> Result<Self> {
        records.sort_by(|a, b| a.image_path.cmp(&b.image_path));
        for pair in records.windows(2) {
            if pair[0].image_path == pair[1].image_path {
                return Err(Error::Load(format!(
                    "duplicate image path {}",
                    pair[0].image_path.display()
                )));
            }
        }
        let mut genders = HashMap::new();
        for r in &records {
            if let Some(g) = genders.insert(r.subject_id, r.gender) {
                if g != r.gender {
                    return Err(Error::Data(format!(
                        "subject {} is recorded with both genders",
                        r.subject_id
                    )));
                }
            }
        }
        Ok(Dataset {
            records,
            synth: None,
        })
    }

    pub(crate) fn with_synth(mut self, params: SynthParams, index: HashMap<PathBuf, (usize, usize)>) -> Self {
        self.synth = Some(Arc::new(SynthOrigin { params, index }));
        self
    }

    pub fn records(&self) -> &[HandRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn is_synthetic(&self) -> bool {
        self.synth.is_some()
    }

    pub fn synth_params(&self) -> Option<&SynthParams> {
        self.synth.as_ref().map(|s| &s.params)
    }

    /// Keeps the records matching `keep`, in order.
    pub fn filter(&self, keep: impl Fn(&HandRecord) -> bool) -> Dataset {
        Dataset {
            records: self.records.iter().filter(|r| keep(r)).cloned().collect(),
            synth: self.synth.clone(),
        }
    }

    pub fn exclude_accessories(&self) -> Dataset {
        self.filter(|r| !r.accessories)
    }

    pub fn side(&self, side: Side) -> Dataset {
        self.filter(|r| r.side == side)
    }

    /// Record indices per subject, subjects ascending.
    pub fn subjects(&self) -> BTreeMap<u32, Vec<usize>> {
        let mut map: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for (i, r) in self.records.iter().enumerate() {
            map.entry(r.subject_id).or_default().push(i);
        }
        map
    }

    pub fn subject_gender(&self, subject: u32) -> Option<Gender> {
        self.records.iter().find(|r| r.subject_id == subject).map(|r| r.gender)
    }

    pub fn subject_ids(&self) -> Vec<u32> {
        let set: HashSet<u32> = self.records.iter().map(|r| r.subject_id).collect();
        let mut ids: Vec<u32> = set.into_iter().collect();
        ids.sort_unstable();
        ids
    }

    pub fn find(&self, path: &Path) -> Option<usize> {
        self.records
            .binary_search_by(|r| r.image_path.as_path().cmp(path))
            .ok()
    }

    /// Pixels of record `i`: generated for synthetic corpora, read from
    /// disk otherwise.
    pub fn load_image(&self, i: usize) -> Result<Image> {
        let record = self
            .records
            .get(i)
            .ok_or_else(|| Error::Data(format!("record index {i} out of range")))?;
        if let Some(origin) = &self.synth {
            if let Some(&(s, k)) = origin.index.get(&record.image_path) {
                return synth_image(&origin.params, s, k);
            }
        }
        load_rgb(&record.image_path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(path: &str, subject: u32, accessories: bool) -> HandRecord {
        HandRecord {
            image_path: PathBuf::from(path),
            subject_id: subject,
            gender: Gender::Male,
            age: 30,
            skin_color: "medium".into(),
            hand: Hand::Right,
            side: Side::Dorsal,
            accessories,
            nail_polish: false,
            irregularities: false,
        }
    }

    #[test]
    fn sorted_and_unique() {
        let ds = Dataset::new(vec![record("b", 1, false), record("a", 1, false)]).unwrap();
        assert_eq!(ds.records()[0].image_path, PathBuf::from("a"));
        assert_eq!(ds.find(Path::new("b")), Some(1));
        let dup = Dataset::new(vec![record("a", 1, false), record("a", 2, false)]);
        assert!(matches!(dup, Err(Error::Load(_))));
    }

    #[test]
    fn accessory_filter_counts() {
        let ds = Dataset::new(vec![
            record("a", 1, true),
            record("b", 1, false),
            record("c", 2, true),
        ])
        .unwrap();
        assert_eq!(ds.exclude_accessories().len(), 1);
        assert_eq!(ds.len(), 3);
    }
}
