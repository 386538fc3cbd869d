use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::record::{parse_aspect, parse_flag, HandRecord};
use super::Dataset;
use crate::error::{Error, Result};

/// Header names of the metadata CSV. The defaults follow the public
/// dataset's `HandInfo.csv`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMap {
    pub subject_id: String,
    pub age: String,
    pub gender: String,
    pub skin_color: String,
    pub accessories: String,
    pub nail_polish: String,
    /// Combined side and hand, e.g. `"dorsal right"`.
    pub aspect: String,
    pub image_name: String,
    pub irregularities: String,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap {
            subject_id: "id".into(),
            age: "age".into(),
            gender: "gender".into(),
            skin_color: "skinColor".into(),
            accessories: "accessories".into(),
            nail_polish: "nailPolish".into(),
            aspect: "aspectOfHand".into(),
            image_name: "imageName".into(),
            irregularities: "irregularities".into(),
        }
    }
}

impl ColumnMap {
    fn names(&self) -> [(&'static str, &str); 9] {
        [
            ("subject_id", &self.subject_id),
            ("age", &self.age),
            ("gender", &self.gender),
            ("skin_color", &self.skin_color),
            ("accessories", &self.accessories),
            ("nail_polish", &self.nail_polish),
            ("aspect", &self.aspect),
            ("image_name", &self.image_name),
            ("irregularities", &self.irregularities),
        ]
    }
}

/// Reads the per-image metadata table; image names resolve against
/// `image_root`.
pub fn load_metadata(csv_path: &Path, image_root: &Path, columns: &ColumnMap) -> Result<Dataset> {
    let file = std::fs::File::open(csv_path).map_err(|e| Error::io(csv_path, e))?;
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(file);
    let headers = reader.headers()?.clone();
    let mut index = HashMap::new();
    for (field, name) in columns.names() {
        let pos = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::format(csv_path, format!("missing column {name:?} (for {field})")))?;
        index.insert(field, pos);
    }
    let mut records = Vec::new();
    for (i, row) in reader.records().enumerate() {
        let row = row?;
        let line = i + 2;
        let get = |field: &str| row.get(index[field]).unwrap_or("");
        let bad = |field: &str, reason: String| {
            Error::format(csv_path, format!("row {line}, column {field}: {reason}"))
        };
        let subject_id = get("subject_id")
            .parse::<u32>()
            .map_err(|e| bad("subject_id", e.to_string()))?;
        let age = get("age").parse::<u32>().map_err(|e| bad("age", e.to_string()))?;
        let gender = get("gender").parse().map_err(|e| bad("gender", e))?;
        let (side, hand) = parse_aspect(get("aspect")).map_err(|e| bad("aspect", e))?;
        let name = get("image_name");
        if name.is_empty() {
            return Err(bad("image_name", "empty image name".into()));
        }
        records.push(HandRecord {
            image_path: image_root.join(name),
            subject_id,
            gender,
            age,
            skin_color: get("skin_color").to_string(),
            hand,
            side,
            accessories: parse_flag(get("accessories")).map_err(|e| bad("accessories", e))?,
            nail_polish: parse_flag(get("nail_polish")).map_err(|e| bad("nail_polish", e))?,
            irregularities: parse_flag(get("irregularities")).map_err(|e| bad("irregularities", e))?,
        });
    }
    Dataset::new(records)
}

/// Writes records back in the default column layout, image names relative
/// to `image_root`.
pub fn write_metadata(path: &Path, image_root: &Path, records: &[HandRecord]) -> Result<()> {
    let cols = ColumnMap::default();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(cols.names().iter().map(|(_, n)| *n))?;
    for r in records {
        let name = r.image_path.strip_prefix(image_root).unwrap_or(&r.image_path);
        w.write_record([
            r.subject_id.to_string(),
            r.age.to_string(),
            r.gender.to_string(),
            r.skin_color.clone(),
            (r.accessories as u8).to_string(),
            (r.nail_polish as u8).to_string(),
            format!("{} {}", r.side, r.hand),
            name.to_string_lossy().into_owned(),
            (r.irregularities as u8).to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
