use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which extractor produced a feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    Lbp,
    Fc9,
    Fc10,
    Fusion,
    Concat,
}

impl FeatureSource {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureSource::Lbp => "lbp",
            FeatureSource::Fc9 => "fc9",
            FeatureSource::Fc10 => "fc10",
            FeatureSource::Fusion => "fusion",
            FeatureSource::Concat => "concat",
        }
    }
}

impl fmt::Display for FeatureSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureSource {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lbp" => Ok(FeatureSource::Lbp),
            "fc9" => Ok(FeatureSource::Fc9),
            "fc10" => Ok(FeatureSource::Fc10),
            "fusion" => Ok(FeatureSource::Fusion),
            "concat" => Ok(FeatureSource::Concat),
            other => Err(Error::Data(format!("unknown feature source {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    source: FeatureSource,
    values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(source: FeatureSource, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Data(format!("non-finite {source} feature at index {i}")));
        }
        if source == FeatureSource::Lbp {
            let sum: f64 = values.iter().sum();
            if (sum - 1.0).abs() > 1e-9 {
                return Err(Error::Data(format!("lbp histogram sums to {sum}, not 1")));
            }
        }
        Ok(FeatureVector { source, values })
    }

    pub fn source(&self) -> FeatureSource {
        self.source
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// One row per vector: the source tag, then the values.
pub fn write_feature_csv(path: &Path, vectors: &[FeatureVector]) -> Result<()> {
    let mut writer = csv::WriterBuilder::new()
        .flexible(true)
        .from_path(path)?;
    for v in vectors {
        let mut row = vec![v.source.to_string()];
        row.extend(v.values.iter().map(|x| format!("{x:e}")));
        writer.write_record(&row)?;
    }
    writer.flush().map_err(|e| Error::io(path, e))?;
    Ok(())
}

pub fn read_feature_csv(path: &Path) -> Result<Vec<FeatureVector>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut out = Vec::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut fields = record.iter();
        let source: FeatureSource = fields
            .next()
            .ok_or_else(|| Error::format(path, format!("row {} is empty", row + 1)))?
            .parse()?;
        let values = fields
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| Error::format(path, format!("row {}: bad value {f:?}", row + 1)))
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(FeatureVector::new(source, values)?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("f.csv");
        let vs = vec![
            FeatureVector::new(FeatureSource::Fc9, vec![0.1, -2.5, 1e-17]).unwrap(),
            FeatureVector::new(FeatureSource::Lbp, vec![0.25, 0.75]).unwrap(),
        ];
        write_feature_csv(&path, &vs).unwrap();
        assert_eq!(read_feature_csv(&path).unwrap(), vs);
    }

    #[test]
    fn unnormalized_lbp_rejected() {
        assert!(FeatureVector::new(FeatureSource::Lbp, vec![0.5, 0.6]).is_err());
        assert!(FeatureVector::new(FeatureSource::Fusion, vec![f64::NAN]).is_err());
    }
}
