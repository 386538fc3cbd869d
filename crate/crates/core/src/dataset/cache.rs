use std::fs;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::imgproc::io::{read_plane, write_plane};
use crate::imgproc::{preprocess_full, Image, PreprocessParams, Preprocessed};

/// Directory of preprocessed planes keyed by a hash of the source pixels
/// and the preprocessing parameters.
#[derive(Debug, Clone)]
pub struct PlaneCache {
    dir: PathBuf,
}

impl PlaneCache {
    pub fn new(dir: impl Into<PathBuf>) -> Result<Self> {
        let dir = dir.into();
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(PlaneCache { dir })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn key(img: &Image, params: &PreprocessParams) -> String {
        let mut h = Sha256::new();
        let (height, width, channels) = img.dims();
        for d in [height, width, channels] {
            h.update((d as u64).to_le_bytes());
        }
        for v in img.data() {
            h.update(v.to_bits().to_le_bytes());
        }
        h.update(serde_json::to_vec(params).expect("params serialize"));
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    fn paths(&self, key: &str) -> [PathBuf; 3] {
        ["low", "high", "detail"].map(|p| self.dir.join(format!("{key}.{p}.hpln")))
    }

    pub fn get(&self, key: &str) -> Result<Option<Preprocessed>> {
        let [low, high, detail] = self.paths(key);
        if !(low.exists() && high.exists() && detail.exists()) {
            return Ok(None);
        }
        Ok(Some(Preprocessed {
            low: read_plane(&low)?,
            high: read_plane(&high)?,
            detail: read_plane(&detail)?,
        }))
    }

    pub fn put(&self, key: &str, planes: &Preprocessed) -> Result<()> {
        let [low, high, detail] = self.paths(key);
        // write under temporary names so readers never see partial files
        for (img, path) in [(&planes.detail, detail), (&planes.high, high), (&planes.low, low)] {
            let tmp = path.with_extension("tmp");
            write_plane(img, &tmp)?;
            fs::rename(&tmp, &path).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

/// Preprocesses with results rounded to single precision, the precision
/// of cached planes, so cached and fresh results agree exactly.
pub fn preprocess_cached(
    img: &Image,
    params: &PreprocessParams,
    cache: Option<&PlaneCache>,
) -> Result<Preprocessed> {
    let key = cache.map(|_| PlaneCache::key(img, params));
    if let (Some(c), Some(k)) = (cache, &key) {
        if let Some(hit) = c.get(k)? {
            return Ok(hit);
        }
    }
    let full = preprocess_full(img, params)?;
    let out = Preprocessed {
        low: full.low.quantize_f32(),
        high: full.high.quantize_f32(),
        detail: full.detail.quantize_f32(),
    };
    if let (Some(c), Some(k)) = (cache, &key) {
        c.put(k, &out)?;
    }
    Ok(out)
}
