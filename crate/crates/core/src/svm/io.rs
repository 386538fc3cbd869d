//! Binary containers for trained banks and ensembles, and the score CSV.
//!
//! ```text
//! bank:     magic "HSVB" | version u32 | kernel | params | scaler | classes
//!           | per class: bias, calibration, status, support vectors
//! ensemble: magic "HSVE" | version u32 | view count u32
//!           | per view: tag | byte length u64 | bank
//! ```

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::isda::{SvmModel, SvmParams};
use super::kernel::{Kernel, KernelKind};
use super::ova::{Ensemble, OvaBank};
use super::platt::Platt;
use super::scaler::Standardizer;
use crate::codec::{Reader, Writer};
use crate::error::{Error, Result};
use crate::features::FeatureSource;

pub const BANK_MAGIC: &[u8; 4] = b"HSVB";
pub const ENSEMBLE_MAGIC: &[u8; 4] = b"HSVE";
pub const SVM_FORMAT_VERSION: u32 = 1;

pub fn encode_bank(bank: &OvaBank) -> Vec<u8> {
    let mut w = Writer::default();
    w.raw(BANK_MAGIC);
    w.u32(SVM_FORMAT_VERSION);
    let k = bank.params.kernel;
    w.u8(match k.kind {
        KernelKind::Linear => 0,
        KernelKind::Polynomial => 1,
    });
    w.u32(k.degree);
    w.f64(k.scale);
    w.f64(k.offset);
    w.f64(bank.params.c_box);
    w.f64(bank.params.tol);
    w.u64(bank.params.max_passes as u64);
    w.f64(bank.params.kappa);
    let dim = bank.scaler.dim();
    w.u32(dim as u32);
    w.f64s(&bank.scaler.mean);
    w.f64s(&bank.scaler.std);
    w.u32(bank.classes.len() as u32);
    bank.classes.iter().for_each(|c| w.u32(*c));
    for m in &bank.models {
        w.f64(m.bias);
        match m.platt {
            Some(p) => {
                w.u8(1);
                w.f64(p.a);
                w.f64(p.b);
            }
            None => {
                w.u8(0);
                w.f64(0.0);
                w.f64(0.0);
            }
        }
        w.f64(m.max_violation);
        w.u8(m.converged as u8);
        w.u32(m.coefficients.len() as u32);
        w.f64s(&m.coefficients);
        for sv in &m.support_vectors {
            w.f64s(sv);
        }
    }
    w.bytes
}

fn read_bank(r: &mut Reader<'_>) -> Result<OvaBank> {
    r.expect_magic(BANK_MAGIC, SVM_FORMAT_VERSION, "an SVM bank")?;
    let kind = match r.u8()? {
        0 => KernelKind::Linear,
        1 => KernelKind::Polynomial,
        t => return Err(r.fail(format!("unknown kernel tag {t}"))),
    };
    let kernel = Kernel {
        kind,
        degree: r.u32()?,
        scale: r.f64()?,
        offset: r.f64()?,
    };
    let params = SvmParams {
        kernel,
        c_box: r.f64()?,
        tol: r.f64()?,
        max_passes: r.u64()? as usize,
        kappa: r.f64()?,
    };
    let dim = r.u32()? as usize;
    let scaler = Standardizer {
        mean: r.f64s(dim)?,
        std: r.f64s(dim)?,
    };
    let n_classes = r.u32()? as usize;
    let classes = (0..n_classes).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
    let mut models = Vec::with_capacity(n_classes);
    for _ in 0..n_classes {
        let bias = r.f64()?;
        let has_platt = r.u8()? == 1;
        let (a, b) = (r.f64()?, r.f64()?);
        let max_violation = r.f64()?;
        let converged = r.u8()? == 1;
        let n_sv = r.u32()? as usize;
        let coefficients = r.f64s(n_sv)?;
        let support_vectors = (0..n_sv).map(|_| r.f64s(dim)).collect::<Result<Vec<_>>>()?;
        models.push(SvmModel {
            kernel,
            c_box: params.c_box,
            support_vectors,
            coefficients,
            bias,
            platt: has_platt.then_some(Platt { a, b }),
            max_violation,
            converged,
        });
    }
    Ok(OvaBank {
        params,
        classes,
        scaler,
        models,
    })
}

pub fn decode_bank(bytes: &[u8], path: &Path) -> Result<OvaBank> {
    let mut r = Reader::new(bytes, path);
    let bank = read_bank(&mut r)?;
    r.finish()?;
    Ok(bank)
}

pub fn encode_ensemble(ensemble: &Ensemble) -> Vec<u8> {
    let mut w = Writer::default();
    w.raw(ENSEMBLE_MAGIC);
    w.u32(SVM_FORMAT_VERSION);
    w.u32(ensemble.views.len() as u32);
    for (source, bank) in &ensemble.views {
        w.str(source.as_str());
        let bytes = encode_bank(bank);
        w.u64(bytes.len() as u64);
        w.raw(&bytes);
    }
    w.bytes
}

pub fn decode_ensemble(bytes: &[u8], path: &Path) -> Result<Ensemble> {
    let mut r = Reader::new(bytes, path);
    r.expect_magic(ENSEMBLE_MAGIC, SVM_FORMAT_VERSION, "an SVM ensemble")?;
    let n = r.u32()? as usize;
    let mut views = Vec::with_capacity(n);
    for _ in 0..n {
        let tag = r.str()?;
        let source: FeatureSource = tag.parse().map_err(|_| r.fail(format!("unknown view {tag}")))?;
        let len = r.u64()? as usize;
        let body = r.take(len)?;
        views.push((source, decode_bank(body, path)?));
    }
    r.finish()?;
    Ensemble::new(views)
}

pub fn save_bank(bank: &OvaBank, path: &Path) -> Result<()> {
    fs::write(path, encode_bank(bank)).map_err(|e| Error::io(path, e))
}

pub fn load_bank(path: &Path) -> Result<OvaBank> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_bank(&bytes, path)
}

pub fn save_ensemble(ensemble: &Ensemble, path: &Path) -> Result<()> {
    fs::write(path, encode_ensemble(ensemble)).map_err(|e| Error::io(path, e))
}

pub fn load_ensemble(path: &Path) -> Result<Ensemble> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_ensemble(&bytes, path)
}

/// One exported score.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScoreRow {
    pub image_id: String,
    pub class: u32,
    pub view: String,
    pub log_posterior: f64,
}

pub fn write_scores_csv(path: &Path, rows: &[ScoreRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::train_one_vs_all;

    #[test]
    fn bank_roundtrip() {
        let x = vec![
            vec![0.0, 1.0],
            vec![0.1, 0.9],
            vec![1.0, 0.0],
            vec![0.9, 0.2],
            vec![0.5, 0.5],
            vec![0.6, 0.4],
        ];
        let y = vec![3, 3, 7, 7, 9, 9];
        let bank = train_one_vs_all(&x, &y, &SvmParams::new(Kernel::polynomial(2)), true).unwrap();
        let p = Path::new("mem");
        assert_eq!(decode_bank(&encode_bank(&bank), p).unwrap(), bank);
        let ens = Ensemble::new(vec![(FeatureSource::Lbp, bank.clone()), (FeatureSource::Fc9, bank)]).unwrap();
        let bytes = encode_ensemble(&ens);
        assert_eq!(decode_ensemble(&bytes, p).unwrap(), ens);
        assert!(decode_ensemble(&bytes[..bytes.len() - 3], p).is_err());
    }
}
