//! CSV and JSON emission for experiment results.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

use super::errors::ErrorReport;
use super::experiment::{GenderReport, IdReport};
use crate::dataset::Side;
use crate::error::{Error, Result};

/// Column header in the `(N-S)` style, e.g. `(80-P)`.
pub fn column_header(n_subjects: usize, side: Side) -> String {
    format!("({}-{})", n_subjects, side.letter())
}

/// Hex SHA-256 of the compact JSON form of `config`.
pub fn config_hash<T: Serialize>(config: &T) -> Result<String> {
    let bytes = serde_json::to_vec(config)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_rows(path: &Path, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Per-repeat identification accuracies with a closing mean row.
pub fn write_accuracy_csv(path: &Path, report: &IdReport) -> Result<()> {
    let mut header = vec!["seed".to_string(), column_header(report.n_subjects, report.side)];
    let views: Vec<String> = report.mean_view_accuracy.iter().map(|(v, _)| v.to_string()).collect();
    header.extend(views.iter().cloned());
    let mut rows: Vec<Vec<String>> = report
        .repeats
        .iter()
        .map(|r| {
            let mut row = vec![r.seed.to_string(), r.accuracy.to_string()];
            row.extend(r.view_accuracy.iter().map(|(_, a)| a.to_string()));
            row
        })
        .collect();
    let mut mean = vec!["mean".to_string(), report.mean_accuracy.to_string()];
    mean.extend(report.mean_view_accuracy.iter().map(|(_, a)| a.to_string()));
    rows.push(mean);
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    write_rows(path, &header, rows)
}

/// Per-repeat gender accuracies of the CNN and the feature SVM, with a
/// closing mean row.
pub fn write_gender_csv(path: &Path, report: &GenderReport) -> Result<()> {
    let mut rows: Vec<Vec<String>> = report
        .repeats
        .iter()
        .map(|r| {
            vec![
                r.seed.to_string(),
                r.eval.cnn_accuracy.to_string(),
                r.eval.svm_accuracy.map(|a| a.to_string()).unwrap_or_default(),
            ]
        })
        .collect();
    rows.push(vec![
        "mean".into(),
        report.mean_cnn_accuracy.to_string(),
        report.mean_svm_accuracy.to_string(),
    ]);
    write_rows(path, &["seed", "cnn", "svm"], rows)
}

pub fn write_threshold_csv(path: &Path, report: &ErrorReport) -> Result<()> {
    let c = &report.curve;
    let rows = (0..c.thresholds.len())
        .map(|k| vec![c.thresholds[k].to_string(), c.far[k].to_string(), c.frr[k].to_string()])
        .collect();
    write_rows(path, &["t", "far", "frr"], rows)
}

pub fn write_roc_csv(path: &Path, report: &ErrorReport) -> Result<()> {
    let r = &report.roc;
    let rows = r
        .fpr
        .iter()
        .zip(&r.tpr)
        .map(|(f, t)| vec![f.to_string(), t.to_string()])
        .collect();
    write_rows(path, &["fpr", "tpr"], rows)
}
