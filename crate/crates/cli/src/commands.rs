use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use handid::dataset::{preprocess_cached, synth_dataset, write_corpus, Dataset, PlaneCache};
use handid::eval::{
    config_hash, evaluate_gender, evaluate_id, extract_views, in_repeat, make_gender_split, make_id_split,
    column_header, train_gender_model, train_gender_svm, train_id_classifier, write_accuracy_csv, write_gender_csv,
    write_json, write_roc_csv, write_threshold_csv, GenderRepeat, GenderReport, GenderSplit, IdClassifier, IdReport,
    IdSplit,
};
use handid::nn::{TwoStreamModel, MODEL_META_FILE};
use handid::svm::{load_bank, save_bank};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde_json::json;

use crate::config::{DataSource, RunConfig};
use crate::output::write_svg;
use crate::MissingArtifact;

const SPLIT_FILE: &str = "split.json";
const MODEL_DIR: &str = "model";
const GENDER_SVM_FILE: &str = "gender_svm.bin";
const ID_SVM_FILE: &str = "id_svm.bin";
const TRAIN_LOG_FILE: &str = "train_log.csv";

fn seed_dir(root: &Path, seed: u64) -> PathBuf {
    root.join(format!("seed-{seed}"))
}

fn cache(cfg: &RunConfig) -> Result<Option<PlaneCache>> {
    Ok(match &cfg.cache {
        Some(dir) => Some(PlaneCache::new(dir.clone())?),
        None => None,
    })
}

/// Hash of the settings that determine results, ignoring folder locations.
fn settings_hash(cfg: &RunConfig) -> Result<String> {
    let mut c = cfg.clone();
    c.out = PathBuf::new();
    c.models = None;
    c.cache = None;
    c.svg = false;
    Ok(config_hash(&c)?)
}

fn read_json<T: DeserializeOwned>(path: &Path, producer: &'static str) -> Result<T> {
    if !path.exists() {
        bail!(MissingArtifact::new(path, producer));
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn load_model(dir: &Path, producer: &'static str) -> Result<TwoStreamModel> {
    if !dir.join(MODEL_META_FILE).exists() {
        bail!(MissingArtifact::new(dir, producer));
    }
    let model = TwoStreamModel::load(dir)?;
    if !model.is_trained() {
        bail!(MissingArtifact::new(dir, producer));
    }
    Ok(model)
}

fn models_root(cfg: &RunConfig) -> &Path {
    cfg.models.as_deref().unwrap_or(&cfg.out)
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let DataSource::Synth { params } = &cfg.data else {
        bail!("synth needs generator parameters, not --data");
    };
    let ds = synth_dataset(params, &cfg.out)?;
    write_corpus(&ds, &cfg.out)?;
    println!("wrote {} images of {} subjects to {}", ds.len(), params.n_subjects, cfg.out.display());
    Ok(())
}

pub fn preprocess(cfg: &RunConfig) -> Result<()> {
    let ds = cfg.data.load()?;
    let dir = cfg.cache.clone().unwrap_or_else(|| cfg.out.join("cache"));
    let cache = PlaneCache::new(dir.clone())?;
    let params = &cfg.experiment.preprocess;
    let keys = (0..ds.len())
        .into_par_iter()
        .map(|i| {
            let img = ds.load_image(i)?;
            preprocess_cached(&img, params, Some(&cache))?;
            Ok(PlaneCache::key(&img, params))
        })
        .collect::<handid::Result<Vec<_>>>()?;
    let mut w = csv::Writer::from_path(cfg.out.join("planes.csv"))?;
    w.write_record(["image", "key"])?;
    for (r, k) in ds.records().iter().zip(&keys) {
        w.write_record([r.image_path.to_string_lossy().as_ref(), k.as_str()])?;
    }
    w.flush()?;
    println!("cached planes of {} images in {}", ds.len(), dir.display());
    Ok(())
}

pub fn train_gender(cfg: &RunConfig) -> Result<()> {
    let ds = cfg.data.load()?;
    let cache = cache(cfg)?;
    let exp = &cfg.experiment;
    exp.validate()?;
    for &seed in &cfg.seeds {
        let dir = seed_dir(&cfg.out, seed);
        in_repeat(seed, || {
            let split = make_gender_split(&ds, cfg.side, seed, &exp.gender_split)?;
            let (model, log) = train_gender_model(&ds, &split.train, seed, exp, cache.as_ref())?;
            let svm = train_gender_svm(&model, &ds, &split.train, exp, cache.as_ref())?;
            std::fs::create_dir_all(&dir).map_err(|e| handid::Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            write_json(&dir.join(SPLIT_FILE), &split)?;
            log.write_csv(&dir.join(TRAIN_LOG_FILE))?;
            model.save(&dir.join(MODEL_DIR))?;
            save_bank(&svm, &dir.join(GENDER_SVM_FILE))
        })?;
        println!("seed {seed}: model saved to {}", dir.display());
    }
    Ok(())
}

pub fn eval_gender(cfg: &RunConfig) -> Result<()> {
    let ds = cfg.data.load()?;
    let cache = cache(cfg)?;
    let root = models_root(cfg);
    let mut repeats = Vec::new();
    for &seed in &cfg.seeds {
        let dir = seed_dir(root, seed);
        let split: GenderSplit = read_json(&dir.join(SPLIT_FILE), "train-gender")?;
        let model = load_model(&dir.join(MODEL_DIR), "train-gender")?;
        let svm_path = dir.join(GENDER_SVM_FILE);
        if !svm_path.exists() {
            bail!(MissingArtifact::new(&svm_path, "train-gender"));
        }
        let svm = load_bank(&svm_path)?;
        check_records(&ds, &split.train)?;
        check_records(&ds, &split.test)?;
        let eval = in_repeat(seed, || {
            evaluate_gender(&model, Some(&svm), &ds, &split.test, &cfg.experiment, cache.as_ref())
        })?;
        repeats.push(GenderRepeat { seed, eval });
    }
    let report = GenderReport::from_repeats(cfg.side, repeats);
    write_gender_csv(&cfg.out.join("gender_accuracy.csv"), &report)?;
    write_confusion_csv(&cfg.out.join("gender_confusion.csv"), &report)?;
    write_json(
        &cfg.out.join("gender_summary.json"),
        &json!({
            "side": cfg.side,
            "seeds": cfg.seeds,
            "config_hash": settings_hash(cfg)?,
            "mean_cnn_accuracy": report.mean_cnn_accuracy,
            "mean_svm_accuracy": report.mean_svm_accuracy,
            "mean_cnn_confusion": report.mean_cnn_confusion,
            "mean_svm_confusion": report.mean_svm_confusion,
            "repeats": report.repeats,
        }),
    )?;
    println!(
        "{} side: CNN {:.4}, SVM {:.4} mean accuracy over {} repeat(s)",
        cfg.side,
        report.mean_cnn_accuracy,
        report.mean_svm_accuracy,
        report.repeats.len()
    );
    Ok(())
}

fn check_records(ds: &Dataset, idx: &[usize]) -> Result<()> {
    if let Some(&bad) = idx.iter().find(|&&i| i >= ds.len()) {
        bail!("split refers to record {bad} but the dataset has {} records", ds.len());
    }
    Ok(())
}

/// Mean confusion matrices, rows predicted and columns true class.
fn write_confusion_csv(path: &Path, report: &GenderReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["method", "predicted", "true_male", "true_female"])?;
    for (method, m) in [("cnn", &report.mean_cnn_confusion), ("svm", &report.mean_svm_confusion)] {
        for (row, name) in m.iter().zip(["male", "female"]) {
            w.write_record([method.to_string(), name.to_string(), row[0].to_string(), row[1].to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn train_id(cfg: &RunConfig) -> Result<()> {
    let ds = cfg.data.load()?;
    let cache = cache(cfg)?;
    let exp = &cfg.experiment;
    exp.validate()?;
    for &seed in &cfg.seeds {
        let dir = seed_dir(&cfg.out, seed);
        let split = in_repeat(seed, || make_id_split(&ds, cfg.side, cfg.subjects, seed, &exp.id_split))?;
        let model = match &cfg.models {
            Some(root) => load_model(&seed_dir(root, seed).join(MODEL_DIR), "train-gender")?,
            None => in_repeat(seed, || train_gender_model(&ds, &split.train, seed, exp, cache.as_ref()))?.0,
        };
        in_repeat(seed, || {
            let labels: Vec<u32> = split.train.iter().map(|&i| ds.records()[i].subject_id).collect();
            let views = extract_views(&model, &ds, &split.train, exp, cache.as_ref())?;
            let classifier = train_id_classifier(&views, &labels, cfg.fusion, exp)?;
            std::fs::create_dir_all(&dir).map_err(|e| handid::Error::Io {
                path: dir.clone(),
                source: e,
            })?;
            write_json(&dir.join(SPLIT_FILE), &split)?;
            model.save(&dir.join(MODEL_DIR))?;
            classifier.save(&dir.join(ID_SVM_FILE))
        })?;
        println!("seed {seed}: {} SVMs saved to {}", split.subjects.len(), dir.display());
    }
    Ok(())
}

pub fn eval_id(cfg: &RunConfig) -> Result<()> {
    let ds = cfg.data.load()?;
    let cache = cache(cfg)?;
    let root = models_root(cfg);
    let mut repeats = Vec::new();
    let mut mode = cfg.fusion;
    let mut n_subjects = cfg.subjects;
    for &seed in &cfg.seeds {
        let dir = seed_dir(root, seed);
        let split: IdSplit = read_json(&dir.join(SPLIT_FILE), "train-id")?;
        check_records(&ds, &split.test)?;
        let model = load_model(&dir.join(MODEL_DIR), "train-id")?;
        let svm_path = dir.join(ID_SVM_FILE);
        if !svm_path.exists() {
            bail!(MissingArtifact::new(&svm_path, "train-id"));
        }
        let classifier = IdClassifier::load(&svm_path)?;
        mode = classifier.mode();
        n_subjects = split.subjects.len();
        repeats.push(in_repeat(seed, || {
            let labels: Vec<u32> = split.test.iter().map(|&i| ds.records()[i].subject_id).collect();
            let views = extract_views(&model, &ds, &split.test, &cfg.experiment, cache.as_ref())?;
            evaluate_id(&classifier, &views, &labels, &cfg.experiment.sweep, seed)
        })?);
    }
    let report = IdReport::from_repeats(cfg.side, n_subjects, mode, repeats, &cfg.experiment.sweep)?;
    let out = &cfg.out;
    write_accuracy_csv(&out.join("id_accuracy.csv"), &report)?;
    write_threshold_csv(&out.join("far_frr.csv"), &report.report)?;
    write_roc_csv(&out.join("roc.csv"), &report.report)?;
    let header = column_header(n_subjects, cfg.side);
    write_json(
        &out.join("id_summary.json"),
        &json!({
            "column": header,
            "fusion": mode,
            "side": cfg.side,
            "subjects": n_subjects,
            "seeds": cfg.seeds,
            "config_hash": settings_hash(cfg)?,
            "mean_accuracy": report.mean_accuracy,
            "mean_view_accuracy": report.mean_view_accuracy,
            "threshold_scope": "fused",
            "eer": report.report.eer,
            "dense_eer": report.dense_eer,
            "auc": report.report.roc.auc,
            "repeats": report.repeats.iter().map(|r| json!({
                "seed": r.seed,
                "accuracy": r.accuracy,
                "view_accuracy": r.view_accuracy,
                "eer": r.report.eer,
                "auc": r.report.roc.auc,
            })).collect::<Vec<_>>(),
        }),
    )?;
    if cfg.svg {
        let roc = &report.report.roc;
        write_svg(
            &out.join("roc.svg"),
            "ROC",
            "false positive rate",
            &[("tpr", roc.fpr.iter().copied().zip(roc.tpr.iter().copied()).collect())],
        )?;
        let c = &report.report.curve;
        write_svg(
            &out.join("far_frr.svg"),
            "FAR / FRR",
            "threshold",
            &[
                ("far", c.thresholds.iter().copied().zip(c.far.iter().copied()).collect()),
                ("frr", c.thresholds.iter().copied().zip(c.frr.iter().copied()).collect()),
            ],
        )?;
    }
    println!(
        "{header}: mean identification accuracy {:.4}, EER {:.4} (dense grid {:.4}), AUC {:.4}",
        report.mean_accuracy,
        report.report.eer.rate,
        report.dense_eer.rate,
        report.report.roc.auc
    );
    Ok(())
}
