//! Repeated gender and identification experiments, plus the individual
//! steps they are built from so that training and evaluation can run as
//! separate commands.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::errors::{eer, error_report, far_frr, Eer, ErrorReport, ThresholdSweep, Trial};
use super::metrics::{accuracy, confusion};
use super::splits::{make_gender_split, make_id_split, GenderSplit, GenderSplitSpec, IdSplitSpec};
use crate::dataset::{preprocess_cached, Dataset, PlaneCache, Side};
use crate::error::{Error, Result};
use crate::features::{lbp_histogram, FeatureSource, FeatureVector, LbpParams};
use crate::imgproc::{Image, PreprocessParams};
use crate::nn::{build_two_stream, train_two_stage, Init, Preset, Sample, Tensor, TrainHyper, TrainLog};
use crate::nn::{TwoStreamConfig, TwoStreamModel};
use crate::svm::{
    argmax_lowest, load_bank, load_ensemble, save_bank, save_ensemble, sum_rule_fuse, train_one_vs_all, Ensemble,
    Kernel, OvaBank, SvmParams, ViewScores,
};
use crate::svm::io::{BANK_MAGIC, ENSEMBLE_MAGIC
};

/// Feature views scored by the identification ensemble, in order.
pub const ID_VIEWS: [FeatureSource; 4] = [
    FeatureSource::Fc9,
    FeatureSource::Fc10,
    FeatureSource::Fusion,
    FeatureSource::Lbp,
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExperimentConfig {
    pub preprocess: PreprocessParams,
    pub model: TwoStreamConfig,
    pub hyper: TrainHyper,
    pub gender_split: GenderSplitSpec,
    pub id_split: IdSplitSpec,
    /// Box constraint of every SVM.
    pub svm_c: f64,
    /// Degree of the polynomial kernel used for identification.
    pub id_kernel_degree: u32,
    pub lbp: LbpParams,
    /// LBP on the full-resolution detail luma rather than the resized
    /// network input.
    pub lbp_full_resolution: bool,
    pub sweep: ThresholdSweep,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_preset(Preset::Desk)
    }
}

impl ExperimentConfig {
    pub fn for_preset(preset: Preset) -> Self {
        ExperimentConfig {
            preprocess: match preset {
                Preset::Paper => PreprocessParams::paper(),
                Preset::Desk => PreprocessParams::desk(),
            },
            model: TwoStreamConfig::for_preset(preset),
            hyper: TrainHyper::for_preset(preset),
            gender_split: GenderSplitSpec::default(),
            id_split: IdSplitSpec::default(),
            svm_c: 1.0,
            id_kernel_degree: 2,
            lbp: LbpParams::default(),
            lbp_full_resolution: true,
            sweep: ThresholdSweep::paper(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.hyper.validate()?;
        if self.preprocess.output_size != self.model.input_size {
            return Err(Error::Config(format!(
                "preprocessing produces {0}x{0} planes but the model expects {1}x{1}",
                self.preprocess.output_size, self.model.input_size
            )));
        }
        self.svm_params(Kernel::linear()).validate()?;
        Kernel::polynomial(self.id_kernel_degree).validate()
    }

    fn svm_params(&self, kernel: Kernel) -> SvmParams {
        SvmParams {
            c_box: self.svm_c,
            ..SvmParams::new(kernel)
        }
    }

    fn hyper_for(&self, seed: u64) -> TrainHyper {
        TrainHyper {
            seed,
            ..self.hyper.clone()
        }
    }
}

/// Network input planes `(low, high)` for each record index, in order.
pub fn prepare_images(
    ds: &Dataset,
    indices: &[usize],
    params: &PreprocessParams,
    cache: Option<&PlaneCache>,
) -> Result<Vec<(Image, Image)>> {
    indices
        .par_iter()
        .map(|&i| {
            let p = preprocess_cached(&ds.load_image(i)?, params, cache)?;
            Ok((p.low, p.high))
        })
        .collect()
}

fn gender_labels(ds: &Dataset, indices: &[usize]) -> Vec<usize> {
    indices.iter().map(|&i| ds.records()[i].gender.class()).collect()
}

pub fn gender_samples(planes: &[(Image, Image)], labels: &[usize]) -> Vec<Sample> {
    planes
        .iter()
        .zip(labels)
        .map(|((low, high), &label)| Sample {
            low: Tensor::from_image(low),
            high: Tensor::from_image(high),
            label,
        })
        .collect()
}

/// Builds a freshly initialized model and runs two-stage training on the
/// given records, seeded with `seed`.
pub fn train_gender_model(
    ds: &Dataset,
    train: &[usize],
    seed: u64,
    cfg: &ExperimentConfig,
    cache: Option<&PlaneCache>,
) -> Result<(TwoStreamModel, TrainLog)> {
    let planes = prepare_images(ds, train, &cfg.preprocess, cache)?;
    let samples = gender_samples(&planes, &gender_labels(ds, train));
    drop(planes);
    let mut model = build_two_stream(cfg.model.clone(), Init::Random { seed })?;
    let log = train_two_stage(&mut model, &samples, None, &cfg.hyper_for(seed))?;
    Ok((model, log))
}

fn concat_features(model: &TwoStreamModel, planes: &[(Image, Image)]) -> Result<Vec<Vec<f64>>> {
    planes
        .par_iter()
        .map(|(low, high)| Ok(model.forward_features(low, high)?.concat().into_values()))
        .collect()
}

/// Linear one-against-all SVM on the concatenated fc9, fc10 and fusion taps.
pub fn train_gender_svm(
    model: &TwoStreamModel,
    ds: &Dataset,
    train: &[usize],
    cfg: &ExperimentConfig,
    cache: Option<&PlaneCache>,
) -> Result<OvaBank> {
    let planes = prepare_images(ds, train, &cfg.preprocess, cache)?;
    let x = concat_features(model, &planes)?;
    let labels: Vec<u32> = gender_labels(ds, train).into_iter().map(|c| c as u32).collect();
    train_one_vs_all(&x, &labels, &cfg.svm_params(Kernel::linear()), true)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderEval {
    pub cnn_accuracy: f64,
    /// Rows are predicted class, columns true class; class 0 is male.
    pub cnn_confusion: Vec<Vec<f64>>,
    pub svm_accuracy: Option<f64>,
    pub svm_confusion: Option<Vec<Vec<f64>>>,
}

pub fn evaluate_gender(
    model: &TwoStreamModel,
    svm: Option<&OvaBank>,
    ds: &Dataset,
    test: &[usize],
    cfg: &ExperimentConfig,
    cache: Option<&PlaneCache>,
) -> Result<GenderEval> {
    let planes = prepare_images(ds, test, &cfg.preprocess, cache)?;
    let labels = gender_labels(ds, test);
    let cnn: Vec<usize> = planes
        .par_iter()
        .map(|(low, high)| Ok(model.predict_gender(low, high)?.0.class()))
        .collect::<Result<_>>()?;
    let (svm_accuracy, svm_confusion) = match svm {
        Some(bank) => {
            let x = concat_features(model, &planes)?;
            let pred = x
                .iter()
                .map(|row| Ok(bank.predict(row)?.1 as usize))
                .collect::<Result<Vec<_>>>()?;
            (Some(accuracy(&pred, &labels)?), Some(confusion(&pred, &labels, 2)?))
        }
        None => (None, None),
    };
    Ok(GenderEval {
        cnn_accuracy: accuracy(&cnn, &labels)?,
        cnn_confusion: confusion(&cnn, &labels, 2)?,
        svm_accuracy,
        svm_confusion,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderRepeat {
    pub seed: u64,
    pub eval: GenderEval,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenderReport {
    pub side: Side,
    pub repeats: Vec<GenderRepeat>,
    pub mean_cnn_accuracy: f64,
    pub mean_svm_accuracy: f64,
    pub mean_cnn_confusion: Vec<Vec<f64>>,
    pub mean_svm_confusion: Vec<Vec<f64>>,
}

fn mean_matrix<'a>(ms: impl Iterator<Item = &'a Vec<Vec<f64>>>) -> Vec<Vec<f64>> {
    let mut sum = vec![vec![0.0; 2]; 2];
    let mut n = 0usize;
    for m in ms {
        for (r, row) in m.iter().enumerate() {
            for (c, v) in row.iter().enumerate() {
                sum[r][c] += v;
            }
        }
        n += 1;
    }
    sum.into_iter()
        .map(|row| row.into_iter().map(|v| v / n.max(1) as f64).collect())
        .collect()
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        s / n as f64
    }
}

/// One gender split, CNN and feature SVM per seed; a failing repeat aborts
/// the run with its seed attached.
pub fn run_gender_experiment(
    ds: &Dataset,
    side: Side,
    seeds: &[u64],
    cfg: &ExperimentConfig,
    cache: Option<&PlaneCache>,
) -> Result<GenderReport> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    let mut repeats = Vec::new();
    for &seed in seeds {
        let eval = in_repeat(seed, || {
            let split: GenderSplit = make_gender_split(ds, side, seed, &cfg.gender_split)?;
            let (model, _) = train_gender_model(ds, &split.train, seed, cfg, cache)?;
            let svm = train_gender_svm(&model, ds, &split.train, cfg, cache)?;
            evaluate_gender(&model, Some(&svm), ds, &split.test, cfg, cache)
        })?;
        repeats.push(GenderRepeat { seed, eval });
    }
    Ok(GenderReport::from_repeats(side, repeats))
}

impl GenderReport {
    pub fn from_repeats(side: Side, repeats: Vec<GenderRepeat>) -> Self {
        GenderReport {
            side,
            mean_cnn_accuracy: mean(repeats.iter().map(|r| r.eval.cnn_accuracy)),
            mean_svm_accuracy: mean(repeats.iter().filter_map(|r| r.eval.svm_accuracy)),
            mean_cnn_confusion: mean_matrix(repeats.iter().map(|r| &r.eval.cnn_confusion)),
            mean_svm_confusion: mean_matrix(repeats.iter().filter_map(|r| r.eval.svm_confusion.as_ref())),
            repeats,
        }
    }
}

/// Wraps a failure inside one repeat with that repeat's seed.
pub fn in_repeat<T>(seed: u64, f: impl FnOnce() -> Result<T>) -> Result<T> {
    f().map_err(|e| Error::Repeat {
        seed,
        source: Box::new(e),
    })
}

/// The four feature vectors of one image, in [`ID_VIEWS`] order.
pub type ImageViews = Vec<FeatureVector>;

/// Network taps and the LBP histogram of the detail luma for each record.
pub fn extract_views(
    model: &TwoStreamModel,
    ds: &Dataset,
    indices: &[usize],
    cfg: &ExperimentConfig,
    cache: Option<&PlaneCache>,
) -> Result<Vec<ImageViews>> {
    indices
        .par_iter()
        .map(|&i| {
            let p = preprocess_cached(&ds.load_image(i)?, &cfg.preprocess, cache)?;
            let taps = model.forward_features(&p.low, &p.high)?;
            let texture = if cfg.lbp_full_resolution { &p.detail } else { &p.high };
            Ok(vec![taps.fc9, taps.fc10, taps.fusion, lbp_histogram(texture, &cfg.lbp)?])
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FusionMode {
    /// One bank on the concatenation of all views.
    SingleSvm,
    /// One bank per view, fused by the sum rule.
    Ensemble,
}

impl std::str::FromStr for FusionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "single_svm" | "single-svm" => Ok(FusionMode::SingleSvm),
            "ensemble" => Ok(FusionMode::Ensemble),
            other => Err(Error::Config(format!("unknown fusion mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum IdClassifier {
    Single(OvaBank),
    Ensemble(Ensemble),
}

fn concat_views(views: &ImageViews) -> Result<FeatureVector> {
    FeatureVector::new(
        FeatureSource::Concat,
        views.iter().flat_map(|v| v.values().iter().copied()).collect(),
    )
}

impl IdClassifier {
    pub fn classes(&self) -> &[u32] {
        match self {
            IdClassifier::Single(b) => &b.classes,
            IdClassifier::Ensemble(e) => e.classes(),
        }
    }

    pub fn mode(&self) -> FusionMode {
        match self {
            IdClassifier::Single(_) => FusionMode::SingleSvm,
            IdClassifier::Ensemble(_) => FusionMode::Ensemble,
        }
    }

    /// Per-view log-posteriors for one image.
    pub fn view_scores(&self, views: &ImageViews) -> Result<Vec<ViewScores>> {
        match self {
            IdClassifier::Single(bank) => Ok(vec![ViewScores {
                view: FeatureSource::Concat,
                classes: bank.classes.clone(),
                scores: bank.log_posteriors(concat_views(views)?.values())?,
            }]),
            IdClassifier::Ensemble(e) => e.view_scores(views),
        }
    }

    /// Sum-rule fused scores divided by the number of views, so each
    /// score is the mean log-posterior and lies on the threshold scale.
    pub fn fused_scores(&self, views: &ImageViews) -> Result<(Vec<f64>, usize, Vec<ViewScores>)> {
        let per_view = self.view_scores(views)?;
        let (mut fused, best) = sum_rule_fuse(&per_view)?;
        let n = per_view.len() as f64;
        fused.iter_mut().for_each(|s| *s /= n);
        Ok((fused, best, per_view))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        match self {
            IdClassifier::Single(b) => save_bank(b, path),
            IdClassifier::Ensemble(e) => save_ensemble(e, path),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        match bytes.get(..4) {
            Some(m) if m == BANK_MAGIC => Ok(IdClassifier::Single(load_bank(path)?)),
            Some(m) if m == ENSEMBLE_MAGIC => Ok(IdClassifier::Ensemble(load_ensemble(path)?)),
            _ => Err(Error::format(path, "not an SVM bank or ensemble")),
        }
    }
}

pub fn train_id_classifier(
    views: &[ImageViews],
    labels: &[u32],
    mode: FusionMode,
    cfg: &ExperimentConfig,
) -> Result<IdClassifier> {
    let params = cfg.svm_params(Kernel::polynomial(cfg.id_kernel_degree));
    match mode {
        FusionMode::SingleSvm => {
            let x = views
                .iter()
                .map(|v| Ok(concat_views(v)?.into_values()))
                .collect::<Result<Vec<_>>>()?;
            Ok(IdClassifier::Single(train_one_vs_all(&x, labels, &params, true)?))
        }
        FusionMode::Ensemble => {
            let mut banks = Vec::new();
            for (k, source) in ID_VIEWS.iter().enumerate() {
                let x: Vec<Vec<f64>> = views.iter().map(|v| v[k].values().to_vec()).collect();
                banks.push((*source, train_one_vs_all(&x, labels, &params, true)?));
            }
            Ok(IdClassifier::Ensemble(Ensemble::new(banks)?))
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdRepeat {
    pub seed: u64,
    /// Top-1 accuracy of the fused scores.
    pub accuracy: f64,
    /// Top-1 accuracy of each view on its own.
    pub view_accuracy: Vec<(FeatureSource, f64)>,
    pub genuine: Vec<Trial>,
    pub impostor: Vec<Trial>,
    pub report: ErrorReport,
}

/// Scores every test image against every enrolled subject; the
/// true-subject trial is genuine and the rest are impostor trials.
pub fn evaluate_id(
    classifier: &IdClassifier,
    views: &[ImageViews],
    labels: &[u32],
    sweep: &ThresholdSweep,
    seed: u64,
) -> Result<IdRepeat> {
    if views.len() != labels.len() {
        return Err(Error::Shape(format!("{} images but {} labels", views.len(), labels.len())));
    }
    let classes = classifier.classes();
    let truth: Vec<usize> = labels
        .iter()
        .map(|l| {
            classes
                .iter()
                .position(|c| c == l)
                .ok_or_else(|| Error::Label(format!("subject {l} is not enrolled")))
        })
        .collect::<Result<_>>()?;
    let scored = views
        .par_iter()
        .map(|v| classifier.fused_scores(v))
        .collect::<Result<Vec<_>>>()?;
    let (mut genuine, mut impostor) = (Vec::new(), Vec::new());
    let mut fused_pred = Vec::new();
    let n_views = scored.first().map_or(0, |s| s.2.len());
    let mut view_pred = vec![Vec::new(); n_views];
    for ((fused, best, per_view), &t) in scored.iter().zip(&truth) {
        fused_pred.push(*best);
        for (k, v) in per_view.iter().enumerate() {
            view_pred[k].push(argmax_lowest(&v.scores));
        }
        for (c, &score) in fused.iter().enumerate() {
            let trial = Trial {
                score,
                is_best: c == *best,
            };
            if c == t {
                genuine.push(trial);
            } else {
                impostor.push(trial);
            }
        }
    }
    let view_accuracy = scored
        .first()
        .map(|s| s.2.iter().map(|v| v.view).collect::<Vec<_>>())
        .unwrap_or_default()
        .into_iter()
        .zip(&view_pred)
        .map(|(view, pred)| Ok((view, accuracy(pred, &truth)?)))
        .collect::<Result<_>>()?;
    Ok(IdRepeat {
        seed,
        accuracy: accuracy(&fused_pred, &truth)?,
        view_accuracy,
        report: error_report(&genuine, &impostor, sweep)?,
        genuine,
        impostor,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdReport {
    pub side: Side,
    pub n_subjects: usize,
    pub fusion: FusionMode,
    pub repeats: Vec<IdRepeat>,
    pub mean_accuracy: f64,
    pub mean_view_accuracy: Vec<(FeatureSource, f64)>,
    /// Over the trials of all repeats.
    pub report: ErrorReport,
    /// Equal error rate on 1001 evenly spaced thresholds spanning the
    /// observed scores.
    pub dense_eer: Eer,
}

impl IdReport {
    pub fn from_repeats(
        side: Side,
        n_subjects: usize,
        fusion: FusionMode,
        repeats: Vec<IdRepeat>,
        sweep: &ThresholdSweep,
    ) -> Result<Self> {
        let genuine: Vec<Trial> = repeats.iter().flat_map(|r| r.genuine.iter().copied()).collect();
        let impostor: Vec<Trial> = repeats.iter().flat_map(|r| r.impostor.iter().copied()).collect();
        let mean_view_accuracy = repeats
            .first()
            .map(|r| r.view_accuracy.iter().map(|(v, _)| *v).collect::<Vec<_>>())
            .unwrap_or_default()
            .into_iter()
            .enumerate()
            .map(|(k, v)| (v, mean(repeats.iter().map(|r| r.view_accuracy[k].1))))
            .collect();
        let (lo, hi) = genuine
            .iter()
            .chain(&impostor)
            .map(|t| t.score)
            .filter(|s| s.is_finite())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), s| (a.min(s), b.max(s)));
        let dense = if lo < hi {
            ThresholdSweep::linspace(lo, hi, 1001)?
        } else {
            ThresholdSweep::linspace(lo - 1.0, lo + 1.0, 3)?
        };
        let dense_eer = eer(&far_frr(&genuine, &impostor, &dense)?);
        Ok(IdReport {
            side,
            n_subjects,
            fusion,
            dense_eer,
            mean_accuracy: mean(repeats.iter().map(|r| r.accuracy)),
            mean_view_accuracy,
            report: error_report(&genuine, &impostor, sweep)?,
            repeats,
        })
    }
}

/// Per seed: identification split, feature extraction, SVM training and
/// scoring. Without a `model`, each repeat trains one on the gender labels
/// of its own training images.
pub fn run_id_experiment(
    ds: &Dataset,
    side: Side,
    n_subjects: usize,
    fusion: FusionMode,
    seeds: &[u64],
    cfg: &ExperimentConfig,
    cache: Option<&PlaneCache>,
    model: Option<&TwoStreamModel>,
) -> Result<IdReport> {
    cfg.validate()?;
    if seeds.is_empty() {
        return Err(Error::Config("no seeds given".into()));
    }
    let mut repeats = Vec::new();
    for &seed in seeds {
        repeats.push(in_repeat(seed, || {
            let split = make_id_split(ds, side, n_subjects, seed, &cfg.id_split)?;
            let owned;
            let model = match model {
                Some(m) => m,
                None => {
                    owned = train_gender_model(ds, &split.train, seed, cfg, cache)?.0;
                    &owned
                }
            };
            let subject = |idx: &[usize]| -> Vec<u32> { idx.iter().map(|&i| ds.records()[i].subject_id).collect() };
            let train_views = extract_views(model, ds, &split.train, cfg, cache)?;
            let classifier = train_id_classifier(&train_views, &subject(&split.train), fusion, cfg)?;
            let test_views = extract_views(model, ds, &split.test, cfg, cache)?;
            evaluate_id(&classifier, &test_views, &subject(&split.test), &cfg.sweep, seed)
        })?);
    }
    IdReport::from_repeats(side, n_subjects, fusion, repeats, &cfg.sweep)
}
