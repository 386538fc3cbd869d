//! One-against-all banks, multi-view ensembles and sum-rule fusion.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::isda::{check_features, solve, SvmModel, SvmParams};
use super::platt::platt_fit_values;
use super::scaler::Standardizer;
use crate::error::{Error, Result};
use crate::features::{FeatureSource, FeatureVector};

/// Number of folds used to produce out-of-fold decision values for
/// calibration.
pub const CALIBRATION_FOLDS: usize = 3;

/// One calibrated binary model per class, each trained class-vs-rest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OvaBank {
    pub params: SvmParams,
    pub classes: Vec<u32>,
    pub scaler: Standardizer,
    pub models: Vec<SvmModel>,
}

impl OvaBank {
    pub fn len(&self) -> usize {
        self.models.len()
    }

    pub fn is_empty(&self) -> bool {
        self.models.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.scaler.dim()
    }

    /// Calibrated log-posterior of every class, in `classes` order.
    pub fn log_posteriors(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaler.transform(x)?;
        self.models.iter().map(|m| m.log_posterior(&z)).collect()
    }

    pub fn decision_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        let z = self.scaler.transform(x)?;
        self.models.iter().map(|m| m.decision_value(&z)).collect()
    }

    /// Index and label of the best-scoring class.
    pub fn predict(&self, x: &[f64]) -> Result<(usize, u32)> {
        let i = argmax_lowest(&self.log_posteriors(x)?);
        Ok((i, self.classes[i]))
    }
}

/// Trains the bank. Features are standardized with statistics of `x`
/// when `standardize` is set.
pub fn train_one_vs_all(
    x: &[Vec<f64>],
    labels: &[u32],
    params: &SvmParams,
    standardize: bool,
) -> Result<OvaBank> {
    params.validate()?;
    if x.len() != labels.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), labels.len())));
    }
    let dim = check_features(x)?;
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(Error::Label("one-against-all training needs at least two classes".into()));
    }
    for &c in &classes {
        let n = labels.iter().filter(|&&l| l == c).count();
        if n < 2 {
            return Err(Error::Data(format!(
                "subject {c} has {n} training example(s); at least 2 are needed"
            )));
        }
    }
    let scaler = if standardize {
        Standardizer::fit(x)?
    } else {
        Standardizer::identity(dim)
    };
    let z = x
        .iter()
        .map(|r| scaler.transform(r))
        .collect::<Result<Vec<_>>>()?;
    let gram = params.kernel.gram(&z);
    let models = classes
        .par_iter()
        .map(|&c| {
            let y: Vec<i8> = labels.iter().map(|&l| if l == c { 1 } else { -1 }).collect();
            train_calibrated(&z, &gram, &y, params)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OvaBank {
        params: *params,
        classes,
        scaler,
        models,
    })
}

/// Full-data model plus a sigmoid fitted on out-of-fold decision values
/// from stratified folds.
fn train_calibrated(z: &[Vec<f64>], gram: &[f64], y: &[i8], params: &SvmParams) -> Result<SvmModel> {
    let n = z.len();
    let all: Vec<usize> = (0..n).collect();
    let mut model = solve(z, gram, n, &all, y, params);
    let mut fold = vec![0usize; n];
    let (mut pos, mut neg) = (0, 0);
    for i in 0..n {
        let counter = if y[i] == 1 { &mut pos } else { &mut neg };
        fold[i] = *counter % CALIBRATION_FOLDS;
        *counter += 1;
    }
    let mut decisions = vec![0.0; n];
    for f in 0..CALIBRATION_FOLDS {
        let train: Vec<usize> = all.iter().copied().filter(|&i| fold[i] != f).collect();
        let held: Vec<usize> = all.iter().copied().filter(|&i| fold[i] == f).collect();
        if held.is_empty() {
            continue;
        }
        let ty: Vec<i8> = train.iter().map(|&i| y[i]).collect();
        let fold_model = if ty.contains(&1) && ty.contains(&-1) {
            solve(z, gram, n, &train, &ty, params)
        } else {
            return Err(Error::Data("a calibration fold lacks one of the classes".into()));
        };
        for &i in &held {
            decisions[i] = fold_model.decision_value(&z[i])?;
        }
    }
    model.platt = Some(platt_fit_values(&decisions, y)?);
    Ok(model)
}

/// Per-class scores from one feature view.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewScores {
    pub view: FeatureSource,
    pub classes: Vec<u32>,
    pub scores: Vec<f64>,
}

/// Banks for several feature views sharing one class list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ensemble {
    pub views: Vec<(FeatureSource, OvaBank)>,
}

impl Ensemble {
    pub fn new(views: Vec<(FeatureSource, OvaBank)>) -> Result<Self> {
        let first = views
            .first()
            .ok_or_else(|| Error::Config("an ensemble needs at least one view".into()))?;
        for (source, bank) in &views[1..] {
            if bank.classes != first.1.classes {
                return Err(Error::Config(format!(
                    "view {source} has a class list different from view {}",
                    first.0
                )));
            }
        }
        Ok(Ensemble { views })
    }

    pub fn classes(&self) -> &[u32] {
        &self.views[0].1.classes
    }

    pub fn bank(&self, source: FeatureSource) -> Option<&OvaBank> {
        self.views.iter().find(|(s, _)| *s == source).map(|(_, b)| b)
    }

    /// Scores each view on the matching feature vector.
    pub fn view_scores(&self, features: &[FeatureVector]) -> Result<Vec<ViewScores>> {
        self.views
            .iter()
            .map(|(source, bank)| {
                let f = features
                    .iter()
                    .find(|f| f.source() == *source)
                    .ok_or_else(|| Error::Config(format!("no {source} feature supplied")))?;
                Ok(ViewScores {
                    view: *source,
                    classes: bank.classes.clone(),
                    scores: bank.log_posteriors(f.values())?,
                })
            })
            .collect()
    }
}

/// Index of the maximum; ties go to the lowest index.
pub fn argmax_lowest(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, s) in scores.iter().enumerate() {
        if *s > scores[best] {
            best = i;
        }
    }
    best
}

/// Per-class sum over views and the winning class index.
pub fn sum_rule_fuse(views: &[ViewScores]) -> Result<(Vec<f64>, usize)> {
    let first = views
        .first()
        .ok_or_else(|| Error::Config("nothing to fuse".into()))?;
    let mut fused = vec![0.0; first.classes.len()];
    for v in views {
        if v.classes != first.classes || v.scores.len() != first.classes.len() {
            return Err(Error::Config(format!(
                "view {} does not share the class list of view {}",
                v.view, first.view
            )));
        }
        for (f, s) in fused.iter_mut().zip(&v.scores) {
            *f += s;
        }
    }
    let best = argmax_lowest(&fused);
    Ok((fused, best))
}

/// Accepts the best class when its score strictly exceeds `t`.
pub fn threshold_accept(scores: &[f64], t: f64) -> Result<Option<usize>> {
    if scores.is_empty() {
        return Err(Error::Config("empty score vector".into()));
    }
    if t.is_nan() || t > 0.0 {
        return Err(Error::Parameter(format!("threshold {t} is not a log-probability")));
    }
    let best = argmax_lowest(scores);
    Ok((scores[best] > t).then_some(best))
}
