//! Threshold sweeps over log-posterior scores: FAR/FRR, EER and ROC/AUC.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Increasing acceptance thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdSweep {
    pub thresholds: Vec<f64>,
}

impl ThresholdSweep {
    /// `log(0.9) + k·0.01` for the eleven in-range `k`, then `log(1) = 0`.
    pub fn paper() -> Self {
        let start = 0.9f64.ln();
        let mut thresholds: Vec<f64> = (0..=10).map(|k| start + k as f64 * 0.01).collect();
        thresholds.push(0.0);
        ThresholdSweep { thresholds }
    }

    pub fn custom(thresholds: Vec<f64>) -> Result<Self> {
        if thresholds.is_empty() {
            return Err(Error::Config("threshold sweep is empty".into()));
        }
        if thresholds.iter().any(|t| !t.is_finite()) || thresholds.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("thresholds must be finite and strictly increasing".into()));
        }
        Ok(ThresholdSweep { thresholds })
    }

    /// `n` evenly spaced thresholds from `lo` to `hi` inclusive.
    pub fn linspace(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config("a dense sweep needs two or more points".into()));
        }
        Self::custom((0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect())
    }
}

/// One comparison of a probe image against one enrolled subject.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub score: f64,
    /// Whether this subject is the probe's best-scoring one; only such
    /// trials can be accepted.
    pub is_best: bool,
}

impl Trial {
    /// A trial decided by its score alone.
    pub fn plain(score: f64) -> Self {
        Trial { score, is_best: true }
    }

    pub fn accepted(&self, t: f64) -> bool {
        self.is_best && self.score > t
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FarFrr {
    pub thresholds: Vec<f64>,
    pub far: Vec<f64>,
    pub frr: Vec<f64>,
}

fn check_trials(trials: &[Trial], what: &str) -> Result<()> {
    if trials.is_empty() {
        return Err(Error::Data(format!("no {what} trials")));
    }
    if trials.iter().any(|t| !t.score.is_finite() && t.score != f64::NEG_INFINITY) {
        return Err(Error::Data(format!("non-finite {what} score")));
    }
    Ok(())
}

/// FAR = accepted impostor trials / impostor trials; FRR = genuine trials
/// not accepted / genuine trials.
pub fn far_frr(genuine: &[Trial], impostor: &[Trial], sweep: &ThresholdSweep) -> Result<FarFrr> {
    check_trials(genuine, "genuine")?;
    check_trials(impostor, "impostor")?;
    let (mut far, mut frr) = (Vec::new(), Vec::new());
    for &t in &sweep.thresholds {
        let fa = impostor.iter().filter(|x| x.accepted(t)).count();
        let ga = genuine.iter().filter(|x| x.accepted(t)).count();
        far.push(fa as f64 / impostor.len() as f64);
        frr.push((genuine.len() - ga) as f64 / genuine.len() as f64);
    }
    Ok(FarFrr {
        thresholds: sweep.thresholds.clone(),
        far,
        frr,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Eer {
    pub rate: f64,
    pub threshold: f64,
    /// No crossing on the grid; `rate` is the mean of FAR and FRR at the
    /// nearer end.
    pub extrapolated: bool,
}

/// Linear interpolation at the first grid interval where FAR − FRR turns
/// nonpositive.
pub fn eer(curve: &FarFrr) -> Eer {
    let d: Vec<f64> = curve.far.iter().zip(&curve.frr).map(|(a, r)| a - r).collect();
    let t = &curve.thresholds;
    let boundary = |k: usize| Eer {
        rate: (curve.far[k] + curve.frr[k]) / 2.0,
        threshold: t[k],
        extrapolated: true,
    };
    match d.iter().position(|&v| v <= 0.0) {
        None => boundary(d.len() - 1),
        Some(0) if d[0] < 0.0 => boundary(0),
        Some(0) => Eer {
            rate: curve.far[0],
            threshold: t[0],
            extrapolated: false,
        },
        Some(k) => {
            let lambda = d[k - 1] / (d[k - 1] - d[k]);
            Eer {
                rate: curve.far[k - 1] + lambda * (curve.far[k] - curve.far[k - 1]),
                threshold: t[k - 1] + lambda * (t[k] - t[k - 1]),
                extrapolated: false,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Roc {
    pub fpr: Vec<f64>,
    pub tpr: Vec<f64>,
    pub auc: f64,
}

/// ROC with a threshold at every distinct score (positive when
/// `score ≥ threshold`) and the trapezoidal area under it.
pub fn roc_auc(genuine: &[f64], impostor: &[f64]) -> Result<Roc> {
    if genuine.is_empty() || impostor.is_empty() {
        return Err(Error::Data("ROC needs genuine and impostor scores".into()));
    }
    if genuine.iter().chain(impostor).any(|s| s.is_nan() || *s == f64::INFINITY) {
        return Err(Error::Data("non-finite score".into()));
    }
    let mut all: Vec<(f64, bool)> = genuine
        .iter()
        .map(|&s| (s, true))
        .chain(impostor.iter().map(|&s| (s, false)))
        .collect();
    all.sort_by(|a, b| b.0.total_cmp(&a.0));
    let (p, n) = (genuine.len() as u128, impostor.len() as u128);
    let (mut tp, mut fp) = (0u128, 0u128);
    let mut fpr = vec![0.0];
    let mut tpr = vec![0.0];
    // twice the area, in units of 1/(p·n)
    let mut area2: u128 = 0;
    let mut i = 0;
    while i < all.len() {
        let s = all[i].0;
        let (tp0, fp0) = (tp, fp);
        while i < all.len() && all[i].0 == s {
            if all[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        area2 += (fp - fp0) * (tp + tp0);
        fpr.push(fp as f64 / n as f64);
        tpr.push(tp as f64 / p as f64);
    }
    Ok(Roc {
        fpr,
        tpr,
        auc: area2 as f64 / (2 * p * n) as f64,
    })
}

/// Threshold table, EER and ROC for one set of trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub curve: FarFrr,
    pub eer: Eer,
    pub roc: Roc,
}

pub fn error_report(genuine: &[Trial], impostor: &[Trial], sweep: &ThresholdSweep) -> Result<ErrorReport> {
    let curve = far_frr(genuine, impostor, sweep)?;
    let eer = eer(&curve);
    let g: Vec<f64> = genuine.iter().map(|t| t.score).collect();
    let i: Vec<f64> = impostor.iter().map(|t| t.score).collect();
    Ok(ErrorReport {
        roc: roc_auc(&g, &i)?,
        curve,
        eer,
    })
}
