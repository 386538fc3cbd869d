//! Soft-margin SVM dual solved one coordinate at a time.
//!
//! The bias is folded into the kernel as `K + kappa`, which removes the
//! equality constraint of the usual dual; the remaining box-constrained
//! problem is solved by repeatedly updating the worst KKT violator.

use serde::{Deserialize, Serialize};

use super::kernel::Kernel;
use super::platt::Platt;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmParams {
    pub kernel: Kernel,
    pub c_box: f64,
    /// Stop once the largest KKT violation falls below this.
    pub tol: f64,
    /// Iteration cap, in multiples of the training-set size.
    pub max_passes: usize,
    /// Constant added to the kernel in place of an explicit bias.
    pub kappa: f64,
}

impl SvmParams {
    pub fn new(kernel: Kernel) -> Self {
        SvmParams {
            kernel,
            c_box: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
            kappa: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        if !(self.c_box > 0.0 && self.c_box.is_finite()) {
            return Err(Error::Parameter(format!("box constraint {} must be positive", self.c_box)));
        }
        if !(self.tol > 0.0) {
            return Err(Error::Parameter("tolerance must be positive".into()));
        }
        if !(self.kappa >= 0.0) {
            return Err(Error::Parameter("kernel constant must be nonnegative".into()));
        }
        if self.max_passes == 0 {
            return Err(Error::Parameter("max_passes must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub c_box: f64,
    pub support_vectors: Vec<Vec<f64>>,
    /// `α_i · y_i` for each support vector.
    pub coefficients: Vec<f64>,
    pub bias: f64,
    pub platt: Option<Platt>,
    /// Largest KKT violation at exit.
    pub max_violation: f64,
    pub converged: bool,
}

impl SvmModel {
    pub fn dim(&self) -> Option<usize> {
        self.support_vectors.first().map(|v| v.len())
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.coefficients.iter().map(|c| c.abs()).collect()
    }

    /// `Σ α_i y_i k(x_i, x) + b`.
    pub fn decision_value(&self, x: &[f64]) -> Result<f64> {
        if let Some(d) = self.dim() {
            if d != x.len() {
                return Err(Error::Shape(format!(
                    "model expects {d}-dimensional input, got {}",
                    x.len()
                )));
            }
        }
        Ok(self
            .support_vectors
            .iter()
            .zip(&self.coefficients)
            .map(|(sv, c)| c * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias)
    }

    /// Log of the calibrated positive-class posterior.
    pub fn log_posterior(&self, x: &[f64]) -> Result<f64> {
        let platt = self
            .platt
            .ok_or_else(|| Error::State("SVM posterior calibration has not been fitted".into()))?;
        Ok(platt.log_posterior(self.decision_value(x)?))
    }

    pub fn predict(&self, x: &[f64]) -> Result<i8> {
        Ok(if self.decision_value(x)? >= 0.0 { 1 } else { -1 })
    }
}

pub(crate) fn check_features(x: &[Vec<f64>]) -> Result<usize> {
    let dim = x.first().map(|r| r.len()).unwrap_or(0);
    for (i, row) in x.iter().enumerate() {
        if row.len() != dim {
            return Err(Error::Shape(format!(
                "row {i} has {} features, expected {dim}",
                row.len()
            )));
        }
        if row.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data(format!("row {i} has a non-finite feature")));
        }
    }
    Ok(dim)
}

pub(crate) fn check_labels(y: &[i8]) -> Result<()> {
    if y.iter().any(|&l| l != 1 && l != -1) {
        return Err(Error::Label("labels must be +1 or -1".into()));
    }
    if !y.contains(&1) || !y.contains(&-1) {
        return Err(Error::Label("training needs both +1 and -1 examples".into()));
    }
    Ok(())
}

/// Trains on all rows of `x`.
pub fn train_binary(x: &[Vec<f64>], y: &[i8], params: &SvmParams) -> Result<SvmModel> {
    params.validate()?;
    if x.len() != y.len() {
        return Err(Error::Shape(format!("{} rows but {} labels", x.len(), y.len())));
    }
    check_labels(y)?;
    check_features(x)?;
    let gram = params.kernel.gram(x);
    let idx: Vec<usize> = (0..x.len()).collect();
    Ok(solve(x, &gram, x.len(), &idx, y, params))
}

/// Solves on the subset `idx` of rows whose full Gram matrix (`n × n`) is
/// given; `y` is indexed like `idx`. Inputs are assumed checked.
pub(crate) fn solve(
    x: &[Vec<f64>],
    gram: &[f64],
    n: usize,
    idx: &[usize],
    y: &[i8],
    params: &SvmParams,
) -> SvmModel {
    let m = idx.len();
    let kappa = params.kappa;
    let c = params.c_box;
    let yf: Vec<f64> = y.iter().map(|&l| l as f64).collect();
    let q = |a: usize, b: usize| yf[a] * yf[b] * (gram[idx[a] * n + idx[b]] + kappa);
    let mut alpha = vec![0.0; m];
    // gradient of Σα − ½αᵀQα
    let mut grad = vec![1.0; m];
    let violation = |a: f64, g: f64| {
        if g > 0.0 && a < c {
            g
        } else if g < 0.0 && a > 0.0 {
            -g
        } else {
            0.0
        }
    };
    let max_iter = params.max_passes.saturating_mul(m.max(1));
    let mut worst = 0.0;
    let mut converged = false;
    for _ in 0..max_iter {
        let (mut best, mut best_v) = (0, 0.0);
        for i in 0..m {
            let v = violation(alpha[i], grad[i]);
            if v > best_v {
                best = i;
                best_v = v;
            }
        }
        worst = best_v;
        if best_v < params.tol {
            converged = true;
            break;
        }
        let qii = q(best, best);
        let new = if qii > 0.0 {
            (alpha[best] + grad[best] / qii).clamp(0.0, c)
        } else if grad[best] > 0.0 {
            c
        } else {
            0.0
        };
        let delta = new - alpha[best];
        alpha[best] = new;
        for (j, g) in grad.iter_mut().enumerate() {
            *g -= delta * q(best, j);
        }
    }
    if !converged {
        worst = (0..m).map(|i| violation(alpha[i], grad[i])).fold(0.0, f64::max);
        converged = worst < params.tol;
    }

    let support: Vec<usize> = (0..m).filter(|&i| alpha[i] > 0.0).collect();
    let coef_sum: f64 = support.iter().map(|&i| alpha[i] * yf[i]).sum();
    // bias from on-margin vectors: y_i − Σ α_j y_j K_ij
    let free: Vec<usize> = support
        .iter()
        .copied()
        .filter(|&i| alpha[i] < c * (1.0 - 1e-9))
        .collect();
    let bias = if free.is_empty() {
        kappa * coef_sum
    } else {
        free.iter()
            .map(|&i| {
                let s: f64 = support
                    .iter()
                    .map(|&j| alpha[j] * yf[j] * gram[idx[i] * n + idx[j]])
                    .sum();
                yf[i] - s
            })
            .sum::<f64>()
            / free.len() as f64
    };
    SvmModel {
        kernel: params.kernel,
        c_box: c,
        support_vectors: support.iter().map(|&i| x[idx[i]].clone()).collect(),
        coefficients: support.iter().map(|&i| alpha[i] * yf[i]).collect(),
        bias,
        platt: None,
        max_violation: worst,
        converged,
    }
}
