//! Sigmoid calibration of decision values, `p(y=1|f) = 1/(1+exp(A·f+B))`,
//! fitted by Newton's method with backtracking on the smoothed-target
//! likelihood.

use serde::{Deserialize, Serialize};

use super::isda::SvmModel;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Platt {
    pub a: f64,
    pub b: f64,
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

impl Platt {
    pub fn posterior(&self, f: f64) -> f64 {
        let z = self.a * f + self.b;
        if z >= 0.0 {
            let e = (-z).exp();
            e / (1.0 + e)
        } else {
            1.0 / (1.0 + z.exp())
        }
    }

    /// `ln p(y=1|f)`; never positive.
    pub fn log_posterior(&self, f: f64) -> f64 {
        -softplus(self.a * f + self.b)
    }

    /// `ln p(y=-1|f)`.
    pub fn log_complement(&self, f: f64) -> f64 {
        -softplus(-(self.a * f + self.b))
    }
}

/// Fits the sigmoid to decision values and ±1 labels.
pub fn platt_fit_values(decisions: &[f64], labels: &[i8]) -> Result<Platt> {
    if decisions.len() != labels.len() {
        return Err(Error::Shape(format!(
            "{} decision values but {} labels",
            decisions.len(),
            labels.len()
        )));
    }
    let prior1 = labels.iter().filter(|&&l| l == 1).count() as f64;
    let prior0 = labels.iter().filter(|&&l| l == -1).count() as f64;
    if prior1 == 0.0 || prior0 == 0.0 || prior0 + prior1 != labels.len() as f64 {
        return Err(Error::Label(
            "calibration needs both +1 and -1 examples and nothing else".into(),
        ));
    }
    if decisions.iter().any(|d| !d.is_finite()) {
        return Err(Error::Data("non-finite decision value".into()));
    }
    let hi = (prior1 + 1.0) / (prior1 + 2.0);
    let lo = 1.0 / (prior0 + 2.0);
    let targets: Vec<f64> = labels.iter().map(|&l| if l == 1 { hi } else { lo }).collect();
    let objective = |a: f64, b: f64| -> f64 {
        decisions
            .iter()
            .zip(&targets)
            .map(|(f, t)| {
                let z = f * a + b;
                if z >= 0.0 {
                    t * z + (-z).exp().ln_1p()
                } else {
                    (t - 1.0) * z + z.exp().ln_1p()
                }
            })
            .sum()
    };
    let (mut a, mut b) = (0.0, ((prior0 + 1.0) / (prior1 + 1.0)).ln());
    let mut fval = objective(a, b);
    let sigma = 1e-12;
    for _ in 0..100 {
        let (mut h11, mut h22, mut h21, mut g1, mut g2) = (sigma, sigma, 0.0, 0.0, 0.0);
        for (f, t) in decisions.iter().zip(&targets) {
            let z = f * a + b;
            let (p, q) = if z >= 0.0 {
                let e = (-z).exp();
                (e / (1.0 + e), 1.0 / (1.0 + e))
            } else {
                let e = z.exp();
                (1.0 / (1.0 + e), e / (1.0 + e))
            };
            let d2 = p * q;
            h11 += f * f * d2;
            h22 += d2;
            h21 += f * d2;
            let d1 = t - p;
            g1 += f * d1;
            g2 += d1;
        }
        if g1.abs() < 1e-5 && g2.abs() < 1e-5 {
            break;
        }
        let det = h11 * h22 - h21 * h21;
        let da = -(h22 * g1 - h21 * g2) / det;
        let db = -(-h21 * g1 + h11 * g2) / det;
        let gd = g1 * da + g2 * db;
        let mut step = 1.0;
        while step >= 1e-10 {
            let (na, nb) = (a + step * da, b + step * db);
            let nf = objective(na, nb);
            if nf < fval + 1e-4 * step * gd {
                a = na;
                b = nb;
                fval = nf;
                break;
            }
            step /= 2.0;
        }
        if step < 1e-10 {
            break;
        }
    }
    Ok(Platt { a, b })
}

/// Fits calibration for `model` on held-out data.
pub fn platt_fit(model: &SvmModel, x_holdout: &[Vec<f64>], y_holdout: &[i8]) -> Result<Platt> {
    let decisions = x_holdout
        .iter()
        .map(|x| model.decision_value(x))
        .collect::<Result<Vec<_>>>()?;
    platt_fit_values(&decisions, y_holdout)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn log_posterior_arithmetic() {
        let p = Platt { a: -1.0, b: 0.0 };
        // p = 0.9 at f = ln 9
        let f = 9f64.ln();
        assert!((p.posterior(f) - 0.9).abs() < 1e-12);
        assert!((p.log_posterior(f) - (-0.10536)).abs() < 1e-5);
        assert!(p.log_posterior(1e6) <= 0.0);
        assert!(p.log_posterior(1e6).abs() < 1e-12);
        assert!(p.log_posterior(-1e6).is_finite());
    }

    #[test]
    fn single_class_holdout_rejected() {
        assert!(matches!(
            platt_fit_values(&[1.0, 2.0], &[1, 1]),
            Err(Error::Label(_))
        ));
    }
}
