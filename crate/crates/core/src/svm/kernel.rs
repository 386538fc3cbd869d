use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelKind {
    Linear,
    Polynomial,
}

/// `⟨x,z⟩` or `(scale·⟨x,z⟩ + offset)^degree`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kernel {
    pub kind: KernelKind,
    pub degree: u32,
    pub scale: f64,
    pub offset: f64,
}

impl Kernel {
    pub fn linear() -> Self {
        Kernel {
            kind: KernelKind::Linear,
            degree: 1,
            scale: 1.0,
            offset: 0.0,
        }
    }

    pub fn polynomial(degree: u32) -> Self {
        Kernel {
            kind: KernelKind::Polynomial,
            degree,
            scale: 1.0,
            offset: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.degree < 1 {
            return Err(Error::Parameter("polynomial degree must be at least 1".into()));
        }
        if !self.scale.is_finite() || !self.offset.is_finite() {
            return Err(Error::Parameter("kernel scale and offset must be finite".into()));
        }
        Ok(())
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
        match self.kind {
            KernelKind::Linear => dot,
            KernelKind::Polynomial => (self.scale * dot + self.offset).powi(self.degree as i32),
        }
    }

    /// Dense symmetric Gram matrix, row-major.
    pub fn gram(&self, rows: &[Vec<f64>]) -> Vec<f64> {
        let n = rows.len();
        let mut k = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(&rows[i], &rows[j]);
                k[i * n + j] = v;
                k[j * n + i] = v;
            }
        }
        k
    }
}
