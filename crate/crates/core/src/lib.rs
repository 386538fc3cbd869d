//! Hand-image biometrics: edge-preserving preprocessing, a two-stream
//! convolutional network, LBP texture features, one-against-all SVM
//! ensembles with sum-rule fusion, and the FAR/FRR/EER/ROC evaluation
//! protocols used to score them.

mod codec;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod imgproc;
pub mod nn;
pub mod svm;

pub use error::{Error, Result};
