//! Kernel SVMs trained coordinate-wise on the dual, sigmoid-calibrated to
//! log-posteriors, organized into one-against-all banks and fused across
//! feature views by the sum rule.

pub mod io;
mod isda;
mod kernel;
mod ova;
mod platt;
mod scaler;

pub use io::{load_bank, load_ensemble, save_bank, save_ensemble, write_scores_csv, ScoreRow};
pub use isda::{train_binary, SvmModel, SvmParams};
pub use kernel::{Kernel, KernelKind};
pub use ova::{
    argmax_lowest, sum_rule_fuse, threshold_accept, train_one_vs_all, Ensemble, OvaBank, ViewScores,
    CALIBRATION_FOLDS,
};
pub use platt::{platt_fit, platt_fit_values, Platt};
pub use scaler::Standardizer;
