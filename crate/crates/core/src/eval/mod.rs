//! Evaluation protocols: seeded splits, accuracy and confusion matrices,
//! FAR/FRR/EER and ROC over log-posterior scores, and the repeated
//! gender and identification experiments.

mod errors;
mod experiment;
mod metrics;
mod report;
mod splits;

pub use errors::{eer, error_report, far_frr, roc_auc, Eer, ErrorReport, FarFrr, Roc, ThresholdSweep, Trial};
pub use experiment::{
    evaluate_gender, evaluate_id, extract_views, gender_samples, in_repeat, prepare_images, run_gender_experiment,
    run_id_experiment, train_gender_model, train_gender_svm, train_id_classifier, ExperimentConfig, FusionMode,
    GenderEval, GenderRepeat, GenderReport, IdClassifier, IdRepeat, IdReport, ImageViews, ID_VIEWS,
};
pub use metrics::{accuracy, confusion, confusion_counts};
pub use report::{
    config_hash, column_header, write_accuracy_csv, write_gender_csv, write_json, write_roc_csv,
    write_threshold_csv,
};
pub use splits::{
    make_gender_split, make_id_split, GenderSplit, GenderSplitSpec, IdSplit, IdSplitSpec, ID_SUBJECT_COUNTS,
};
