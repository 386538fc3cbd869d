//! Texture descriptors and the feature-vector type shared by the SVM views.

mod lbp;
mod vector;

pub use lbp::{lbp_code, lbp_histogram, uniform_bin, Interpolation, LbpParams, UNIFORM_BINS};
pub use vector::{read_feature_csv, write_feature_csv, FeatureSource, FeatureVector};
