//! Preprocessing chain for hand images: guided-filter smoothing, the
//! detail layer, luma extraction, normalization, resizing, and SSIM-based
//! frame selection.

mod color;
mod filter;
mod image;
pub mod io;
mod pipeline;
mod resize;
mod ssim;

pub use color::{detail_layer, normalize_minmax, rgb_to_luma, LUMA_COEFFS};
pub use filter::{box_mean, guided_filter, GuidedFilterParams};
pub use image::Image;
pub use pipeline::{preprocess, preprocess_full, PreprocessParams, Preprocessed};
pub use resize::resize_bilinear;
pub use ssim::{select_frames, ssim, SsimParams};
