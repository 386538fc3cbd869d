//! A small dense tensor engine with the layer set needed by the two-stream
//! network, its SGD-with-momentum trainer and the weights container.

pub mod archive;
pub mod layers;
mod model;
mod tensor;
pub mod train;

pub use archive::{DType, TensorArchive};
pub use layers::{Layer, LayerKind, Mode, ParamGroup, Trace};
pub use model::{
    build_two_stream, luma_init_conv1, ConvSpec, FeatureTaps, ForwardPass, Init,
    PoolSpec, Preset, StreamConfig, StreamId, TwoStreamConfig, TwoStreamModel, MODEL_META_FILE,
    MODEL_WEIGHTS_FILE,
};
pub use tensor::Tensor;
pub use train::{
    evaluate_model, learning_rates, train_joint, train_stage1, train_two_stage, EpochRange, LogRow,
    Sample, SgdMomentum, TrainHyper, TrainLog,
};
