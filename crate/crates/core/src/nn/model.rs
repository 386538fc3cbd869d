//! Two-stream architecture: a low-frequency color stream and a
//! detail-layer luma stream, each a conv stack followed by fully connected
//! reduction layers, joined by a fusion layer, average pooling and a
//! two-way softmax head.

use std::fs;
use std::path::Path;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::archive::{DType, TensorArchive};
use super::layers::{
    backward_chain, depth_concat, depth_concat_backward, forward_chain, softmax_xent,
    softmax_xent_backward, Layer, LayerKind, Mode, ParamGroup, Trace,
};
use super::Tensor;
use crate::dataset::Gender;
use crate::error::{Error, Result};
use crate::features::{FeatureSource, FeatureVector};
use crate::imgproc::{Image, LUMA_COEFFS};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Preset {
    Paper,
    Desk,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PoolSpec {
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    pub pool: Option<PoolSpec>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub in_channels: usize,
    pub convs: Vec<ConvSpec>,
    /// Widths of the backbone fc layers (fc6, fc7).
    pub backbone_fc: Vec<usize>,
    /// Widths of the appended reduction layers (fc8 onward); the last one is
    /// the stream's output and has neither activation nor dropout.
    pub reduction_fc: Vec<usize>,
}

impl StreamConfig {
    pub fn output_dim(&self) -> usize {
        *self.reduction_fc.last().expect("validated stream has reduction layers")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TwoStreamConfig {
    pub preset: Preset,
    pub input_size: usize,
    /// Low-frequency color stream.
    pub stream1: StreamConfig,
    /// Detail-layer luma stream.
    pub stream2: StreamConfig,
    pub fusion_fc_out: usize,
    pub fusion_pool: PoolSpec,
    pub dropout: f64,
    pub classes: usize,
}

fn alexnet_convs() -> Vec<ConvSpec> {
    let pool = Some(PoolSpec { kernel: 3, stride: 2 });
    let conv = |out_channels, kernel, stride, pad, pool| ConvSpec {
        out_channels,
        kernel,
        stride,
        pad,
        pool,
    };
    vec![
        conv(96, 11, 4, 2, pool),
        conv(256, 5, 1, 2, pool),
        conv(384, 3, 1, 1, None),
        conv(384, 3, 1, 1, None),
        conv(256, 3, 1, 1, pool),
    ]
}

fn desk_convs() -> Vec<ConvSpec> {
    let pool = Some(PoolSpec { kernel: 2, stride: 2 });
    vec![
        ConvSpec {
            out_channels: 8,
            kernel: 5,
            stride: 2,
            pad: 2,
            pool,
        },
        ConvSpec {
            out_channels: 16,
            kernel: 3,
            stride: 1,
            pad: 1,
            pool,
        },
    ]
}

impl TwoStreamConfig {
    /// AlexNet-shaped streams on 224x224 inputs with 2048/531 reductions.
    pub fn paper() -> Self {
        TwoStreamConfig {
            preset: Preset::Paper,
            input_size: 224,
            stream1: StreamConfig {
                in_channels: 3,
                convs: alexnet_convs(),
                backbone_fc: vec![4096, 4096],
                reduction_fc: vec![2048, 531],
            },
            stream2: StreamConfig {
                in_channels: 1,
                convs: alexnet_convs(),
                backbone_fc: vec![4096, 4096],
                reduction_fc: vec![2048, 2048, 531],
            },
            fusion_fc_out: 1062,
            fusion_pool: PoolSpec { kernel: 2, stride: 2 },
            dropout: 0.5,
            classes: 2,
        }
    }

    /// Same topology scaled for 32x32 inputs and CPU training.
    pub fn desk() -> Self {
        TwoStreamConfig {
            preset: Preset::Desk,
            input_size: 32,
            stream1: StreamConfig {
                in_channels: 3,
                convs: desk_convs(),
                backbone_fc: vec![64, 64],
                reduction_fc: vec![32, 16],
            },
            stream2: StreamConfig {
                in_channels: 1,
                convs: desk_convs(),
                backbone_fc: vec![64, 64],
                reduction_fc: vec![32, 32, 16],
            },
            fusion_fc_out: 32,
            fusion_pool: PoolSpec { kernel: 2, stride: 2 },
            dropout: 0.0,
            classes: 2,
        }
    }

    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self::paper(),
            Preset::Desk => Self::desk(),
        }
    }

    pub fn stream(&self, id: StreamId) -> &StreamConfig {
        match id {
            StreamId::Low => &self.stream1,
            StreamId::High => &self.stream2,
        }
    }

    pub fn fusion_input_dim(&self) -> usize {
        self.stream1.output_dim() + self.stream2.output_dim()
    }

    pub fn validate(&self) -> Result<()> {
        if self.classes != 2 {
            return Err(Error::Config("the head has exactly two outputs".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.fusion_fc_out == 0 || self.fusion_fc_out < self.fusion_pool.kernel {
            return Err(Error::Config("fusion width too small for its pooling".into()));
        }
        for (name, stream) in [("stream1", &self.stream1), ("stream2", &self.stream2)] {
            if stream.convs.is_empty() || stream.backbone_fc.is_empty() || stream.reduction_fc.is_empty() {
                return Err(Error::Config(format!(
                    "{name} needs conv, backbone fc and reduction fc layers"
                )));
            }
            let mut width = *stream.backbone_fc.last().unwrap();
            for (i, &out) in stream.reduction_fc.iter().enumerate() {
                if out == 0 || out > width {
                    return Err(Error::Config(format!(
                        "{name} fc{} maps {width} -> {out}; reduction layers may not widen",
                        8 + i
                    )));
                }
                width = out;
            }
        }
        if self.stream2.in_channels != 1 {
            return Err(Error::Config("stream2 consumes a single-channel detail layer".into()));
        }
        Ok(())
    }
}

/// Collapses the color axis of first-layer filters into luma weights.
/// Input layout `[filters, 3, kh, kw]`, output `[filters, 1, kh, kw]`.
pub fn luma_init_conv1(rgb_weights: &Tensor) -> Result<Tensor> {
    let [filters, channels, kh, kw] = rgb_weights.shape() else {
        return Err(Error::Shape(format!(
            "conv1 weights must be [filters, 3, kh, kw], got {:?}",
            rgb_weights.shape()
        )));
    };
    if *channels != 3 {
        return Err(Error::Shape(format!(
            "conv1 weights need a channel axis of 3, got {channels}"
        )));
    }
    let taps = kh * kw;
    let w = rgb_weights.data();
    let mut out = Vec::with_capacity(filters * taps);
    for f in 0..*filters {
        let base = f * 3 * taps;
        for t in 0..taps {
            out.push(
                w[base + t] * LUMA_COEFFS[0]
                    + w[base + taps + t] * LUMA_COEFFS[1]
                    + w[base + 2 * taps + t] * LUMA_COEFFS[2],
            );
        }
    }
    Tensor::new(vec![*filters, 1, *kh, *kw], out)
}

fn build_stream(prefix: &str, config: &StreamConfig, input_size: usize, dropout: f64) -> Result<Vec<Layer>> {
    let mut layers = Vec::new();
    let mut shape = vec![config.in_channels, input_size, input_size];
    let push = |layers: &mut Vec<Layer>, layer: Layer, shape: &mut Vec<usize>| -> Result<()> {
        *shape = layer.kind.output_shape(shape)?;
        layers.push(layer);
        Ok(())
    };
    let mut in_channels = config.in_channels;
    for (i, conv) in config.convs.iter().enumerate() {
        let n = i + 1;
        let kind = LayerKind::Conv2d {
            in_channels,
            out_channels: conv.out_channels,
            kernel: conv.kernel,
            stride: conv.stride,
            pad: conv.pad,
        };
        push(&mut layers, Layer::new(format!("{prefix}conv{n}"), kind, ParamGroup::Pretrained), &mut shape)?;
        push(&mut layers, Layer::new(format!("{prefix}relu{n}"), LayerKind::Relu, ParamGroup::Pretrained), &mut shape)?;
        if let Some(p) = conv.pool {
            let kind = LayerKind::MaxPool {
                kernel: p.kernel,
                stride: p.stride,
            };
            push(&mut layers, Layer::new(format!("{prefix}pool{n}"), kind, ParamGroup::Pretrained), &mut shape)?;
        }
        in_channels = conv.out_channels;
    }
    let fc_count = config.backbone_fc.len() + config.reduction_fc.len();
    let widths = config.backbone_fc.iter().chain(&config.reduction_fc);
    for (i, &out_dim) in widths.enumerate() {
        let n = 6 + i;
        let group = if i < config.backbone_fc.len() {
            ParamGroup::Pretrained
        } else {
            ParamGroup::New
        };
        let in_dim = shape.iter().product();
        push(
            &mut layers,
            Layer::new(format!("{prefix}fc{n}"), LayerKind::Fc { in_dim, out_dim }, group),
            &mut shape,
        )?;
        if i + 1 < fc_count {
            push(&mut layers, Layer::new(format!("{prefix}relu{n}"), LayerKind::Relu, group), &mut shape)?;
            push(
                &mut layers,
                Layer::new(format!("{prefix}drop{n}"), LayerKind::Dropout { rate: dropout }, group),
                &mut shape,
            )?;
        }
    }
    Ok(layers)
}

/// Kaiming fan-in initialization with zero biases.
pub(crate) fn kaiming_init(layer: &mut Layer, rng: &mut dyn RngCore) {
    let fan_in = layer.kind.fan_in();
    if fan_in == 0 {
        return;
    }
    let normal = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    for v in layer.params[0].data_mut() {
        *v = normal.sample(rng);
    }
    layer.params[1].data_mut().iter_mut().for_each(|b| *b = 0.0);
}

/// Where the initial parameters come from.
#[derive(Debug, Clone)]
pub enum Init<'a> {
    Random { seed: u64 },
    /// A complete model checkpoint (names prefixed `s1.`, `s2.`, `fusion`,
    /// `head`).
    Weights(&'a Path),
    /// Single-stream 3-channel backbone weights (`conv1` .. `fc7`) shared by
    /// both streams; stream 2's first layer is luma-converted. Layers absent
    /// from the file keep their random initialization.
    Backbone { path: &'a Path, seed: u64 },
}

/// Which stream of the model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StreamId {
    Low,
    High,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TwoStreamModel {
    config: TwoStreamConfig,
    pub(crate) stream1: Vec<Layer>,
    pub(crate) stream2: Vec<Layer>,
    pub(crate) fusion: Layer,
    pub(crate) pool: Layer,
    pub(crate) head: Layer,
    trained: bool,
}

/// Everything the backward pass needs from one forward pass.
pub struct ForwardPass {
    s1_traces: Vec<Trace>,
    s2_traces: Vec<Trace>,
    fusion_trace: Trace,
    pool_trace: Trace,
    head_trace: Trace,
    pub stream1_out: Tensor,
    pub stream2_out: Tensor,
    pub fusion_out: Tensor,
    pub logits: Tensor,
}

/// Feature vectors tapped from a trained model.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTaps {
    /// Last fc of the low-frequency stream (fc9).
    pub fc9: FeatureVector,
    /// Last fc of the detail stream (fc10).
    pub fc10: FeatureVector,
    pub fusion: FeatureVector,
}

impl FeatureTaps {
    pub fn concat(&self) -> FeatureVector {
        let values = [&self.fc9, &self.fc10, &self.fusion]
            .iter()
            .flat_map(|v| v.values().iter().copied())
            .collect();
        FeatureVector::new(FeatureSource::Concat, values).expect("taps are finite")
    }

    pub fn get(&self, source: FeatureSource) -> Option<FeatureVector> {
        match source {
            FeatureSource::Fc9 => Some(self.fc9.clone()),
            FeatureSource::Fc10 => Some(self.fc10.clone()),
            FeatureSource::Fusion => Some(self.fusion.clone()),
            FeatureSource::Concat => Some(self.concat()),
            FeatureSource::Lbp => None,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct ModelMeta {
    config: TwoStreamConfig,
    trained: bool,
}

pub const MODEL_META_FILE: &str = "model.json";
pub const MODEL_WEIGHTS_FILE: &str = "weights.bin";

/// Assembles the architecture and initializes it.
pub fn build_two_stream(config: TwoStreamConfig, init: Init<'_>) -> Result<TwoStreamModel> {
    config.validate()?;
    let stream1 = build_stream("s1.", &config.stream1, config.input_size, config.dropout)?;
    let stream2 = build_stream("s2.", &config.stream2, config.input_size, config.dropout)?;
    let fusion = Layer::new(
        "fusion",
        LayerKind::Fc {
            in_dim: config.fusion_input_dim(),
            out_dim: config.fusion_fc_out,
        },
        ParamGroup::New,
    );
    let pool = Layer::new(
        "fusion_pool",
        LayerKind::AvgPool1d {
            kernel: config.fusion_pool.kernel,
            stride: config.fusion_pool.stride,
        },
        ParamGroup::New,
    );
    let pooled = pool.kind.output_shape(&[config.fusion_fc_out])?[0];
    let head = Layer::new(
        "head",
        LayerKind::Fc {
            in_dim: pooled,
            out_dim: config.classes,
        },
        ParamGroup::New,
    );
    let mut model = TwoStreamModel {
        config,
        stream1,
        stream2,
        fusion,
        pool,
        head,
        trained: false,
    };
    match init {
        Init::Random { seed } => model.randomize(seed),
        Init::Weights(path) => {
            model.randomize(0);
            model.load_weights(&TensorArchive::load(path)?)?;
        }
        Init::Backbone { path, seed } => {
            model.randomize(seed);
            model.load_backbone(&TensorArchive::load(path)?)?;
        }
    }
    Ok(model)
}

impl TwoStreamModel {
    pub fn config(&self) -> &TwoStreamConfig {
        &self.config
    }

    pub fn is_trained(&self) -> bool {
        self.trained
    }

    pub fn mark_trained(&mut self) {
        self.trained = true;
    }

    pub fn stream(&self, id: StreamId) -> &[Layer] {
        match id {
            StreamId::Low => &self.stream1,
            StreamId::High => &self.stream2,
        }
    }

    pub(crate) fn stream_mut(&mut self, id: StreamId) -> &mut Vec<Layer> {
        match id {
            StreamId::Low => &mut self.stream1,
            StreamId::High => &mut self.stream2,
        }
    }

    /// Every layer in a fixed order: stream 1, stream 2, fusion, pool, head.
    pub fn layers(&self) -> Vec<&Layer> {
        self.stream1
            .iter()
            .chain(&self.stream2)
            .chain([&self.fusion, &self.pool, &self.head])
            .collect()
    }

    pub fn layers_mut(&mut self) -> Vec<&mut Layer> {
        self.stream1
            .iter_mut()
            .chain(self.stream2.iter_mut())
            .chain([&mut self.fusion, &mut self.pool, &mut self.head])
            .collect()
    }

    pub fn parameter_count(&self) -> usize {
        self.layers()
            .iter()
            .flat_map(|l| &l.params)
            .map(|p| p.len())
            .sum()
    }

    fn randomize(&mut self, seed: u64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for layer in self.layers_mut() {
            kaiming_init(layer, &mut rng);
        }
        // the detail stream's first filters start as the luma of 3-channel
        // filters, as they would from a color backbone
        let LayerKind::Conv2d {
            out_channels,
            kernel,
            stride,
            pad,
            ..
        } = self.stream2[0].kind
        else {
            return;
        };
        let mut color = Layer::new(
            "conv1",
            LayerKind::Conv2d {
                in_channels: 3,
                out_channels,
                kernel,
                stride,
                pad,
            },
            ParamGroup::Pretrained,
        );
        kaiming_init(&mut color, &mut rng);
        self.stream2[0].params[0] = luma_init_conv1(&color.params[0]).expect("3-channel filters");
    }

    pub fn to_archive(&self) -> TensorArchive {
        let mut archive = TensorArchive::new();
        for layer in self.layers() {
            if layer.has_params() {
                archive.push(format!("{}.weight", layer.name), layer.params[0].clone());
                archive.push(format!("{}.bias", layer.name), layer.params[1].clone());
            }
        }
        archive
    }

    /// Replaces every parameter from a full checkpoint.
    pub fn load_weights(&mut self, archive: &TensorArchive) -> Result<()> {
        for layer in self.layers_mut() {
            if !layer.has_params() {
                continue;
            }
            for (slot, suffix) in ["weight", "bias"].iter().enumerate() {
                let key = format!("{}.{suffix}", layer.name);
                let tensor = archive
                    .get(&key)
                    .ok_or_else(|| Error::Load(format!("layer {}: missing {key}", layer.name)))?;
                if tensor.shape() != layer.params[slot].shape() {
                    return Err(Error::Load(format!(
                        "layer {}: {suffix} shape {:?} does not match expected {:?}",
                        layer.name,
                        tensor.shape(),
                        layer.params[slot].shape()
                    )));
                }
                layer.params[slot] = tensor.clone();
            }
        }
        Ok(())
    }

    fn load_backbone(&mut self, archive: &TensorArchive) -> Result<()> {
        for (prefix, stream) in [("s1.", StreamId::Low), ("s2.", StreamId::High)] {
            for layer in self.stream_mut(stream).iter_mut().filter(|l| l.has_params()) {
                let base = layer.name.trim_start_matches(prefix).to_string();
                if layer.group != ParamGroup::Pretrained {
                    continue;
                }
                for (slot, suffix) in ["weight", "bias"].iter().enumerate() {
                    let Some(src) = archive.get(&format!("{base}.{suffix}")) else {
                        continue;
                    };
                    let mut tensor = src.clone();
                    let luma = stream == StreamId::High
                        && slot == 0
                        && base == "conv1"
                        && tensor.shape().get(1) == Some(&3);
                    if luma {
                        tensor = luma_init_conv1(&tensor)?;
                    }
                    if tensor.shape() != layer.params[slot].shape() {
                        return Err(Error::Load(format!(
                            "layer {}: backbone {suffix} shape {:?} does not match expected {:?}",
                            layer.name,
                            src.shape(),
                            layer.params[slot].shape()
                        )));
                    }
                    layer.params[slot] = tensor;
                }
            }
        }
        Ok(())
    }

    /// Writes `model.json` (config and status) and `weights.bin` (f64).
    pub fn save(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let meta = ModelMeta {
            config: self.config.clone(),
            trained: self.trained,
        };
        let meta_path = dir.join(MODEL_META_FILE);
        fs::write(&meta_path, serde_json::to_vec_pretty(&meta)?).map_err(|e| Error::io(&meta_path, e))?;
        self.to_archive().save(&dir.join(MODEL_WEIGHTS_FILE), DType::F64)
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let meta_path = dir.join(MODEL_META_FILE);
        let bytes = fs::read(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
        let meta: ModelMeta = serde_json::from_slice(&bytes)?;
        let mut model = build_two_stream(meta.config, Init::Weights(&dir.join(MODEL_WEIGHTS_FILE)))?;
        model.trained = meta.trained;
        Ok(model)
    }

    /// Full forward pass keeping the traces for backpropagation.
    pub fn forward(&self, low: &Tensor, high: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<ForwardPass> {
        let (stream1_out, s1_traces) = forward_chain(&self.stream1, low, mode, rng)?;
        let (stream2_out, s2_traces) = forward_chain(&self.stream2, high, mode, rng)?;
        let joined = depth_concat(&[&stream1_out, &stream2_out]);
        let (fusion_out, fusion_trace) = self.fusion.forward(&joined, mode, rng)?;
        let (pooled, pool_trace) = self.pool.forward(&fusion_out, mode, rng)?;
        let (logits, head_trace) = self.head.forward(&pooled, mode, rng)?;
        Ok(ForwardPass {
            s1_traces,
            s2_traces,
            fusion_trace,
            pool_trace,
            head_trace,
            stream1_out,
            stream2_out,
            fusion_out,
            logits,
        })
    }

    /// Cross-entropy loss, class probabilities and per-layer parameter
    /// gradients (ordered as [`Self::layers`]).
    pub fn backward(&self, pass: &ForwardPass, label: usize) -> Result<(f64, Tensor, Vec<Vec<Tensor>>)> {
        let (probs, loss) = softmax_xent(&pass.logits, label)?;
        let g = softmax_xent_backward(&probs, label);
        let (g, head_grads) = self.head.backward(&pass.head_trace, &g)?;
        let (g, pool_grads) = self.pool.backward(&pass.pool_trace, &g)?;
        let (g, fusion_grads) = self.fusion.backward(&pass.fusion_trace, &g)?;
        let parts = depth_concat_backward(
            &g,
            &[pass.stream1_out.len(), pass.stream2_out.len()],
        )?;
        let mut parts = parts.into_iter();
        let g1 = parts.next().unwrap().reshape(pass.stream1_out.shape().to_vec())?;
        let g2 = parts.next().unwrap().reshape(pass.stream2_out.shape().to_vec())?;
        let (_, mut grads) = backward_chain(&self.stream1, &pass.s1_traces, g1)?;
        let (_, s2_grads) = backward_chain(&self.stream2, &pass.s2_traces, g2)?;
        grads.extend(s2_grads);
        grads.extend([fusion_grads, pool_grads, head_grads]);
        Ok((loss, probs, grads))
    }

    /// Eval-mode class probabilities, with no trained-state check.
    pub fn probabilities(&self, low: &Tensor, high: &Tensor) -> Result<Tensor> {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pass = self.forward(low, high, Mode::Eval, &mut rng)?;
        Ok(super::layers::softmax(&pass.logits))
    }

    fn require_trained(&self) -> Result<()> {
        if !self.trained {
            return Err(Error::State(
                "model has not been trained; run two-stage training or load a trained checkpoint".into(),
            ));
        }
        Ok(())
    }

    fn image_tensors(&self, low: &Image, high: &Image) -> Result<(Tensor, Tensor)> {
        let size = self.config.input_size;
        if low.dims() != (size, size, self.config.stream1.in_channels)
            || high.dims() != (size, size, self.config.stream2.in_channels)
        {
            return Err(Error::Shape(format!(
                "model expects {size}x{size} inputs, got low {:?} and high {:?}",
                low.dims(),
                high.dims()
            )));
        }
        Ok((Tensor::from_image(low), Tensor::from_image(high)))
    }

    /// Eval-mode taps from the last fc of each stream and the fusion layer.
    pub fn forward_features(&self, low: &Image, high: &Image) -> Result<FeatureTaps> {
        self.require_trained()?;
        let (low, high) = self.image_tensors(low, high)?;
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let pass = self.forward(&low, &high, Mode::Eval, &mut rng)?;
        Ok(FeatureTaps {
            fc9: FeatureVector::new(FeatureSource::Fc9, pass.stream1_out.into_data())?,
            fc10: FeatureVector::new(FeatureSource::Fc10, pass.stream2_out.into_data())?,
            fusion: FeatureVector::new(FeatureSource::Fusion, pass.fusion_out.into_data())?,
        })
    }

    /// Softmax-head prediction; ties go to the lower class index.
    pub fn predict_gender(&self, low: &Image, high: &Image) -> Result<(Gender, [f64; 2])> {
        self.require_trained()?;
        let (low, high) = self.image_tensors(low, high)?;
        let p = self.probabilities(&low, &high)?;
        let probs = [p.data()[0], p.data()[1]];
        let class = if probs[1] > probs[0] { 1 } else { 0 };
        Ok((Gender::from_class(class), probs))
    }
}
