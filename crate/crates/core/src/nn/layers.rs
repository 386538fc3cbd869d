//! Layer kinds with exact forward and backward passes. Layers act on a
//! single example; batching happens in the trainer.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::Tensor;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

/// Learning-rate group of a parameterized layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ParamGroup {
    /// Backbone layers that a pretrained network would supply.
    Pretrained,
    /// Layers appended for dimensionality reduction, fusion and the head.
    New,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum LayerKind {
    /// Cross-correlation over a `[C, H, W]` input with square kernels.
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        pad: usize,
    },
    Relu,
    MaxPool {
        kernel: usize,
        stride: usize,
    },
    /// Pooling along a flat feature vector.
    AvgPool1d {
        kernel: usize,
        stride: usize,
    },
    /// `y = xW + b` with `W` of shape `[in_dim, out_dim]`; any input whose
    /// element count is `in_dim` is flattened first.
    Fc {
        in_dim: usize,
        out_dim: usize,
    },
    Dropout {
        rate: f64,
    },
}

impl LayerKind {
    pub fn param_shapes(&self) -> Vec<Vec<usize>> {
        match *self {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                ..
            } => vec![vec![out_channels, in_channels, kernel, kernel], vec![out_channels]],
            LayerKind::Fc { in_dim, out_dim } => vec![vec![in_dim, out_dim], vec![out_dim]],
            _ => Vec::new(),
        }
    }

    /// Number of inputs feeding each output unit, for fan-in initialization.
    pub fn fan_in(&self) -> usize {
        match *self {
            LayerKind::Conv2d {
                in_channels, kernel, ..
            } => in_channels * kernel * kernel,
            LayerKind::Fc { in_dim, .. } => in_dim,
            _ => 0,
        }
    }

    pub fn output_shape(&self, input: &[usize]) -> Result<Vec<usize>> {
        match *self {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                pad,
            } => {
                let [c, h, w] = input else {
                    return Err(Error::Shape(format!("conv2d expects [C,H,W], got {input:?}")));
                };
                if *c != in_channels {
                    return Err(Error::Shape(format!(
                        "conv2d expects {in_channels} input channels, got {c}"
                    )));
                }
                if stride == 0 || h + 2 * pad < kernel || w + 2 * pad < kernel {
                    return Err(Error::Shape(format!(
                        "conv2d kernel {kernel} (pad {pad}, stride {stride}) does not fit {h}x{w}"
                    )));
                }
                Ok(vec![
                    out_channels,
                    (h + 2 * pad - kernel) / stride + 1,
                    (w + 2 * pad - kernel) / stride + 1,
                ])
            }
            LayerKind::MaxPool { kernel, stride } => {
                let [c, h, w] = input else {
                    return Err(Error::Shape(format!("maxpool expects [C,H,W], got {input:?}")));
                };
                if stride == 0 || kernel == 0 || *h < kernel || *w < kernel {
                    return Err(Error::Shape(format!(
                        "maxpool {kernel}/{stride} does not fit {h}x{w}"
                    )));
                }
                Ok(vec![*c, (h - kernel) / stride + 1, (w - kernel) / stride + 1])
            }
            LayerKind::AvgPool1d { kernel, stride } => {
                let n: usize = input.iter().product();
                if stride == 0 || kernel == 0 || n < kernel {
                    return Err(Error::Shape(format!(
                        "avgpool1d {kernel}/{stride} does not fit length {n}"
                    )));
                }
                Ok(vec![(n - kernel) / stride + 1])
            }
            LayerKind::Fc { in_dim, out_dim } => {
                let n: usize = input.iter().product();
                if n != in_dim {
                    return Err(Error::Shape(format!(
                        "fc expects {in_dim} inputs, got {n} ({input:?})"
                    )));
                }
                Ok(vec![out_dim])
            }
            LayerKind::Relu => Ok(input.to_vec()),
            LayerKind::Dropout { rate } => {
                check_rate(rate)?;
                Ok(input.to_vec())
            }
        }
    }
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::Parameter(format!(
            "dropout rate must lie in [0, 1), got {rate}"
        )));
    }
    Ok(())
}

/// What a forward call leaves behind for the matching backward call.
#[derive(Debug, Clone)]
pub struct Trace {
    input: Tensor,
    mode: Mode,
    /// Dropout keep-mask, already scaled by `1/(1-rate)`.
    mask: Option<Vec<f64>>,
    /// Flat input index of each max-pool winner.
    argmax: Option<Vec<usize>>,
}

impl Trace {
    pub fn input(&self) -> &Tensor {
        &self.input
    }

    /// Trace for a backward call that never saw a forward pass; dropout in
    /// train mode will refuse it.
    pub fn detached(input: Tensor, mode: Mode) -> Self {
        Trace {
            input,
            mode,
            mask: None,
            argmax: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub name: String,
    pub kind: LayerKind,
    pub group: ParamGroup,
    /// `[weight, bias]` for conv and fc, empty otherwise.
    pub params: Vec<Tensor>,
}

impl Layer {
    /// A layer with zero-initialized parameters.
    pub fn new(name: impl Into<String>, kind: LayerKind, group: ParamGroup) -> Self {
        let params = kind.param_shapes().iter().map(|s| Tensor::zeros(s)).collect();
        Layer {
            name: name.into(),
            kind,
            group,
            params,
        }
    }

    pub fn has_params(&self) -> bool {
        !self.params.is_empty()
    }

    pub fn forward(&self, input: &Tensor, mode: Mode, rng: &mut dyn RngCore) -> Result<(Tensor, Trace)> {
        let out_shape = self.kind.output_shape(input.shape())?;
        let mut trace = Trace {
            input: input.clone(),
            mode,
            mask: None,
            argmax: None,
        };
        let out = match self.kind {
            LayerKind::Conv2d { .. } => self.conv_forward(input, out_shape),
            LayerKind::Relu => {
                let data = input.data().iter().map(|v| v.max(0.0)).collect();
                Tensor::new(out_shape, data)?
            }
            LayerKind::MaxPool { kernel, stride } => {
                let (out, argmax) = maxpool_forward(input, kernel, stride, out_shape);
                trace.argmax = Some(argmax);
                out
            }
            LayerKind::AvgPool1d { kernel, stride } => {
                let x = input.data();
                let data = (0..out_shape[0])
                    .map(|o| x[o * stride..o * stride + kernel].iter().sum::<f64>() / kernel as f64)
                    .collect();
                Tensor::new(out_shape, data)?
            }
            LayerKind::Fc { in_dim, out_dim } => {
                let (w, b) = (self.params[0].data(), self.params[1].data());
                let mut y = b.to_vec();
                for (i, &xi) in input.data().iter().enumerate().take(in_dim) {
                    if xi == 0.0 {
                        continue;
                    }
                    let row = &w[i * out_dim..(i + 1) * out_dim];
                    for (yj, wij) in y.iter_mut().zip(row) {
                        *yj += xi * wij;
                    }
                }
                Tensor::new(out_shape, y)?
            }
            LayerKind::Dropout { rate } => match mode {
                Mode::Eval => input.clone(),
                Mode::Train => {
                    let keep = 1.0 / (1.0 - rate);
                    let mask: Vec<f64> = (0..input.len())
                        .map(|_| if rng.random::<f64>() < rate { 0.0 } else { keep })
                        .collect();
                    let data = input.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
                    trace.mask = Some(mask);
                    Tensor::new(out_shape, data)?
                }
            },
        };
        Ok((out, trace))
    }

    /// Returns the gradient with respect to the input and, for conv and fc,
    /// `[d_weight, d_bias]`.
    pub fn backward(&self, trace: &Trace, upstream: &Tensor) -> Result<(Tensor, Vec<Tensor>)> {
        let input = &trace.input;
        let out_shape = self.kind.output_shape(input.shape())?;
        if upstream.shape() != out_shape.as_slice() {
            return Err(Error::Shape(format!(
                "{}: upstream gradient {:?} does not match output {:?}",
                self.name,
                upstream.shape(),
                out_shape
            )));
        }
        let g = upstream.data();
        match self.kind {
            LayerKind::Conv2d { .. } => Ok(self.conv_backward(input, upstream)),
            LayerKind::Relu => {
                let data = input
                    .data()
                    .iter()
                    .zip(g)
                    .map(|(x, gi)| if *x > 0.0 { *gi } else { 0.0 })
                    .collect();
                Ok((Tensor::new(input.shape().to_vec(), data)?, vec![]))
            }
            LayerKind::MaxPool { .. } => {
                let argmax = trace.argmax.as_ref().ok_or_else(|| {
                    Error::State(format!("{}: backward without a forward pass", self.name))
                })?;
                let mut dx = Tensor::zeros(input.shape());
                for (gi, &idx) in g.iter().zip(argmax) {
                    dx.data_mut()[idx] += gi;
                }
                Ok((dx, vec![]))
            }
            LayerKind::AvgPool1d { kernel, stride } => {
                let mut dx = Tensor::zeros(input.shape());
                for (o, gi) in g.iter().enumerate() {
                    for v in &mut dx.data_mut()[o * stride..o * stride + kernel] {
                        *v += gi / kernel as f64;
                    }
                }
                Ok((dx, vec![]))
            }
            LayerKind::Fc { in_dim, out_dim } => {
                let w = self.params[0].data();
                let x = input.data();
                let mut dw = vec![0.0; in_dim * out_dim];
                let mut dx = vec![0.0; in_dim];
                for i in 0..in_dim {
                    let row = &w[i * out_dim..(i + 1) * out_dim];
                    dx[i] = row.iter().zip(g).map(|(a, b)| a * b).sum();
                    if x[i] != 0.0 {
                        for (d, gj) in dw[i * out_dim..(i + 1) * out_dim].iter_mut().zip(g) {
                            *d = x[i] * gj;
                        }
                    }
                }
                Ok((
                    Tensor::new(input.shape().to_vec(), dx)?,
                    vec![Tensor::new(vec![in_dim, out_dim], dw)?, upstream.clone()],
                ))
            }
            LayerKind::Dropout { .. } => match trace.mode {
                Mode::Eval => Ok((upstream.clone(), vec![])),
                Mode::Train => {
                    let mask = trace.mask.as_ref().ok_or_else(|| {
                        Error::State(format!(
                            "{}: dropout backward without the mask of its forward pass",
                            self.name
                        ))
                    })?;
                    let data = g.iter().zip(mask).map(|(a, m)| a * m).collect();
                    Ok((Tensor::new(input.shape().to_vec(), data)?, vec![]))
                }
            },
        }
    }

    fn conv_forward(&self, input: &Tensor, out_shape: Vec<usize>) -> Tensor {
        let LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
        } = self.kind
        else {
            unreachable!()
        };
        let (h, w) = (input.shape()[1], input.shape()[2]);
        let (oh, ow) = (out_shape[1], out_shape[2]);
        let x = input.data();
        let wt = self.params[0].data();
        let bias = self.params[1].data();
        let mut out = vec![0.0; out_channels * oh * ow];
        let cols = valid_ranges(w, ow, kernel, stride, pad);
        let rows = valid_ranges(h, oh, kernel, stride, pad);
        for oc in 0..out_channels {
            let plane = &mut out[oc * oh * ow..(oc + 1) * oh * ow];
            plane.iter_mut().for_each(|v| *v = bias[oc]);
            for ic in 0..in_channels {
                let xin = &x[ic * h * w..(ic + 1) * h * w];
                for ky in 0..kernel {
                    let (oy0, oy1) = rows[ky];
                    for kx in 0..kernel {
                        let wv = wt[((oc * in_channels + ic) * kernel + ky) * kernel + kx];
                        let (ox0, ox1) = cols[kx];
                        for oy in oy0..oy1 {
                            let iy = oy * stride + ky - pad;
                            let xrow = &xin[iy * w..(iy + 1) * w];
                            let orow = &mut plane[oy * ow..(oy + 1) * ow];
                            for ox in ox0..ox1 {
                                orow[ox] += wv * xrow[ox * stride + kx - pad];
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(out_shape, out).expect("conv output shape")
    }

    fn conv_backward(&self, input: &Tensor, upstream: &Tensor) -> (Tensor, Vec<Tensor>) {
        let LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride,
            pad,
        } = self.kind
        else {
            unreachable!()
        };
        let (h, w) = (input.shape()[1], input.shape()[2]);
        let (oh, ow) = (upstream.shape()[1], upstream.shape()[2]);
        let x = input.data();
        let g = upstream.data();
        let wt = self.params[0].data();
        let mut dx = vec![0.0; x.len()];
        let mut dw = vec![0.0; wt.len()];
        let mut db = vec![0.0; out_channels];
        let cols = valid_ranges(w, ow, kernel, stride, pad);
        let rows = valid_ranges(h, oh, kernel, stride, pad);
        for oc in 0..out_channels {
            let gplane = &g[oc * oh * ow..(oc + 1) * oh * ow];
            db[oc] = gplane.iter().sum();
            for ic in 0..in_channels {
                let xin = &x[ic * h * w..(ic + 1) * h * w];
                let dxin = &mut dx[ic * h * w..(ic + 1) * h * w];
                for ky in 0..kernel {
                    let (oy0, oy1) = rows[ky];
                    for kx in 0..kernel {
                        let widx = ((oc * in_channels + ic) * kernel + ky) * kernel + kx;
                        let wv = wt[widx];
                        let (ox0, ox1) = cols[kx];
                        let mut acc = 0.0;
                        for oy in oy0..oy1 {
                            let iy = oy * stride + ky - pad;
                            let grow = &gplane[oy * ow..(oy + 1) * ow];
                            for ox in ox0..ox1 {
                                let ix = iy * w + ox * stride + kx - pad;
                                acc += grow[ox] * xin[ix];
                                dxin[ix] += wv * grow[ox];
                            }
                        }
                        dw[widx] = acc;
                    }
                }
            }
        }
        (
            Tensor::new(input.shape().to_vec(), dx).expect("conv input shape"),
            vec![
                Tensor::new(self.params[0].shape().to_vec(), dw).expect("conv weight shape"),
                Tensor::vector(db),
            ],
        )
    }
}

/// For each kernel tap, the half-open range of output positions whose input
/// coordinate `o*stride + tap - pad` lands inside `[0, len)`.
fn valid_ranges(len: usize, out_len: usize, kernel: usize, stride: usize, pad: usize) -> Vec<(usize, usize)> {
    (0..kernel)
        .map(|k| {
            let lo = if k >= pad { 0 } else { (pad - k).div_ceil(stride) };
            // largest o with o*stride + k - pad <= len - 1
            let hi = if len + pad >= k + 1 {
                ((len + pad - k - 1) / stride + 1).min(out_len)
            } else {
                0
            };
            (lo.min(hi), hi)
        })
        .collect()
}

fn maxpool_forward(input: &Tensor, kernel: usize, stride: usize, out_shape: Vec<usize>) -> (Tensor, Vec<usize>) {
    let (c, h, w) = (input.shape()[0], input.shape()[1], input.shape()[2]);
    let (oh, ow) = (out_shape[1], out_shape[2]);
    let x = input.data();
    let mut out = Vec::with_capacity(c * oh * ow);
    let mut argmax = Vec::with_capacity(c * oh * ow);
    for ch in 0..c {
        for oy in 0..oh {
            for ox in 0..ow {
                let mut best = f64::NEG_INFINITY;
                let mut best_idx = 0;
                for ky in 0..kernel {
                    for kx in 0..kernel {
                        let idx = ch * h * w + (oy * stride + ky) * w + ox * stride + kx;
                        if x[idx] > best {
                            best = x[idx];
                            best_idx = idx;
                        }
                    }
                }
                out.push(best);
                argmax.push(best_idx);
            }
        }
    }
    (Tensor::new(out_shape, out).expect("pool output shape"), argmax)
}

/// Joins flat feature vectors end to end.
pub fn depth_concat(parts: &[&Tensor]) -> Tensor {
    let data = parts.iter().flat_map(|t| t.data().iter().copied()).collect();
    Tensor::vector(data)
}

/// Splits a concatenated gradient back into pieces of the given lengths.
pub fn depth_concat_backward(grad: &Tensor, sizes: &[usize]) -> Result<Vec<Tensor>> {
    if sizes.iter().sum::<usize>() != grad.len() {
        return Err(Error::Shape(format!(
            "concat gradient of length {} cannot split into {sizes:?}",
            grad.len()
        )));
    }
    let mut offset = 0;
    Ok(sizes
        .iter()
        .map(|&n| {
            let part = Tensor::vector(grad.data()[offset..offset + n].to_vec());
            offset += n;
            part
        })
        .collect())
}

pub fn softmax(logits: &Tensor) -> Tensor {
    let max = logits.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.data().iter().map(|v| (v - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    Tensor::vector(exp.into_iter().map(|e| e / sum).collect())
}

/// Class probabilities and the cross-entropy loss `-log p[label]`.
pub fn softmax_xent(logits: &Tensor, label: usize) -> Result<(Tensor, f64)> {
    if label >= logits.len() {
        return Err(Error::Label(format!(
            "label {label} out of range for {} classes",
            logits.len()
        )));
    }
    let max = logits.data().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let log_sum = logits.data().iter().map(|v| (v - max).exp()).sum::<f64>().ln() + max;
    let loss = log_sum - logits.data()[label];
    Ok((softmax(logits), loss))
}

/// Gradient of the cross-entropy loss with respect to the logits.
pub fn softmax_xent_backward(probs: &Tensor, label: usize) -> Tensor {
    let mut g = probs.clone();
    g.data_mut()[label] -= 1.0;
    g
}

/// Runs a layer chain and keeps every trace.
pub fn forward_chain(
    layers: &[Layer],
    input: &Tensor,
    mode: Mode,
    rng: &mut dyn RngCore,
) -> Result<(Tensor, Vec<Trace>)> {
    let mut traces = Vec::with_capacity(layers.len());
    let mut x = input.clone();
    for layer in layers {
        let (y, trace) = layer.forward(&x, mode, rng)?;
        traces.push(trace);
        x = y;
    }
    Ok((x, traces))
}

/// Backpropagates through a chain; parameter gradients are returned per
/// layer, empty for parameter-free layers.
pub fn backward_chain(
    layers: &[Layer],
    traces: &[Trace],
    upstream: Tensor,
) -> Result<(Tensor, Vec<Vec<Tensor>>)> {
    let mut grads = vec![Vec::new(); layers.len()];
    let mut g = upstream;
    for (i, (layer, trace)) in layers.iter().zip(traces).enumerate().rev() {
        let (dx, pg) = layer.backward(trace, &g)?;
        grads[i] = pg;
        g = dx;
    }
    Ok((g, grads))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(0)
    }

    #[test]
    fn scalar_fc() {
        let mut fc = Layer::new("fc", LayerKind::Fc { in_dim: 1, out_dim: 1 }, ParamGroup::New);
        fc.params[0].data_mut()[0] = 3.0;
        fc.params[1].data_mut()[0] = -0.5;
        let (y, _) = fc.forward(&Tensor::vector(vec![2.0]), Mode::Eval, &mut rng()).unwrap();
        assert_eq!(y.data(), &[5.5]);
    }

    #[test]
    fn relu_forward_and_flat_backward() {
        let relu = Layer::new("relu", LayerKind::Relu, ParamGroup::New);
        let (y, trace) = relu.forward(&Tensor::vector(vec![-1.0, 2.0]), Mode::Eval, &mut rng()).unwrap();
        assert_eq!(y.data(), &[0.0, 2.0]);
        let (dx, _) = relu.backward(&trace, &Tensor::vector(vec![1.0, 1.0])).unwrap();
        assert_eq!(dx.data(), &[0.0, 1.0]);
    }

    #[test]
    fn conv_matches_hand_cross_correlation() {
        let mut conv = Layer::new(
            "conv",
            LayerKind::Conv2d {
                in_channels: 1,
                out_channels: 1,
                kernel: 2,
                stride: 1,
                pad: 0,
            },
            ParamGroup::Pretrained,
        );
        conv.params[0] = Tensor::new(vec![1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let x = Tensor::new(vec![1, 3, 3], (1..=9).map(f64::from).collect()).unwrap();
        let (y, _) = conv.forward(&x, Mode::Eval, &mut rng()).unwrap();
        let xs = x.data();
        let mut expected = vec![];
        for oy in 0..2 {
            for ox in 0..2 {
                let mut s = 0.0;
                for ky in 0..2 {
                    for kx in 0..2 {
                        s += conv.params[0].data()[ky * 2 + kx] * xs[(oy + ky) * 3 + ox + kx];
                    }
                }
                expected.push(s);
            }
        }
        assert_eq!(y.shape(), &[1, 2, 2]);
        assert_eq!(y.data(), expected.as_slice());
        assert_eq!(y.data(), &[37.0, 47.0, 67.0, 77.0]);
    }

    #[test]
    fn fc_weight_gradient_is_outer_product() {
        let fc = Layer::new("fc", LayerKind::Fc { in_dim: 3, out_dim: 2 }, ParamGroup::New);
        let x = Tensor::vector(vec![1.0, -2.0, 0.5]);
        let (_, trace) = fc.forward(&x, Mode::Eval, &mut rng()).unwrap();
        let g = Tensor::vector(vec![0.3, -1.5]);
        let (_, pg) = fc.backward(&trace, &g).unwrap();
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(pg[0].data()[i * 2 + j], x.data()[i] * g.data()[j]);
            }
        }
        assert_eq!(pg[1].data(), g.data());
    }

    #[test]
    fn dropout_modes() {
        let drop = Layer::new("drop", LayerKind::Dropout { rate: 0.5 }, ParamGroup::New);
        let x = Tensor::vector(vec![1.0; 1000]);
        let (y, _) = drop.forward(&x, Mode::Eval, &mut rng()).unwrap();
        assert_eq!(y, x);
        let (y, trace) = drop.forward(&x, Mode::Train, &mut rng()).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
        let zeros = y.data().iter().filter(|&&v| v == 0.0).count();
        assert!((400..600).contains(&zeros));
        let (dx, _) = drop.backward(&trace, &Tensor::vector(vec![1.0; 1000])).unwrap();
        assert_eq!(dx, y);
    }

    #[test]
    fn dropout_without_mask_is_a_state_error() {
        let drop = Layer::new("drop", LayerKind::Dropout { rate: 0.5 }, ParamGroup::New);
        let x = Tensor::vector(vec![1.0; 4]);
        let trace = Trace::detached(x.clone(), Mode::Train);
        assert!(matches!(drop.backward(&trace, &x), Err(Error::State(_))));
    }

    #[test]
    fn bad_dropout_rate() {
        let drop = Layer::new("drop", LayerKind::Dropout { rate: 1.0 }, ParamGroup::New);
        let x = Tensor::vector(vec![1.0; 4]);
        assert!(matches!(drop.forward(&x, Mode::Train, &mut rng()), Err(Error::Parameter(_))));
    }

    #[test]
    fn shape_mismatch() {
        let fc = Layer::new("fc", LayerKind::Fc { in_dim: 3, out_dim: 2 }, ParamGroup::New);
        assert!(matches!(
            fc.forward(&Tensor::vector(vec![1.0; 4]), Mode::Eval, &mut rng()),
            Err(Error::Shape(_))
        ));
    }

    #[test]
    fn avgpool_halves_length() {
        let pool = Layer::new("pool", LayerKind::AvgPool1d { kernel: 2, stride: 2 }, ParamGroup::New);
        let (y, _) = pool
            .forward(&Tensor::vector(vec![1.0, 3.0, 5.0, 7.0]), Mode::Eval, &mut rng())
            .unwrap();
        assert_eq!(y.data(), &[2.0, 6.0]);
    }

    #[test]
    fn softmax_is_a_distribution() {
        let (p, loss) = softmax_xent(&Tensor::vector(vec![1000.0, -3.0, 2.0]), 0).unwrap();
        assert!((p.data().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(loss.abs() < 1e-12);
    }
}
