//! Two-stage SGD-with-momentum training: each stream alone under a
//! temporary two-way head, then the whole network jointly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::layers::{
    backward_chain, forward_chain, softmax_xent, softmax_xent_backward, Layer, LayerKind, Mode,
    ParamGroup,
};
use super::model::{kaiming_init, Preset, StreamId, TwoStreamModel};
use super::Tensor;
use crate::error::{Error, Result};

/// Inclusive epoch bounds: training never stops before `min` and never runs
/// past `max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EpochRange {
    pub min: usize,
    pub max: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHyper {
    pub lr_pretrained: f64,
    pub lr_new: f64,
    pub momentum: f64,
    pub batch: usize,
    pub epochs_stage1: EpochRange,
    pub epochs_joint: EpochRange,
    /// Relative epoch-loss improvement below which training has converged.
    pub tolerance: f64,
    pub seed: u64,
}

impl TrainHyper {
    pub fn paper() -> Self {
        TrainHyper {
            lr_pretrained: 1e-4,
            lr_new: 0.002,
            momentum: 0.9,
            batch: 64,
            epochs_stage1: EpochRange { min: 15, max: 20 },
            epochs_joint: EpochRange { min: 7, max: 9 },
            tolerance: 1e-4,
            seed: 0,
        }
    }

    /// Rates for training from random initialization on small inputs.
    pub fn desk() -> Self {
        TrainHyper {
            lr_pretrained: 0.01,
            lr_new: 0.01,
            batch: 32,
            ..Self::paper()
        }
    }

    pub fn for_preset(preset: Preset) -> Self {
        match preset {
            Preset::Paper => Self::paper(),
            Preset::Desk => Self::desk(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lr_pretrained > 0.0 && self.lr_new > 0.0) {
            return Err(Error::Parameter("learning rates must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::Parameter(format!(
                "momentum {} outside [0, 1)",
                self.momentum
            )));
        }
        if self.batch == 0 {
            return Err(Error::Parameter("batch size must be positive".into()));
        }
        for (name, r) in [("stage1", self.epochs_stage1), ("joint", self.epochs_joint)] {
            if r.min == 0 || r.min > r.max {
                return Err(Error::Parameter(format!(
                    "{name} epoch range {}..={} is empty",
                    r.min, r.max
                )));
            }
        }
        if !(self.tolerance >= 0.0) {
            return Err(Error::Parameter("tolerance must be nonnegative".into()));
        }
        Ok(())
    }

    pub fn rate(&self, group: ParamGroup) -> f64 {
        match group {
            ParamGroup::Pretrained => self.lr_pretrained,
            ParamGroup::New => self.lr_new,
        }
    }
}

/// Per-layer learning rates in [`TwoStreamModel::layers`] order.
pub fn learning_rates(model: &TwoStreamModel, hyper: &TrainHyper) -> Vec<f64> {
    model.layers().iter().map(|l| hyper.rate(l.group)).collect()
}

/// One labeled input pair; `low` is `[3, s, s]`, `high` is `[1, s, s]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub low: Tensor,
    pub high: Tensor,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRow {
    pub stage: String,
    pub epoch: usize,
    pub split: String,
    pub loss: f64,
    pub accuracy: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<LogRow>,
}

impl TrainLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("stage,epoch,split,loss,accuracy\n");
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{},{}", r.stage, r.epoch, r.split, r.loss, r.accuracy);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }

    /// Last row of a stage and split.
    pub fn last(&self, stage: &str, split: &str) -> Option<&LogRow> {
        self.rows.iter().rev().find(|r| r.stage == stage && r.split == split)
    }
}

/// Heavy-ball SGD: `v = μv − λg; θ = θ + v`.
#[derive(Debug, Clone, Default)]
pub struct SgdMomentum {
    momentum: f64,
    velocity: Vec<Vec<Tensor>>,
}

impl SgdMomentum {
    pub fn new(momentum: f64) -> Self {
        SgdMomentum {
            momentum,
            velocity: Vec::new(),
        }
    }

    /// Applies one update; `grads` and `rates` follow the order of `layers`.
    pub fn step(&mut self, layers: &mut [&mut Layer], grads: &[Vec<Tensor>], rates: &[f64]) -> Result<()> {
        if grads.len() != layers.len() || rates.len() != layers.len() {
            return Err(Error::Shape("gradient list does not match the layers".into()));
        }
        if self.velocity.is_empty() {
            self.velocity = layers
                .iter()
                .map(|l| l.params.iter().map(|p| Tensor::zeros(p.shape())).collect())
                .collect();
        }
        for (i, layer) in layers.iter_mut().enumerate() {
            if grads[i].len() != layer.params.len() {
                return Err(Error::Shape(format!("layer {} gradient count mismatch", layer.name)));
            }
            for (j, param) in layer.params.iter_mut().enumerate() {
                let v = self.velocity[i][j].data_mut();
                let g = grads[i][j].data();
                if g.len() != v.len() {
                    return Err(Error::Shape(format!("layer {} gradient shape mismatch", layer.name)));
                }
                for ((p, v), g) in param.data_mut().iter_mut().zip(v.iter_mut()).zip(g) {
                    *v = self.momentum * *v - rates[i] * g;
                    *p += *v;
                }
            }
        }
        Ok(())
    }
}

struct Outcome {
    loss: f64,
    correct: bool,
    grads: Vec<Vec<Tensor>>,
}

fn argmax_is(probs: &Tensor, label: usize) -> bool {
    let p = probs.data();
    let best = (0..p.len()).fold(0, |b, i| if p[i] > p[b] { i } else { b });
    best == label
}

trait Net: Sync {
    fn layers_mut(&mut self) -> Vec<&mut Layer>;
    fn groups(&self) -> Vec<ParamGroup>;
    fn run(&self, sample: &Sample, mode: Mode, rng: &mut dyn RngCore, grads: bool) -> Result<Outcome>;
}

struct StageNet {
    stream: Vec<Layer>,
    head: Layer,
    which: StreamId,
}

impl Net for StageNet {
    fn layers_mut(&mut self) -> Vec<&mut Layer> {
        self.stream.iter_mut().chain([&mut self.head]).collect()
    }

    fn groups(&self) -> Vec<ParamGroup> {
        self.stream.iter().chain([&self.head]).map(|l| l.group).collect()
    }

    fn run(&self, sample: &Sample, mode: Mode, rng: &mut dyn RngCore, grads: bool) -> Result<Outcome> {
        let input = match self.which {
            StreamId::Low => &sample.low,
            StreamId::High => &sample.high,
        };
        let (features, traces) = forward_chain(&self.stream, input, mode, rng)?;
        let (logits, head_trace) = self.head.forward(&features, mode, rng)?;
        let (probs, loss) = softmax_xent(&logits, sample.label)?;
        let correct = argmax_is(&probs, sample.label);
        if !grads {
            return Ok(Outcome {
                loss,
                correct,
                grads: Vec::new(),
            });
        }
        let g = softmax_xent_backward(&probs, sample.label);
        let (g, head_grads) = self.head.backward(&head_trace, &g)?;
        let (_, mut all) = backward_chain(&self.stream, &traces, g)?;
        all.push(head_grads);
        Ok(Outcome {
            loss,
            correct,
            grads: all,
        })
    }
}

impl Net for TwoStreamModel {
    fn layers_mut(&mut self) -> Vec<&mut Layer> {
        TwoStreamModel::layers_mut(self)
    }

    fn groups(&self) -> Vec<ParamGroup> {
        self.layers().iter().map(|l| l.group).collect()
    }

    fn run(&self, sample: &Sample, mode: Mode, rng: &mut dyn RngCore, grads: bool) -> Result<Outcome> {
        let pass = self.forward(&sample.low, &sample.high, mode, rng)?;
        if !grads {
            let (probs, loss) = softmax_xent(&pass.logits, sample.label)?;
            return Ok(Outcome {
                loss,
                correct: argmax_is(&probs, sample.label),
                grads: Vec::new(),
            });
        }
        let (loss, probs, grads) = self.backward(&pass, sample.label)?;
        Ok(Outcome {
            loss,
            correct: argmax_is(&probs, sample.label),
            grads,
        })
    }
}

/// Runs `f` on each index with its own seeded RNG, in parallel chunks, and
/// hands the results back in index order.
fn map_ordered<T: Send>(
    indices: &[usize],
    seeds: &[u64],
    f: impl Fn(usize, &mut ChaCha8Rng) -> Result<T> + Sync,
    mut sink: impl FnMut(T) -> Result<()>,
) -> Result<()> {
    let chunk = rayon::current_num_threads().max(1);
    for (idx, sd) in indices.chunks(chunk).zip(seeds.chunks(chunk)) {
        let results: Vec<Result<T>> = idx
            .par_iter()
            .zip(sd.par_iter())
            .map(|(&i, &s)| f(i, &mut ChaCha8Rng::seed_from_u64(s)))
            .collect();
        for r in results {
            sink(r?)?;
        }
    }
    Ok(())
}

fn evaluate<N: Net>(net: &N, data: &[Sample]) -> Result<(f64, f64)> {
    let indices: Vec<usize> = (0..data.len()).collect();
    let seeds = vec![0u64; data.len()];
    let (mut loss, mut correct) = (0.0, 0usize);
    map_ordered(
        &indices,
        &seeds,
        |i, rng| net.run(&data[i], Mode::Eval, rng, false),
        |o| {
            loss += o.loss;
            correct += o.correct as usize;
            Ok(())
        },
    )?;
    let n = data.len() as f64;
    Ok((loss / n, correct as f64 / n))
}

fn check_data(data: &[Sample]) -> Result<()> {
    if data.is_empty() {
        return Err(Error::Data("training set is empty".into()));
    }
    for s in data {
        if s.label > 1 {
            return Err(Error::Label(format!("label {} is not 0 or 1", s.label)));
        }
    }
    Ok(())
}

fn fit<N: Net>(
    net: &mut N,
    data: &[Sample],
    validation: Option<&[Sample]>,
    hyper: &TrainHyper,
    epochs: EpochRange,
    stage: &str,
    seed: u64,
    log: &mut TrainLog,
) -> Result<()> {
    hyper.validate()?;
    check_data(data)?;
    let rates: Vec<f64> = net.groups().into_iter().map(|g| hyper.rate(g)).collect();
    let mut opt = SgdMomentum::new(hyper.momentum);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut previous: Option<f64> = None;
    for epoch in 1..=epochs.max {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        for batch in order.chunks(hyper.batch) {
            let seeds: Vec<u64> = batch.iter().map(|_| rng.next_u64()).collect();
            let mut sum: Option<Vec<Vec<Tensor>>> = None;
            let shared: &N = net;
            map_ordered(
                batch,
                &seeds,
                |i, r| shared.run(&data[i], Mode::Train, r, true),
                |o| {
                    total += o.loss;
                    match sum.as_mut() {
                        None => sum = Some(o.grads),
                        Some(acc) => {
                            for (a, g) in acc.iter_mut().flatten().zip(o.grads.iter().flatten()) {
                                a.add_assign(g);
                            }
                        }
                    }
                    Ok(())
                },
            )?;
            let mut grads = sum.expect("batches are nonempty");
            let k = 1.0 / batch.len() as f64;
            grads.iter_mut().flatten().for_each(|g| g.scale(k));
            if grads.iter().flatten().any(|g| !g.all_finite()) {
                return Err(Error::Training {
                    epoch,
                    reason: "non-finite gradient".into(),
                });
            }
            opt.step(&mut net.layers_mut(), &grads, &rates)?;
        }
        if !(total / data.len() as f64).is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("minibatch loss became {}", total / data.len() as f64),
            });
        }
        // dropout-free pass over the training set for the logged metrics
        let (loss, accuracy) = evaluate(net, data)?;
        if !loss.is_finite() {
            return Err(Error::Training {
                epoch,
                reason: format!("loss became {loss}"),
            });
        }
        log.rows.push(LogRow {
            stage: stage.to_string(),
            epoch,
            split: "train".into(),
            loss,
            accuracy,
        });
        if let Some(val) = validation.filter(|v| !v.is_empty()) {
            let (vl, va) = evaluate(net, val)?;
            log.rows.push(LogRow {
                stage: stage.to_string(),
                epoch,
                split: "val".into(),
                loss: vl,
                accuracy: va,
            });
        }
        if let Some(prev) = previous {
            let improvement = (prev - loss) / prev.abs().max(f64::MIN_POSITIVE);
            if epoch >= epochs.min && improvement < hyper.tolerance {
                break;
            }
        }
        previous = Some(loss);
    }
    Ok(())
}

fn stage_name(stream: StreamId) -> &'static str {
    match stream {
        StreamId::Low => "stage1-low",
        StreamId::High => "stage1-high",
    }
}

/// Trains one stream under a temporary fc→2 head, which is discarded.
pub fn train_stage1(
    model: &mut TwoStreamModel,
    stream: StreamId,
    data: &[Sample],
    validation: Option<&[Sample]>,
    hyper: &TrainHyper,
    log: &mut TrainLog,
) -> Result<()> {
    let in_dim = model.config().stream(stream).output_dim();
    let mut head = Layer::new("stage1_head", LayerKind::Fc { in_dim, out_dim: 2 }, ParamGroup::New);
    let salt = match stream {
        StreamId::Low => 0x5157_0001,
        StreamId::High => 0x5157_0002,
    };
    kaiming_init(&mut head, &mut ChaCha8Rng::seed_from_u64(hyper.seed ^ salt));
    let mut net = StageNet {
        stream: std::mem::take(model.stream_mut(stream)),
        head,
        which: stream,
    };
    let result = fit(
        &mut net,
        data,
        validation,
        hyper,
        hyper.epochs_stage1,
        stage_name(stream),
        hyper.seed ^ (salt << 8),
        log,
    );
    *model.stream_mut(stream) = net.stream;
    result
}

/// End-to-end training of every layer, starting from the current weights.
pub fn train_joint(
    model: &mut TwoStreamModel,
    data: &[Sample],
    validation: Option<&[Sample]>,
    hyper: &TrainHyper,
    log: &mut TrainLog,
) -> Result<()> {
    fit(
        model,
        data,
        validation,
        hyper,
        hyper.epochs_joint,
        "joint",
        hyper.seed ^ 0x4a4f_494e_5400,
        log,
    )
}

/// Both stage-1 runs followed by joint training; marks the model trained.
pub fn train_two_stage(
    model: &mut TwoStreamModel,
    data: &[Sample],
    validation: Option<&[Sample]>,
    hyper: &TrainHyper,
) -> Result<TrainLog> {
    let mut log = TrainLog::default();
    train_stage1(model, StreamId::Low, data, validation, hyper, &mut log)?;
    train_stage1(model, StreamId::High, data, validation, hyper, &mut log)?;
    train_joint(model, data, validation, hyper, &mut log)?;
    model.mark_trained();
    Ok(log)
}

/// Eval-mode mean loss and accuracy of the full model.
pub fn evaluate_model(model: &TwoStreamModel, data: &[Sample]) -> Result<(f64, f64)> {
    check_data(data)?;
    evaluate(model, data)
}
