//! Mini-batch SGD shared by centralized and federated training.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::models::{JointLossCfg, Network};
use crate::nncore::{predict, Module, ParamVector, Real, Sgd, Tensor};
use crate::nncore::sgd::{DEFAULT_MOMENTUM, DEFAULT_WEIGHT_DECAY};
use crate::rng::{derived_rng, Rng};
use crate::signal::Dataset;

/// Batch size used for forward-only passes.
pub const EVAL_BATCH: usize = 256;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OptimizerCfg {
    pub lr: f64,
    #[serde(default = "default_momentum")]
    pub momentum: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
    pub batch_size: usize,
}

fn default_momentum() -> f64 {
    DEFAULT_MOMENTUM
}
fn default_weight_decay() -> f64 {
    DEFAULT_WEIGHT_DECAY
}

impl OptimizerCfg {
    pub fn new(lr: f64, batch_size: usize) -> Self {
        Self { lr, momentum: DEFAULT_MOMENTUM, weight_decay: DEFAULT_WEIGHT_DECAY, batch_size }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.lr.is_finite() && self.lr >= 0.0, Config, "learning rate must be finite and non-negative");
        ensure!((0.0..1.0).contains(&self.momentum), Config, "momentum must lie in [0, 1)");
        ensure!(self.weight_decay >= 0.0, Config, "weight decay must be non-negative");
        ensure!(self.batch_size >= 2, Config, "batch size must be at least 2 (batch norm)");
        Ok(())
    }

    pub fn optimizer<T: Real>(&self) -> Sgd<T> {
        Sgd::new(self.lr, self.momentum, self.weight_decay)
    }
}

/// Network inputs for a group of samples, laid out `(2, B, L)`.
#[derive(Debug, Clone)]
pub struct Batch<T> {
    pub x: Tensor<T>,
    pub s_star: Tensor<T>,
    pub labels: Vec<usize>,
}

pub fn make_batch<T: Real>(ds: &Dataset, indices: &[usize]) -> Result<Batch<T>> {
    ensure!(!indices.is_empty(), Param, "empty batch");
    let (b, l) = (indices.len(), ds.frame_len);
    let mut x = Tensor::zeros(2, b, l);
    let mut s = Tensor::zeros(2, b, l);
    let mut labels = Vec::with_capacity(b);
    for (n, &i) in indices.iter().enumerate() {
        let sample = ds.samples.get(i).ok_or_else(|| Error::Param(format!("sample index {i} out of range")))?;
        ensure!(sample.x.len() == l && sample.s_star.len() == l, Shape, "sample {i} has wrong frame length");
        for (dst, src) in x.row_mut(0, n).iter_mut().zip(sample.x.i_row()) {
            *dst = T::from_f64(*src as f64);
        }
        for (dst, src) in x.row_mut(1, n).iter_mut().zip(sample.x.q_row()) {
            *dst = T::from_f64(*src as f64);
        }
        for (dst, src) in s.row_mut(0, n).iter_mut().zip(sample.s_star.i_row()) {
            *dst = T::from_f64(*src as f64);
        }
        for (dst, src) in s.row_mut(1, n).iter_mut().zip(sample.s_star.q_row()) {
            *dst = T::from_f64(*src as f64);
        }
        labels.push(sample.label);
    }
    Ok(Batch { x, s_star: s, labels })
}

/// Proximal pull `(mu / 2) * ||w - anchor||^2` over trainable entries.
#[derive(Debug, Clone, Copy)]
pub struct Proximal<'a, T> {
    pub mu: f64,
    pub anchor: &'a ParamVector<T>,
}

/// Adds `mu * (w - anchor)` to the gradients of trainable parameters.
pub fn add_proximal_grad<T: Real>(net: &mut impl Module<T>, prox: &Proximal<'_, T>) -> Result<()> {
    let entries = prox.anchor.layout().entries();
    let params = net.params_mut();
    ensure!(params.len() == entries.len(), Layout, "anchor has {} entries, model {}", entries.len(), params.len());
    let mu = T::from_f64(prox.mu);
    for (p, e) in params.into_iter().zip(entries) {
        ensure!(p.name == e.name && p.kind == e.kind && p.value.len() == e.len, Layout, "anchor entry {} does not match {}", e.name, p.name);
        if !e.kind.is_trainable() {
            continue;
        }
        let anchor = &prox.anchor.values()[e.offset..e.offset + e.len];
        for ((g, &w), &a) in p.grad.iter_mut().zip(&p.value).zip(anchor) {
            *g += mu * (w - a);
        }
    }
    Ok(())
}

/// Splits shuffled indices into batches, dropping a trailing batch of one
/// sample (batch norm needs two).
fn batches(indices: &[usize], batch_size: usize) -> impl Iterator<Item = &[usize]> {
    indices.chunks(batch_size).filter(|c| c.len() >= 2)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EpochStats {
    /// Sample-weighted means over the epoch's batches.
    pub loss: f64,
    pub mse: f64,
    pub ce: f64,
    pub samples: usize,
}

/// One pass over `indices` in a fresh random order.
pub fn train_epoch<T: Real>(
    net: &mut Network<T>,
    opt: &mut Sgd<T>,
    ds: &Dataset,
    indices: &[usize],
    cfg: &OptimizerCfg,
    loss: &JointLossCfg,
    prox: Option<&Proximal<'_, T>>,
    rng: &mut Rng,
) -> Result<EpochStats> {
    let mut order = indices.to_vec();
    order.shuffle(rng);
    net.set_training(true);
    let mut stats = EpochStats::default();
    for idx in batches(&order, cfg.batch_size) {
        let batch = make_batch::<T>(ds, idx)?;
        let parts = net.forward_backward(&batch.x, &batch.s_star, &batch.labels, loss)?;
        ensure!(parts.total.is_finite(), Numeric, "non-finite training loss {}", parts.total);
        if let Some(p) = prox.filter(|p| p.mu != 0.0) {
            add_proximal_grad(net, p)?;
        }
        opt.step(net.params_mut())?;
        let n = idx.len();
        stats.loss += parts.total * n as f64;
        stats.mse += parts.mse * n as f64;
        stats.ce += parts.ce * n as f64;
        stats.samples += n;
    }
    if stats.samples > 0 {
        let n = stats.samples as f64;
        stats.loss /= n;
        stats.mse /= n;
        stats.ce /= n;
    }
    Ok(stats)
}

/// `epochs` passes with one optimizer and one shuffling stream. Both the
/// centralized trainer and a federated client run through here.
#[allow(clippy::too_many_arguments)]
pub fn train_epochs<T: Real>(
    net: &mut Network<T>,
    ds: &Dataset,
    indices: &[usize],
    cfg: &OptimizerCfg,
    loss: &JointLossCfg,
    epochs: usize,
    prox: Option<&Proximal<'_, T>>,
    rng: &mut Rng,
) -> Result<Vec<EpochStats>> {
    let mut opt = cfg.optimizer();
    (0..epochs).map(|_| train_epoch(net, &mut opt, ds, indices, cfg, loss, prox, rng)).collect()
}

/// Predicted labels for every sample, with batch norm in eval mode.
pub fn predict_all<T: Real>(net: &mut Network<T>, ds: &Dataset) -> Result<Vec<usize>> {
    predict_indices(net, ds, &(0..ds.len()).collect::<Vec<_>>())
}

pub fn predict_indices<T: Real>(net: &mut Network<T>, ds: &Dataset, indices: &[usize]) -> Result<Vec<usize>> {
    net.set_training(false);
    let mut out = Vec::with_capacity(indices.len());
    for idx in indices.chunks(EVAL_BATCH) {
        let batch = make_batch::<T>(ds, idx)?;
        let logits = net.logits(&batch.x)?;
        ensure!(logits.all_finite(), Numeric, "non-finite logits");
        out.extend(predict(&logits));
    }
    Ok(out)
}

/// Fraction of `indices` predicted correctly.
pub fn accuracy_on<T: Real>(net: &mut Network<T>, ds: &Dataset, indices: &[usize]) -> Result<f64> {
    ensure!(!indices.is_empty(), Param, "cannot evaluate on an empty set");
    let pred = predict_indices(net, ds, indices)?;
    let hits = pred.iter().zip(indices).filter(|(p, &i)| **p == ds.samples[i].label).count();
    Ok(hits as f64 / indices.len() as f64)
}

pub fn accuracy<T: Real>(net: &mut Network<T>, ds: &Dataset) -> Result<f64> {
    accuracy_on(net, ds, &(0..ds.len()).collect::<Vec<_>>())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralCfg {
    pub epochs: usize,
    pub optimizer: OptimizerCfg,
    #[serde(default)]
    pub loss: JointLossCfg,
    /// Stop once test accuracy reaches this value.
    #[serde(default)]
    pub target_accuracy: Option<f64>,
    /// Also measure training-set accuracy after every epoch.
    #[serde(default)]
    pub eval_train: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train: EpochStats,
    pub train_accuracy: Option<f64>,
    pub test_accuracy: f64,
}

/// Centralized training with per-epoch test accuracy. Shuffling draws from
/// a stream derived from `seed`.
pub fn train_central<T: Real>(
    net: &mut Network<T>,
    train: &Dataset,
    test: &Dataset,
    cfg: &CentralCfg,
    seed: u64,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<Vec<EpochRecord>> {
    cfg.optimizer.validate()?;
    cfg.loss.validate()?;
    ensure!(!train.is_empty(), Param, "empty training set");
    let indices: Vec<usize> = (0..train.len()).collect();
    let mut opt = cfg.optimizer.optimizer();
    let mut rng = derived_rng(seed, &[]);
    let mut history = Vec::with_capacity(cfg.epochs);
    for epoch in 1..=cfg.epochs {
        let stats = train_epoch(net, &mut opt, train, &indices, &cfg.optimizer, &cfg.loss, None, &mut rng)?;
        let test_accuracy = if test.is_empty() { f64::NAN } else { accuracy(net, test)? };
        let train_accuracy = if cfg.eval_train { Some(accuracy(net, train)?) } else { None };
        let rec = EpochRecord { epoch, train: stats, train_accuracy, test_accuracy };
        on_epoch(&rec);
        history.push(rec);
        if cfg.target_accuracy.is_some_and(|t| test_accuracy >= t) {
            break;
        }
    }
    Ok(history)
}
