use super::{Param, ParamKind, Real, Tensor};
use crate::error::{ensure, Error, Result};

pub const BN_EPS: f64 = 1e-5;
pub const BN_MOMENTUM: f64 = 0.1;

/// Batch normalization over the (batch, length) axes of each channel.
///
/// Running statistics track the biased batch variance, so a layer whose
/// running statistics equal the current batch statistics produces the same
/// output in both modes.
#[derive(Debug, Clone)]
pub struct BatchNorm1d<T> {
    pub channels: usize,
    pub eps: f64,
    pub momentum: f64,
    pub gamma: Param<T>,
    pub beta: Param<T>,
    pub running_mean: Param<T>,
    pub running_var: Param<T>,
    pub training: bool,
    cache: Option<BnCache<T>>,
}

#[derive(Debug, Clone)]
struct BnCache<T> {
    x_hat: Tensor<T>,
    inv_std: Vec<T>,
    training: bool,
}

impl<T: Real> BatchNorm1d<T> {
    pub fn new(name: &str, channels: usize) -> Self {
        Self {
            channels,
            eps: BN_EPS,
            momentum: BN_MOMENTUM,
            gamma: Param::new(format!("{name}.gamma"), ParamKind::BnGamma, vec![T::ONE; channels]),
            beta: Param::new(format!("{name}.beta"), ParamKind::BnBeta, vec![T::ZERO; channels]),
            running_mean: Param::new(format!("{name}.running_mean"), ParamKind::RunningMean, vec![T::ZERO; channels]),
            running_var: Param::new(format!("{name}.running_var"), ParamKind::RunningVar, vec![T::ONE; channels]),
            training: true,
            cache: None,
        }
    }

    pub fn num_params(&self) -> usize {
        2 * self.channels
    }

    /// Per-channel `(mean, biased variance)` of a batch.
    pub fn batch_stats(x: &Tensor<T>) -> Vec<(f64, f64)> {
        (0..x.channels())
            .map(|c| {
                let s = x.channel(c);
                let m = s.len() as f64;
                let mean = s.iter().map(|v| v.to_f64()).sum::<f64>() / m;
                let var = s.iter().map(|v| (v.to_f64() - mean).powi(2)).sum::<f64>() / m;
                (mean, var)
            })
            .collect()
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        ensure!(
            x.channels() == self.channels,
            Shape,
            "{}: expected {} channels, got {}",
            self.gamma.name,
            self.channels,
            x.channels()
        );
        let (c, n, len) = x.shape();
        let mut x_hat = Tensor::zeros(c, n, len);
        let mut y = Tensor::zeros(c, n, len);
        let mut inv_std = Vec::with_capacity(c);
        let stats = if self.training {
            ensure!(n >= 2, Contract, "{}: training-mode batch norm needs a batch of at least 2, got {n}", self.gamma.name);
            let stats = Self::batch_stats(x);
            for (ch, &(mean, var)) in stats.iter().enumerate() {
                let rm = &mut self.running_mean.value[ch];
                *rm = T::from_f64((1.0 - self.momentum) * rm.to_f64() + self.momentum * mean);
                let rv = &mut self.running_var.value[ch];
                *rv = T::from_f64((1.0 - self.momentum) * rv.to_f64() + self.momentum * var);
            }
            stats
        } else {
            (0..c).map(|ch| (self.running_mean.value[ch].to_f64(), self.running_var.value[ch].to_f64())).collect()
        };
        for (ch, &(mean, var)) in stats.iter().enumerate() {
            let is = T::from_f64(1.0 / (var + self.eps).sqrt());
            let mean = T::from_f64(mean);
            let (g, b) = (self.gamma.value[ch], self.beta.value[ch]);
            for ((xh, yv), &xv) in x_hat.channel_mut(ch).iter_mut().zip(y.channel_mut(ch)).zip(x.channel(ch)) {
                *xh = (xv - mean) * is;
                *yv = g * *xh + b;
            }
            inv_std.push(is);
        }
        self.cache = Some(BnCache { x_hat, inv_std, training: self.training });
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.cache.as_ref().ok_or_else(|| Error::Contract("batch norm backward before forward".into()))?;
        ensure!(dy.same_shape(&cache.x_hat), Shape, "{}: gradient shape {:?}", self.gamma.name, dy.shape());
        let (c, n, len) = dy.shape();
        let m = (n * len) as f64;
        let mut dx = Tensor::zeros(c, n, len);
        for ch in 0..c {
            let g = dy.channel(ch);
            let xh = cache.x_hat.channel(ch);
            let sum_dy: f64 = g.iter().map(|v| v.to_f64()).sum();
            let sum_dy_xh: f64 = g.iter().zip(xh).map(|(a, b)| a.to_f64() * b.to_f64()).sum();
            self.gamma.grad[ch] += T::from_f64(sum_dy_xh);
            self.beta.grad[ch] += T::from_f64(sum_dy);
            let scale = self.gamma.value[ch] * cache.inv_std[ch];
            let d = dx.channel_mut(ch);
            if cache.training {
                let mean_dy = T::from_f64(sum_dy / m);
                let mean_dy_xh = T::from_f64(sum_dy_xh / m);
                for ((dv, &gv), &xv) in d.iter_mut().zip(g).zip(xh) {
                    *dv = scale * (gv - mean_dy - xv * mean_dy_xh);
                }
            } else {
                for (dv, &gv) in d.iter_mut().zip(g) {
                    *dv = scale * gv;
                }
            }
        }
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        vec![&self.gamma, &self.beta, &self.running_mean, &self.running_var]
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        vec![&mut self.gamma, &mut self.beta, &mut self.running_mean, &mut self.running_var]
    }
}
