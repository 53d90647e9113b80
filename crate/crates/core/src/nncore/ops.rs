use rand::Rng;

use super::conv::he_normal;
use super::{Param, ParamKind, Real, Tensor};
use crate::error::{ensure, Error, Result};

#[derive(Debug, Clone, Default)]
pub struct Relu {
    mask: Vec<bool>,
}

impl Relu {
    pub fn forward<T: Real>(&mut self, x: &Tensor<T>) -> Tensor<T> {
        let mut y = x.clone();
        self.forward_inplace(&mut y);
        y
    }

    pub fn forward_inplace<T: Real>(&mut self, x: &mut Tensor<T>) {
        self.mask.clear();
        self.mask.reserve(x.data().len());
        for v in x.data_mut() {
            let keep = *v > T::ZERO;
            if !keep {
                *v = T::ZERO;
            }
            self.mask.push(keep);
        }
    }

    pub fn backward<T: Real>(&self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        ensure!(dy.data().len() == self.mask.len(), Shape, "relu gradient size {}", dy.data().len());
        let mut dx = dy.clone();
        for (d, &keep) in dx.data_mut().iter_mut().zip(&self.mask) {
            if !keep {
                *d = T::ZERO;
            }
        }
        Ok(dx)
    }
}

/// Average pooling over non-padded windows along the length axis.
#[derive(Debug, Clone)]
pub struct AvgPool1d {
    pub window: usize,
    pub stride: usize,
    in_len: usize,
}

impl AvgPool1d {
    pub fn new(window: usize, stride: usize) -> Result<Self> {
        ensure!(window >= 1 && stride >= 1, Param, "pool window and stride must be positive");
        Ok(Self { window, stride, in_len: 0 })
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        ensure!(self.window <= len, Shape, "pool window {} exceeds length {len}", self.window);
        Ok((len - self.window) / self.stride + 1)
    }

    pub fn forward<T: Real>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, n, len) = x.shape();
        let lout = self.output_len(len)?;
        let scale = T::ONE / T::from_usize(self.window);
        let mut y = Tensor::zeros(c, n, lout);
        for ch in 0..c {
            for s in 0..n {
                let src = x.row(ch, s);
                for (o, out) in y.row_mut(ch, s).iter_mut().enumerate() {
                    let start = o * self.stride;
                    *out = src[start..start + self.window].iter().copied().sum::<T>() * scale;
                }
            }
        }
        self.in_len = len;
        Ok(y)
    }

    pub fn backward<T: Real>(&self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, n, lout) = dy.shape();
        ensure!(self.in_len > 0 && self.output_len(self.in_len)? == lout, Shape, "pool gradient length {lout}");
        let scale = T::ONE / T::from_usize(self.window);
        let mut dx = Tensor::zeros(c, n, self.in_len);
        for ch in 0..c {
            for s in 0..n {
                let g = dy.row(ch, s);
                let d = dx.row_mut(ch, s);
                for (o, &gv) in g.iter().enumerate() {
                    let start = o * self.stride;
                    for v in &mut d[start..start + self.window] {
                        *v += gv * scale;
                    }
                }
            }
        }
        Ok(dx)
    }
}

/// Mean over the length axis: `(C, N, L) -> (C, N, 1)`.
#[derive(Debug, Clone, Default)]
pub struct GlobalAvgPool {
    in_len: usize,
}

impl GlobalAvgPool {
    pub fn forward<T: Real>(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, n, len) = x.shape();
        ensure!(len >= 1, Shape, "global pooling of an empty axis");
        let scale = T::ONE / T::from_usize(len);
        let mut y = Tensor::zeros(c, n, 1);
        for ch in 0..c {
            for s in 0..n {
                *y.at_mut(ch, s, 0) = x.row(ch, s).iter().copied().sum::<T>() * scale;
            }
        }
        self.in_len = len;
        Ok(y)
    }

    pub fn backward<T: Real>(&self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let (c, n, l) = dy.shape();
        ensure!(l == 1 && self.in_len > 0, Shape, "global pool gradient shape {:?}", dy.shape());
        let scale = T::ONE / T::from_usize(self.in_len);
        let mut dx = Tensor::zeros(c, n, self.in_len);
        for ch in 0..c {
            for s in 0..n {
                let g = dy.at(ch, s, 0) * scale;
                dx.row_mut(ch, s).iter_mut().for_each(|v| *v = g);
            }
        }
        Ok(dx)
    }
}

/// Fully connected layer on `(features, N, 1)` tensors.
#[derive(Debug, Clone)]
pub struct Linear<T> {
    pub in_features: usize,
    pub out_features: usize,
    /// `(out, in)` row-major.
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    input: Option<Tensor<T>>,
}

impl<T: Real> Linear<T> {
    pub fn new<R: Rng + ?Sized>(name: &str, in_features: usize, out_features: usize, bias: bool, rng: &mut R) -> Self {
        Self {
            in_features,
            out_features,
            weight: Param::new(
                format!("{name}.weight"),
                ParamKind::Weight,
                he_normal(out_features * in_features, in_features, rng),
            ),
            bias: bias.then(|| Param::new(format!("{name}.bias"), ParamKind::Bias, vec![T::ZERO; out_features])),
            input: None,
        }
    }

    pub fn num_params(&self) -> usize {
        self.weight.value.len() + self.bias.as_ref().map_or(0, |b| b.value.len())
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let (f, n, l) = x.shape();
        ensure!(f == self.in_features && l == 1, Shape, "linear expects ({}, N, 1), got {:?}", self.in_features, x.shape());
        let mut y = Tensor::zeros(self.out_features, n, 1);
        T::gemm(self.out_features, f, n, T::ONE, &self.weight.value, f, 1, x.data(), n, 1, T::ZERO, y.data_mut(), n, 1);
        if let Some(b) = &self.bias {
            for o in 0..self.out_features {
                y.channel_mut(o).iter_mut().for_each(|v| *v += b.value[o]);
            }
        }
        self.input = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.input.as_ref().ok_or_else(|| Error::Contract("linear backward before forward".into()))?;
        let n = x.batch();
        let f = self.in_features;
        ensure!(dy.shape() == (self.out_features, n, 1), Shape, "linear gradient shape {:?}", dy.shape());
        T::gemm(self.out_features, n, f, T::ONE, dy.data(), n, 1, x.data(), 1, n, T::ONE, &mut self.weight.grad, f, 1);
        if let Some(b) = &mut self.bias {
            for o in 0..self.out_features {
                b.grad[o] += dy.channel(o).iter().copied().sum::<T>();
            }
        }
        let mut dx = Tensor::zeros(f, n, 1);
        T::gemm(f, self.out_features, n, T::ONE, &self.weight.value, 1, f, dy.data(), n, 1, T::ZERO, dx.data_mut(), n, 1);
        Ok(dx)
    }

    pub fn params(&self) -> Vec<&Param<T>> {
        let mut v = vec![&self.weight];
        v.extend(self.bias.as_ref());
        v
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = vec![&mut self.weight];
        v.extend(self.bias.as_mut());
        v
    }
}
