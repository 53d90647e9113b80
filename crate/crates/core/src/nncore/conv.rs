use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::{Param, ParamKind, Real, Tensor};
use crate::error::{ensure, Result};

pub(crate) fn he_normal<T: Real, R: Rng + ?Sized>(n: usize, fan_in: usize, rng: &mut R) -> Vec<T> {
    let std = (2.0 / fan_in as f64).sqrt();
    let dist = Normal::new(0.0, std).expect("positive std");
    (0..n).map(|_| T::from_f64(dist.sample(rng))).collect()
}

fn out_len(len: usize, kernel: usize, stride: usize, pad: usize) -> Result<usize> {
    ensure!(len + 2 * pad >= kernel, Shape, "length {len} too short for kernel {kernel}");
    Ok((len + 2 * pad - kernel) / stride + 1)
}

/// Cross-correlation over the length axis with symmetric "same" padding
/// `(kernel - 1) / 2`, so `L_out = ceil(L / stride)` for odd kernels.
#[derive(Debug, Clone)]
pub struct Conv1d<T> {
    pub c_in: usize,
    pub c_out: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    /// `(c_out, c_in, kernel)` row-major.
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    cache: Option<ConvCache<T>>,
}

#[derive(Debug, Clone)]
struct ConvCache<T> {
    batch: usize,
    len: usize,
    out_len: usize,
    /// The input itself for pointwise layers, the im2col matrix otherwise.
    cols: Vec<T>,
}

impl<T: Real> Conv1d<T> {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        c_in: usize,
        c_out: usize,
        kernel: usize,
        stride: usize,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        ensure!(kernel % 2 == 1, Param, "{name}: kernel {kernel} must be odd");
        ensure!(stride >= 1, Param, "{name}: stride must be at least 1");
        ensure!(c_in >= 1 && c_out >= 1, Param, "{name}: channel counts must be positive");
        let weight = Param::new(
            format!("{name}.weight"),
            ParamKind::Weight,
            he_normal(c_out * c_in * kernel, c_in * kernel, rng),
        );
        let bias = bias.then(|| Param::new(format!("{name}.bias"), ParamKind::Bias, vec![T::ZERO; c_out]));
        Ok(Self { c_in, c_out, kernel, stride, pad: (kernel - 1) / 2, weight, bias, cache: None })
    }

    /// 1x1 convolution, stride 1.
    pub fn pointwise<R: Rng + ?Sized>(name: &str, c_in: usize, c_out: usize, bias: bool, rng: &mut R) -> Result<Self> {
        Self::new(name, c_in, c_out, 1, 1, bias, rng)
    }

    fn is_pointwise(&self) -> bool {
        self.kernel == 1 && self.stride == 1
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        out_len(len, self.kernel, self.stride, self.pad)
    }

    pub fn num_params(&self) -> usize {
        self.weight.value.len() + self.bias.as_ref().map_or(0, |b| b.value.len())
    }

    fn im2col(&self, x: &Tensor<T>, lout: usize) -> Vec<T> {
        let (cin, n, len) = x.shape();
        let k = self.kernel;
        let width = n * lout;
        let mut cols = vec![T::ZERO; cin * k * width];
        for ci in 0..cin {
            for t in 0..k {
                let dst = &mut cols[(ci * k + t) * width..(ci * k + t + 1) * width];
                for b in 0..n {
                    let src = x.row(ci, b);
                    let d = &mut dst[b * lout..(b + 1) * lout];
                    for (o, v) in d.iter_mut().enumerate() {
                        let i = (o * self.stride + t) as isize - self.pad as isize;
                        if i >= 0 && (i as usize) < len {
                            *v = src[i as usize];
                        }
                    }
                }
            }
        }
        cols
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        ensure!(
            x.channels() == self.c_in,
            Shape,
            "{}: expected {} input channels, got {}",
            self.weight.name,
            self.c_in,
            x.channels()
        );
        let (_, n, len) = x.shape();
        let lout = self.output_len(len)?;
        let width = n * lout;
        let cols = if self.is_pointwise() { x.data().to_vec() } else { self.im2col(x, lout) };
        let mut y = Tensor::zeros(self.c_out, n, lout);
        let ck = self.c_in * self.kernel;
        T::gemm(
            self.c_out,
            ck,
            width,
            T::ONE,
            &self.weight.value,
            ck,
            1,
            &cols,
            width,
            1,
            T::ZERO,
            y.data_mut(),
            width,
            1,
        );
        if let Some(b) = &self.bias {
            for co in 0..self.c_out {
                let bv = b.value[co];
                y.channel_mut(co).iter_mut().for_each(|v| *v += bv);
            }
        }
        self.cache = Some(ConvCache { batch: n, len, out_len: lout, cols });
        Ok(y)
    }

    /// Accumulates parameter gradients and returns the input gradient.
    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let cache = self.cache.as_ref().ok_or_else(|| crate::Error::Contract("conv backward before forward".into()))?;
        let (n, len, lout) = (cache.batch, cache.len, cache.out_len);
        ensure!(dy.shape() == (self.c_out, n, lout), Shape, "{}: gradient shape {:?}", self.weight.name, dy.shape());
        let width = n * lout;
        let ck = self.c_in * self.kernel;
        // dW += dY * cols^T
        T::gemm(
            self.c_out,
            width,
            ck,
            T::ONE,
            dy.data(),
            width,
            1,
            &cache.cols,
            1,
            width,
            T::ONE,
            &mut self.weight.grad,
            ck,
            1,
        );
        if let Some(b) = &mut self.bias {
            for co in 0..self.c_out {
                b.grad[co] += dy.channel(co).iter().copied().sum::<T>();
            }
        }
        // dcols = W^T * dY
        let mut dcols = vec![T::ZERO; ck * width];
        T::gemm(ck, self.c_out, width, T::ONE, &self.weight.value, 1, ck, dy.data(), width, 1, T::ZERO, &mut dcols, width, 1);
        if self.is_pointwise() {
            return Tensor::from_vec(self.c_in, n, len, dcols);
        }
        let mut dx = Tensor::zeros(self.c_in, n, len);
        let k = self.kernel;
        for ci in 0..self.c_in {
            for t in 0..k {
                let src = &dcols[(ci * k + t) * width..(ci * k + t + 1) * width];
                for b in 0..n {
                    let s = &src[b * lout..(b + 1) * lout];
                    let d = dx.row_mut(ci, b);
                    for (o, &g) in s.iter().enumerate() {
                        let i = (o * self.stride + t) as isize - self.pad as isize;
                        if i >= 0 && (i as usize) < len {
                            d[i as usize] += g;
                        }
                    }
                }
            }
        }
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

/// Per-channel convolution (no cross-channel mixing) with "same" padding.
#[derive(Debug, Clone)]
pub struct DepthwiseConv1d<T> {
    pub channels: usize,
    pub kernel: usize,
    pub stride: usize,
    pub pad: usize,
    /// `(channels, kernel)` row-major.
    pub weight: Param<T>,
    pub bias: Option<Param<T>>,
    cache: Option<Tensor<T>>,
}

impl<T: Real> DepthwiseConv1d<T> {
    pub fn new<R: Rng + ?Sized>(
        name: &str,
        channels: usize,
        kernel: usize,
        stride: usize,
        bias: bool,
        rng: &mut R,
    ) -> Result<Self> {
        ensure!(kernel % 2 == 1, Param, "{name}: kernel {kernel} must be odd");
        ensure!(stride >= 1, Param, "{name}: stride must be at least 1");
        let weight = Param::new(format!("{name}.weight"), ParamKind::Weight, he_normal(channels * kernel, kernel, rng));
        let bias = bias.then(|| Param::new(format!("{name}.bias"), ParamKind::Bias, vec![T::ZERO; channels]));
        Ok(Self { channels, kernel, stride, pad: (kernel - 1) / 2, weight, bias, cache: None })
    }

    pub fn output_len(&self, len: usize) -> Result<usize> {
        out_len(len, self.kernel, self.stride, self.pad)
    }

    pub fn num_params(&self) -> usize {
        self.weight.value.len() + self.bias.as_ref().map_or(0, |b| b.value.len())
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        ensure!(
            x.channels() == self.channels,
            Shape,
            "{}: expected {} channels, got {}",
            self.weight.name,
            self.channels,
            x.channels()
        );
        let (c, n, len) = x.shape();
        let lout = self.output_len(len)?;
        let k = self.kernel;
        let mut y = Tensor::zeros(c, n, lout);
        for ch in 0..c {
            let w = &self.weight.value[ch * k..(ch + 1) * k];
            let b = self.bias.as_ref().map_or(T::ZERO, |b| b.value[ch]);
            for s in 0..n {
                let src = x.row(ch, s);
                let dst = y.row_mut(ch, s);
                for (o, out) in dst.iter_mut().enumerate() {
                    let start = (o * self.stride) as isize - self.pad as isize;
                    let mut acc = b;
                    if start >= 0 && start as usize + k <= len {
                        let seg = &src[start as usize..start as usize + k];
                        for (wv, xv) in w.iter().zip(seg) {
                            acc += *wv * *xv;
                        }
                    } else {
                        for (t, wv) in w.iter().enumerate() {
                            let i = start + t as isize;
                            if i >= 0 && (i as usize) < len {
                                acc += *wv * src[i as usize];
                            }
                        }
                    }
                    *out = acc;
                }
            }
        }
        self.cache = Some(x.clone());
        Ok(y)
    }

    pub fn backward(&mut self, dy: &Tensor<T>) -> Result<Tensor<T>> {
        let x = self.cache.as_ref().ok_or_else(|| crate::Error::Contract("depthwise backward before forward".into()))?;
        let (c, n, len) = x.shape();
        let lout = self.output_len(len)?;
        ensure!(dy.shape() == (c, n, lout), Shape, "{}: gradient shape {:?}", self.weight.name, dy.shape());
        let k = self.kernel;
        let mut dx = Tensor::zeros(c, n, len);
        for ch in 0..c {
            let w = &self.weight.value[ch * k..(ch + 1) * k];
            let mut dw = vec![T::ZERO; k];
            let mut db = T::ZERO;
            for s in 0..n {
                let src = x.row(ch, s);
                let g = dy.row(ch, s);
                let d = dx.row_mut(ch, s);
                for (o, &gv) in g.iter().enumerate() {
                    db += gv;
                    let start = (o * self.stride) as isize - self.pad as isize;
                    for t in 0..k {
                        let i = start + t as isize;
                        if i >= 0 && (i as usize) < len {
                            dw[t] += gv * src[i as usize];
                            d[i as usize] += gv * w[t];
                        }
                    }
                }
            }
            for t in 0..k {
                self.weight.grad[ch * k + t] += dw[t];
            }
            if let Some(b) = &mut self.bias {
                b.grad[ch] += db;
            }
        }
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
