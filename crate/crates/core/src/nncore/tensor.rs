use super::Real;
use crate::error::{ensure, Result};

/// Batched activation tensor in channel-major layout `(channels, batch, length)`.
///
/// Storing the batch inside the channel axis lets a pointwise convolution
/// over the whole batch be a single matrix product, and gives batch
/// normalization contiguous per-channel slices.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<T> {
    channels: usize,
    batch: usize,
    len: usize,
    data: Vec<T>,
}

impl<T: Real> Tensor<T> {
    pub fn zeros(channels: usize, batch: usize, len: usize) -> Self {
        Self { channels, batch, len, data: vec![T::ZERO; channels * batch * len] }
    }

    pub fn from_vec(channels: usize, batch: usize, len: usize, data: Vec<T>) -> Result<Self> {
        ensure!(
            data.len() == channels * batch * len,
            Shape,
            "buffer of {} elements cannot hold ({channels}, {batch}, {len})",
            data.len()
        );
        Ok(Self { channels, batch, len, data })
    }

    /// Stacks per-sample `(C, L)` row-major arrays into one batch tensor.
    pub fn from_samples(channels: usize, len: usize, samples: &[&[T]]) -> Result<Self> {
        let batch = samples.len();
        let mut t = Self::zeros(channels, batch, len);
        for (n, s) in samples.iter().enumerate() {
            ensure!(s.len() == channels * len, Shape, "sample {n} has {} elements", s.len());
            for c in 0..channels {
                t.row_mut(c, n).copy_from_slice(&s[c * len..(c + 1) * len]);
            }
        }
        Ok(t)
    }

    /// Extracts sample `n` as a row-major `(C, L)` array.
    pub fn sample(&self, n: usize) -> Vec<T> {
        let mut out = Vec::with_capacity(self.channels * self.len);
        for c in 0..self.channels {
            out.extend_from_slice(self.row(c, n));
        }
        out
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }
    #[inline]
    pub fn batch(&self) -> usize {
        self.batch
    }
    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.channels, self.batch, self.len)
    }
    pub fn data(&self) -> &[T] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [T] {
        &mut self.data
    }
    pub fn into_data(self) -> Vec<T> {
        self.data
    }

    #[inline]
    pub fn at(&self, c: usize, n: usize, l: usize) -> T {
        self.data[(c * self.batch + n) * self.len + l]
    }
    #[inline]
    pub fn at_mut(&mut self, c: usize, n: usize, l: usize) -> &mut T {
        &mut self.data[(c * self.batch + n) * self.len + l]
    }

    /// Contiguous `(batch * len)` slice for one channel.
    #[inline]
    pub fn channel(&self, c: usize) -> &[T] {
        let w = self.batch * self.len;
        &self.data[c * w..(c + 1) * w]
    }
    #[inline]
    pub fn channel_mut(&mut self, c: usize) -> &mut [T] {
        let w = self.batch * self.len;
        &mut self.data[c * w..(c + 1) * w]
    }

    #[inline]
    pub fn row(&self, c: usize, n: usize) -> &[T] {
        let s = (c * self.batch + n) * self.len;
        &self.data[s..s + self.len]
    }
    #[inline]
    pub fn row_mut(&mut self, c: usize, n: usize) -> &mut [T] {
        let s = (c * self.batch + n) * self.len;
        &mut self.data[s..s + self.len]
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.shape() == other.shape()
    }

    pub fn add_assign(&mut self, other: &Self) {
        debug_assert!(self.same_shape(other));
        for (a, &b) in self.data.iter_mut().zip(&other.data) {
            *a += b;
        }
    }

    pub fn scale(&mut self, s: T) {
        for a in &mut self.data {
            *a *= s;
        }
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn cast<U: Real>(&self) -> Tensor<U> {
        Tensor {
            channels: self.channels,
            batch: self.batch,
            len: self.len,
            data: self.data.iter().map(|v| U::from_f64(v.to_f64())).collect(),
        }
    }
}
