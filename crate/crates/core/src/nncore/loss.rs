use super::{Real, Tensor};
use crate::error::{ensure, Result};

/// Row-wise softmax of `(M, N, 1)` logits, returned per sample.
pub fn softmax<T: Real>(logits: &Tensor<T>) -> Vec<Vec<f64>> {
    let (m, n, _) = logits.shape();
    (0..n)
        .map(|s| {
            let row: Vec<f64> = (0..m).map(|c| logits.at(c, s, 0).to_f64()).collect();
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let z: f64 = e.iter().sum();
            e.into_iter().map(|v| v / z).collect()
        })
        .collect()
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(values: impl IntoIterator<Item = f64>) -> usize {
    let mut best = 0;
    let mut best_v = f64::NEG_INFINITY;
    for (i, v) in values.into_iter().enumerate() {
        if v > best_v {
            best = i;
            best_v = v;
        }
    }
    best
}

/// Predicted class per sample from `(M, N, 1)` logits.
pub fn predict<T: Real>(logits: &Tensor<T>) -> Vec<usize> {
    let (m, n, _) = logits.shape();
    (0..n).map(|s| argmax((0..m).map(|c| logits.at(c, s, 0).to_f64()))).collect()
}

/// Mean negative log-likelihood of the labels and its gradient
/// `(softmax - onehot) / N` with respect to the logits.
pub fn softmax_cross_entropy<T: Real>(logits: &Tensor<T>, labels: &[usize]) -> Result<(f64, Tensor<T>)> {
    let (m, n, l) = logits.shape();
    ensure!(l == 1, Shape, "logits must be (M, N, 1), got {:?}", logits.shape());
    ensure!(labels.len() == n, Shape, "{} labels for {n} samples", labels.len());
    ensure!(n > 0, Shape, "empty batch");
    let mut grad = Tensor::zeros(m, n, 1);
    let mut loss = 0.0;
    for (s, (probs, &label)) in softmax(logits).into_iter().zip(labels).enumerate() {
        ensure!(label < m, Param, "label {label} out of range for {m} classes");
        let max = (0..m).map(|c| logits.at(c, s, 0).to_f64()).fold(f64::NEG_INFINITY, f64::max);
        let lse = max + (0..m).map(|c| (logits.at(c, s, 0).to_f64() - max).exp()).sum::<f64>().ln();
        loss += lse - logits.at(label, s, 0).to_f64();
        for (c, p) in probs.into_iter().enumerate() {
            let target = if c == label { 1.0 } else { 0.0 };
            *grad.at_mut(c, s, 0) = T::from_f64((p - target) / n as f64);
        }
    }
    Ok((loss / n as f64, grad))
}

/// Mean squared error over every element and its gradient.
pub fn mse_loss<T: Real>(pred: &Tensor<T>, target: &Tensor<T>) -> Result<(f64, Tensor<T>)> {
    ensure!(pred.same_shape(target), Shape, "prediction {:?} vs target {:?}", pred.shape(), target.shape());
    let count = pred.data().len();
    ensure!(count > 0, Shape, "empty tensors");
    let mut grad = Tensor::zeros(pred.channels(), pred.batch(), pred.len());
    let scale = 2.0 / count as f64;
    let mut acc = 0.0;
    for ((g, &p), &t) in grad.data_mut().iter_mut().zip(pred.data()).zip(target.data()) {
        let d = p.to_f64() - t.to_f64();
        acc += d * d;
        *g = T::from_f64(scale * d);
    }
    Ok((acc / count as f64, grad))
}
