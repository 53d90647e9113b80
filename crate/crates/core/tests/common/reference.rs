//! Straight-line reference implementations built from plain loops, used as
//! oracles for the library layers. Arrays are indexed `[sample][channel][t]`.

use wser::models::AcBlock;
use wser::nncore::{BatchNorm1d, Conv1d, DepthwiseConv1d, Tensor};

pub type Nd = Vec<Vec<Vec<f64>>>;

pub fn to_nd(t: &Tensor<f64>) -> Nd {
    let (c, n, _) = t.shape();
    (0..n).map(|s| (0..c).map(|ch| t.row(ch, s).to_vec()).collect()).collect()
}

pub fn max_abs_diff(a: &Nd, b: &Nd) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut m = 0.0f64;
    for (sa, sb) in a.iter().zip(b) {
        assert_eq!(sa.len(), sb.len());
        for (ra, rb) in sa.iter().zip(sb) {
            assert_eq!(ra.len(), rb.len());
            for (x, y) in ra.iter().zip(rb) {
                m = m.max((x - y).abs());
            }
        }
    }
    m
}

fn out_len(len: usize, k: usize, stride: usize) -> usize {
    let pad = (k - 1) / 2;
    (len + 2 * pad - k) / stride + 1
}

/// Full cross-correlation with "same" padding; `w[o][i][t]`.
pub fn conv(x: &Nd, w: &[Vec<Vec<f64>>], b: &[f64], stride: usize) -> Nd {
    let k = w[0][0].len();
    let pad = ((k - 1) / 2) as isize;
    x.iter()
        .map(|s| {
            let len = s[0].len();
            let lout = out_len(len, k, stride);
            w.iter()
                .zip(b)
                .map(|(wo, &bo)| {
                    (0..lout)
                        .map(|o| {
                            let mut acc = bo;
                            for (wi, xi) in wo.iter().zip(s) {
                                for (t, &wv) in wi.iter().enumerate() {
                                    let idx = (o * stride) as isize + t as isize - pad;
                                    if idx >= 0 && (idx as usize) < len {
                                        acc += wv * xi[idx as usize];
                                    }
                                }
                            }
                            acc
                        })
                        .collect()
                })
                .collect()
        })
        .collect()
}

/// Per-channel cross-correlation; `w[c][t]`.
pub fn depthwise(x: &Nd, w: &[Vec<f64>], b: &[f64], stride: usize) -> Nd {
    x.iter()
        .map(|s| {
            s.iter()
                .enumerate()
                .map(|(c, row)| {
                    let single = vec![vec![w[c].clone()]];
                    conv(&vec![vec![row.clone()]], &single, &[b[c]], stride)[0][0].clone()
                })
                .collect()
        })
        .collect()
}

/// Training-mode batch norm with biased batch variance.
pub fn batch_norm(x: &Nd, gamma: &[f64], beta: &[f64], eps: f64) -> Nd {
    let channels = x[0].len();
    let mut y = x.clone();
    for c in 0..channels {
        let vals: Vec<f64> = x.iter().flat_map(|s| s[c].iter().copied()).collect();
        let m = vals.len() as f64;
        let mean = vals.iter().sum::<f64>() / m;
        let var = vals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / m;
        for s in y.iter_mut() {
            for v in s[c].iter_mut() {
                *v = gamma[c] * (*v - mean) / (var + eps).sqrt() + beta[c];
            }
        }
    }
    y
}

pub fn avg_pool(x: &Nd, window: usize, stride: usize) -> Nd {
    x.iter()
        .map(|s| {
            s.iter()
                .map(|row| {
                    let lout = (row.len() - window) / stride + 1;
                    (0..lout).map(|o| row[o * stride..o * stride + window].iter().sum::<f64>() / window as f64).collect()
                })
                .collect()
        })
        .collect()
}

pub fn add(a: &Nd, b: &Nd) -> Nd {
    a.iter()
        .zip(b)
        .map(|(sa, sb)| sa.iter().zip(sb).map(|(ra, rb)| ra.iter().zip(rb).map(|(x, y)| x + y).collect()).collect())
        .collect()
}

pub fn relu(x: &Nd) -> Nd {
    x.iter().map(|s| s.iter().map(|r| r.iter().map(|v| v.max(0.0)).collect()).collect()).collect()
}

pub fn conv_weights(layer: &Conv1d<f64>) -> (Vec<Vec<Vec<f64>>>, Vec<f64>) {
    let (co, ci, k) = (layer.c_out, layer.c_in, layer.kernel);
    let v = &layer.weight.value;
    let w = (0..co).map(|o| (0..ci).map(|i| v[(o * ci + i) * k..(o * ci + i + 1) * k].to_vec()).collect()).collect();
    let b = layer.bias.as_ref().map_or(vec![0.0; co], |b| b.value.clone());
    (w, b)
}

pub fn depthwise_weights(layer: &DepthwiseConv1d<f64>) -> (Vec<Vec<f64>>, Vec<f64>) {
    let k = layer.kernel;
    let w = layer.weight.value.chunks(k).map(<[f64]>::to_vec).collect();
    let b = layer.bias.as_ref().map_or(vec![0.0; layer.channels], |b| b.value.clone());
    (w, b)
}

fn apply_conv(layer: &Conv1d<f64>, x: &Nd) -> Nd {
    let (w, b) = conv_weights(layer);
    conv(x, &w, &b, layer.stride)
}

fn apply_dw(layer: &DepthwiseConv1d<f64>, x: &Nd) -> Nd {
    let (w, b) = depthwise_weights(layer);
    depthwise(x, &w, &b, layer.stride)
}

fn apply_bn(layer: &BatchNorm1d<f64>, x: &Nd) -> Nd {
    batch_norm(x, &layer.gamma.value, &layer.beta.value, layer.eps)
}

/// The three-branch block composed by hand from the primitives above.
pub fn ac_block(block: &AcBlock<f64>, x: &Nd) -> Nd {
    let pd = apply_bn(&block.pd_bn2, &apply_dw(&block.pd_dw, &apply_bn(&block.pd_bn1, &apply_conv(&block.pd_pw, x))));
    let dp = apply_bn(&block.dp_bn2, &apply_conv(&block.dp_pw, &apply_bn(&block.dp_bn1, &apply_dw(&block.dp_dw, x))));
    let mut res = apply_bn(&block.res_bn, &apply_conv(&block.res_conv, x));
    if block.cfg.stride > 1 {
        res = avg_pool(&res, block.cfg.stride, block.cfg.stride);
    }
    relu(&add(&add(&pd, &dp), &res))
}
