use std::fmt;

use super::wsenet::WseNet;
use super::wsernet::Network;
use super::wsrnet::WsrNet;
use crate::nncore::{Module, Param, Real};

/// Trainable parameter totals published for the full-width architectures,
/// shown next to our own counts.
pub const WSENET_REFERENCE_PARAMS: usize = 83_968;
pub const WSRNET_REFERENCE_PARAMS: usize = 530_560;

#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub name: String,
    pub out_channels: usize,
    pub out_len: usize,
    /// Trainable parameters.
    pub params: usize,
    /// Non-trainable state (batch-norm running statistics).
    pub buffers: usize,
    pub macs: usize,
}

/// Per-layer report. Multiply-accumulates count convolution and linear
/// layers only, for a single frame; normalization, activations and
/// pooling are not counted.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelSummary {
    pub rows: Vec<SummaryRow>,
}

impl ModelSummary {
    pub fn total_params(&self) -> usize {
        self.rows.iter().map(|r| r.params).sum()
    }
    pub fn total_buffers(&self) -> usize {
        self.rows.iter().map(|r| r.buffers).sum()
    }
    pub fn total_macs(&self) -> usize {
        self.rows.iter().map(|r| r.macs).sum()
    }
}

fn split_counts<T: Real>(params: &[&Param<T>]) -> (usize, usize) {
    params.iter().fold((0, 0), |(t, b), p| {
        if p.kind.is_trainable() {
            (t + p.value.len(), b)
        } else {
            (t, b + p.value.len())
        }
    })
}

fn row<T: Real>(name: String, shape: (usize, usize), params: &[&Param<T>], macs: usize) -> SummaryRow {
    let (p, b) = split_counts(params);
    SummaryRow { name, out_channels: shape.0, out_len: shape.1, params: p, buffers: b, macs }
}

pub fn wsenet_summary<T: Real>(net: &WseNet<T>, frame_len: usize) -> ModelSummary {
    let w = net.cfg.width;
    let mut rows = vec![row("wse.head".into(), (w, frame_len), &net.head.params(), 2 * w * 3 * frame_len)];
    for (i, b) in net.blocks.iter().enumerate() {
        rows.push(row(format!("wse.block{i}"), (w, frame_len), &b.params(), b.macs(frame_len)));
    }
    rows.push(row("wse.tail".into(), (2, frame_len), &net.tail.params(), w * 2 * 3 * frame_len));
    ModelSummary { rows }
}

pub fn wsrnet_summary<T: Real>(net: &WsrNet<T>, frame_len: usize) -> ModelSummary {
    let mut rows = Vec::new();
    let mut len = frame_len;
    for (i, b) in net.blocks.iter().enumerate() {
        rows.push(row(format!("wsr.block{i}"), (b.cfg.c_out, b.cfg.output_len(len)), &b.params(), b.macs(len)));
        len = b.cfg.output_len(len);
    }
    let c = net.fc.in_features;
    rows.push(SummaryRow { name: "wsr.pool".into(), out_channels: c, out_len: 1, params: 0, buffers: 0, macs: 0 });
    rows.push(row(
        "wsr.fc".into(),
        (net.fc.out_features, 1),
        &net.fc.params(),
        net.fc.in_features * net.fc.out_features,
    ));
    ModelSummary { rows }
}

pub fn model_summary<T: Real>(net: &Network<T>) -> ModelSummary {
    match net {
        Network::Recognizer(r) => wsrnet_summary(r, r.cfg.frame_len),
        Network::Joint(j) => {
            let mut s = wsenet_summary(&j.enhancer, j.enhancer.cfg.frame_len);
            s.rows.extend(wsrnet_summary(&j.recognizer, j.recognizer.cfg.frame_len).rows);
            s
        }
    }
}

/// Flat parameter count of a module, for cross-checking a summary.
pub fn flat_len<T: Real>(module: &impl Module<T>) -> usize {
    module.params().iter().map(|p| p.value.len()).sum()
}

impl fmt::Display for ModelSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<14} {:>12} {:>10} {:>8} {:>12}", "layer", "output", "params", "buffers", "MACs")?;
        for r in &self.rows {
            let shape = format!("({}, {})", r.out_channels, r.out_len);
            writeln!(f, "{:<14} {:>12} {:>10} {:>8} {:>12}", r.name, shape, r.params, r.buffers, r.macs)?;
        }
        write!(
            f,
            "{:<14} {:>12} {:>10} {:>8} {:>12}",
            "total",
            "",
            self.total_params(),
            self.total_buffers(),
            self.total_macs()
        )
    }
}
