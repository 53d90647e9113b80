use rand::Rng;

use super::acblock::{AcBlock, AcBlockCfg};
use super::config::WsrNetCfg;
use crate::error::{ensure, Result};
use crate::nncore::{softmax, GlobalAvgPool, Linear, Module, Param, Real, Tensor};

/// Recognizer: strided ACBlocks, global average pooling over length, and a
/// linear classifier producing logits.
#[derive(Debug, Clone)]
pub struct WsrNet<T> {
    pub cfg: WsrNetCfg,
    pub blocks: Vec<AcBlock<T>>,
    gap: GlobalAvgPool,
    pub fc: Linear<T>,
}

impl<T: Real> WsrNet<T> {
    pub fn new<R: Rng + ?Sized>(cfg: WsrNetCfg, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let mut c_in = 2;
        let mut blocks = Vec::with_capacity(cfg.channels.len());
        for (i, (&c, &s)) in cfg.channels.iter().zip(&cfg.strides).enumerate() {
            blocks.push(AcBlock::new(&format!("wsr.block{i}"), AcBlockCfg::new(c_in, c, s), rng)?);
            c_in = c;
        }
        let fc = Linear::new("wsr.fc", c_in, cfg.num_classes, cfg.fc_bias, rng);
        Ok(Self { cfg, blocks, gap: GlobalAvgPool::default(), fc })
    }

    /// Per-block output shapes `(channels, length)` for a given frame length.
    pub fn block_shapes(&self, frame_len: usize) -> Vec<(usize, usize)> {
        let mut len = frame_len;
        self.blocks
            .iter()
            .map(|b| {
                len = b.cfg.output_len(len);
                (b.cfg.c_out, len)
            })
            .collect()
    }

    /// Block activations followed by the logits.
    pub fn forward_trace(&mut self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        ensure!(x.channels() == 2, Shape, "recognizer expects 2 input channels, got {}", x.channels());
        let mut trace = Vec::with_capacity(self.blocks.len() + 1);
        let mut h = x.clone();
        for b in &mut self.blocks {
            h = b.forward(&h)?;
            trace.push(h.clone());
        }
        let pooled = self.gap.forward(&h)?;
        trace.push(self.fc.forward(&pooled)?);
        Ok(trace)
    }

    /// Logits of shape `(num_classes, N, 1)`.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        ensure!(x.channels() == 2, Shape, "recognizer expects 2 input channels, got {}", x.channels());
        let mut blocks = self.blocks.iter_mut();
        let mut h = blocks.next().expect("validated non-empty").forward(x)?;
        for b in blocks {
            h = b.forward(&h)?;
        }
        let pooled = self.gap.forward(&h)?;
        self.fc.forward(&pooled)
    }

    pub fn probabilities(&mut self, x: &Tensor<T>) -> Result<Vec<Vec<f64>>> {
        Ok(softmax(&self.forward(x)?))
    }

    pub fn backward(&mut self, d_logits: &Tensor<T>) -> Result<Tensor<T>> {
        let g = self.fc.backward(d_logits)?;
        let mut g = self.gap.backward(&g)?;
        for b in self.blocks.iter_mut().rev() {
            g = b.backward(&g)?;
        }
        Ok(g)
    }
}

impl<T: Real> Module<T> for WsrNet<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut v = Vec::new();
        for b in &self.blocks {
            v.extend(b.params());
        }
        v.extend(self.fc.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = Vec::new();
        for b in &mut self.blocks {
            v.extend(b.params_mut());
        }
        v.extend(self.fc.params_mut());
        v
    }

    fn set_training(&mut self, training: bool) {
        self.blocks.iter_mut().for_each(|b| b.set_training(training));
    }
}
