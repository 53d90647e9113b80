use rand::Rng;

use super::acblock::{AcBlock, AcBlockCfg};
use super::config::WseNetCfg;
use crate::error::{ensure, Result};
use crate::nncore::{Conv1d, Module, Param, Real, Relu, Tensor};

/// Enhancer: head conv + ReLU, a stack of stride-1 ACBlocks, tail conv.
///
/// With `residual_output` the tail predicts the noise and the network
/// returns `x - noise`.
#[derive(Debug, Clone)]
pub struct WseNet<T> {
    pub cfg: WseNetCfg,
    pub head: Conv1d<T>,
    head_relu: Relu,
    pub blocks: Vec<AcBlock<T>>,
    pub tail: Conv1d<T>,
}

impl<T: Real> WseNet<T> {
    pub fn new<R: Rng + ?Sized>(cfg: WseNetCfg, rng: &mut R) -> Result<Self> {
        cfg.validate()?;
        let w = cfg.width;
        let head = Conv1d::new("wse.head", 2, w, 3, 1, true, rng)?;
        let blocks = (0..cfg.depth_blocks)
            .map(|i| AcBlock::new(&format!("wse.block{i}"), AcBlockCfg::new(w, w, 1), rng))
            .collect::<Result<Vec<_>>>()?;
        let tail = Conv1d::new("wse.tail", w, 2, 3, 1, true, rng)?;
        Ok(Self { cfg, head, head_relu: Relu::default(), blocks, tail })
    }

    /// Zeroes the tail so the residual enhancer starts as the identity map.
    pub fn zero_tail(&mut self) {
        for p in self.tail.params_mut() {
            p.value.iter_mut().for_each(|v| *v = T::ZERO);
        }
    }

    fn check_input(&self, x: &Tensor<T>) -> Result<()> {
        ensure!(x.channels() == 2, Shape, "enhancer expects 2 input channels, got {}", x.channels());
        Ok(())
    }

    /// Output of every stage for one forward pass: head, each block, tail output.
    pub fn forward_trace(&mut self, x: &Tensor<T>) -> Result<Vec<Tensor<T>>> {
        self.check_input(x)?;
        let mut trace = Vec::with_capacity(self.blocks.len() + 2);
        let mut h = self.head.forward(x)?;
        self.head_relu.forward_inplace(&mut h);
        trace.push(h.clone());
        for b in &mut self.blocks {
            h = b.forward(&h)?;
            trace.push(h.clone());
        }
        let mut out = self.tail.forward(&h)?;
        if self.cfg.residual_output {
            for (o, &xv) in out.data_mut().iter_mut().zip(x.data()) {
                *o = xv - *o;
            }
        }
        trace.push(out);
        Ok(trace)
    }

    pub fn forward(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        self.check_input(x)?;
        let mut h = self.head.forward(x)?;
        self.head_relu.forward_inplace(&mut h);
        for b in &mut self.blocks {
            h = b.forward(&h)?;
        }
        let mut out = self.tail.forward(&h)?;
        if self.cfg.residual_output {
            for (o, &xv) in out.data_mut().iter_mut().zip(x.data()) {
                *o = xv - *o;
            }
        }
        Ok(out)
    }

    /// Backpropagates the gradient with respect to the enhanced output and
    /// returns the gradient with respect to the network input.
    pub fn backward(&mut self, d_out: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = d_out.clone();
        if self.cfg.residual_output {
            g.scale(-T::ONE);
        }
        let mut g = self.tail.backward(&g)?;
        for b in self.blocks.iter_mut().rev() {
            g = b.backward(&g)?;
        }
        let g = self.head_relu.backward(&g)?;
        let mut dx = self.head.backward(&g)?;
        if self.cfg.residual_output {
            dx.add_assign(d_out);
        }
        Ok(dx)
    }
}

impl<T: Real> Module<T> for WseNet<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut v = self.head.params();
        for b in &self.blocks {
            v.extend(b.params());
        }
        v.extend(self.tail.params());
        v
    }

    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.head.params_mut();
        for b in &mut self.blocks {
            v.extend(b.params_mut());
        }
        v.extend(self.tail.params_mut());
        v
    }

    fn set_training(&mut self, training: bool) {
        self.blocks.iter_mut().for_each(|b| b.set_training(training));
    }
}
