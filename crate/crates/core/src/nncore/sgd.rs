use super::{Param, ParamKind, ParamVector, Real};
use crate::error::{ensure, Result};

pub const DEFAULT_MOMENTUM: f64 = 0.9;
pub const DEFAULT_WEIGHT_DECAY: f64 = 0.0005;

/// SGD with heavy-ball momentum and L2 weight decay:
/// `v <- momentum * v + g + wd * p`, `p <- p - lr * v`.
/// Decay applies to conv/linear weights only; running statistics are
/// never touched.
#[derive(Debug, Clone)]
pub struct Sgd<T> {
    pub lr: f64,
    pub momentum: f64,
    pub weight_decay: f64,
    velocity: Vec<T>,
}

impl<T: Real> Sgd<T> {
    pub fn new(lr: f64, momentum: f64, weight_decay: f64) -> Self {
        Self { lr, momentum, weight_decay, velocity: Vec::new() }
    }

    pub fn velocity(&self) -> &[T] {
        &self.velocity
    }

    fn update(&mut self, offset: usize, kind: ParamKind, value: &mut [T], grad: &[T]) {
        if !kind.is_trainable() {
            return;
        }
        let lr = T::from_f64(self.lr);
        let mom = T::from_f64(self.momentum);
        let wd = if kind.decays() { T::from_f64(self.weight_decay) } else { T::ZERO };
        let v = &mut self.velocity[offset..offset + value.len()];
        for ((p, &g), v) in value.iter_mut().zip(grad).zip(v) {
            *v = mom * *v + g + wd * *p;
            *p -= lr * *v;
        }
    }

    fn ensure_velocity(&mut self, total: usize) -> Result<()> {
        if self.velocity.is_empty() {
            self.velocity = vec![T::ZERO; total];
        }
        ensure!(self.velocity.len() == total, Layout, "optimizer state sized for {} values, got {total}", self.velocity.len());
        Ok(())
    }

    /// Updates model parameters in place from their gradient buffers.
    pub fn step(&mut self, params: Vec<&mut Param<T>>) -> Result<()> {
        let total = params.iter().map(|p| p.value.len()).sum();
        self.ensure_velocity(total)?;
        let mut offset = 0;
        for p in params {
            let len = p.value.len();
            let Param { kind, value, grad, .. } = p;
            self.update(offset, *kind, value, grad);
            offset += len;
        }
        Ok(())
    }

    /// Flat-vector form of [`Sgd::step`].
    pub fn step_vector(&mut self, params: &mut ParamVector<T>, grads: &ParamVector<T>) -> Result<()> {
        params.check_layout(grads)?;
        self.ensure_velocity(params.len())?;
        let layout = params.layout().clone();
        for e in layout.entries() {
            let r = e.offset..e.offset + e.len;
            self.update(e.offset, e.kind, &mut params.values_mut()[r.clone()], &grads.values()[r]);
        }
        Ok(())
    }
}
