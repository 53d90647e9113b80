use serde::{Deserialize, Serialize};
use sha2::{Digest as _, Sha256};

use super::config::{JointLossCfg, WseNetCfg, WsrNetCfg};
use super::wsenet::WseNet;
use super::wsrnet::WsrNet;
use crate::error::{ensure, Result};
use crate::nncore::{mse_loss, softmax_cross_entropy, Digest, Module, Param, Real, Tensor};
use crate::rng::derived_rng;

/// Enhancer followed by recognizer, trained end to end.
#[derive(Debug, Clone)]
pub struct WserNet<T> {
    pub enhancer: WseNet<T>,
    pub recognizer: WsrNet<T>,
}

impl<T: Real> WserNet<T> {
    /// Returns the enhanced frames and the recognizer logits.
    pub fn forward(&mut self, x: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
        let s_hat = self.enhancer.forward(x)?;
        let logits = self.recognizer.forward(&s_hat)?;
        Ok((s_hat, logits))
    }

    /// `d_s_hat` is the gradient of the enhancement term; the recognition
    /// gradient flowing back through the recognizer is added to it before
    /// entering the enhancer.
    pub fn backward(&mut self, d_s_hat: &Tensor<T>, d_logits: &Tensor<T>) -> Result<()> {
        let mut g = self.recognizer.backward(d_logits)?;
        g.add_assign(d_s_hat);
        self.enhancer.backward(&g)?;
        Ok(())
    }
}

impl<T: Real> Module<T> for WserNet<T> {
    fn params(&self) -> Vec<&Param<T>> {
        let mut v = self.enhancer.params();
        v.extend(self.recognizer.params());
        v
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        let mut v = self.enhancer.params_mut();
        v.extend(self.recognizer.params_mut());
        v
    }
    fn set_training(&mut self, training: bool) {
        self.enhancer.set_training(training);
        self.recognizer.set_training(training);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct LossParts {
    pub total: f64,
    pub mse: f64,
    pub ce: f64,
}

/// Joint loss `lambda * MSE(s_hat, s_star) + (1 - lambda) * CE(logits, labels)`
/// with the gradients of both inputs.
pub fn joint_loss<T: Real>(
    s_hat: &Tensor<T>,
    s_star: &Tensor<T>,
    logits: &Tensor<T>,
    labels: &[usize],
    cfg: &JointLossCfg,
) -> Result<(LossParts, Tensor<T>, Tensor<T>)> {
    cfg.validate()?;
    let (mse, mut d_s) = mse_loss(s_hat, s_star)?;
    let (ce, mut d_logits) = softmax_cross_entropy(logits, labels)?;
    let lambda = cfg.lambda;
    d_s.scale(T::from_f64(lambda));
    d_logits.scale(T::from_f64(1.0 - lambda));
    let total = lambda * mse + (1.0 - lambda) * ce;
    Ok((LossParts { total, mse, ce }, d_s, d_logits))
}

/// Architecture of a trainable network: a recognizer, optionally preceded
/// by an enhancer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkCfg {
    pub enhancer: Option<WseNetCfg>,
    pub recognizer: WsrNetCfg,
}

impl NetworkCfg {
    pub fn validate(&self) -> Result<()> {
        self.recognizer.validate()?;
        if let Some(e) = &self.enhancer {
            e.validate()?;
            ensure!(
                e.frame_len == self.recognizer.frame_len,
                Param,
                "enhancer frame length {} differs from recognizer {}",
                e.frame_len,
                self.recognizer.frame_len
            );
        }
        Ok(())
    }

    pub fn frame_len(&self) -> usize {
        self.recognizer.frame_len
    }

    pub fn num_classes(&self) -> usize {
        self.recognizer.num_classes
    }

    /// Builds a network with weights drawn from `seed`. A residual enhancer
    /// starts with a zeroed tail, i.e. as the identity map.
    pub fn build<T: Real>(&self, seed: u64) -> Result<Network<T>> {
        self.validate()?;
        let mut rng = derived_rng(seed, &[0x6d_6f64_656c]);
        Ok(match &self.enhancer {
            None => Network::Recognizer(WsrNet::new(self.recognizer.clone(), &mut rng)?),
            Some(e) => {
                let mut enhancer = WseNet::new(e.clone(), &mut rng)?;
                if e.residual_output {
                    enhancer.zero_tail();
                }
                let recognizer = WsrNet::new(self.recognizer.clone(), &mut rng)?;
                Network::Joint(WserNet { enhancer, recognizer })
            }
        })
    }

    /// SHA-256 of the canonical TOML rendering of the architecture.
    pub fn digest(&self) -> Digest {
        let text = toml::to_string(self).expect("architecture config serializes");
        Sha256::digest(text.as_bytes()).into()
    }
}

/// Either the recognizer alone or the joint enhancer + recognizer.
#[derive(Debug, Clone)]
pub enum Network<T> {
    Recognizer(WsrNet<T>),
    Joint(WserNet<T>),
}

impl<T: Real> Network<T> {
    pub fn logits(&mut self, x: &Tensor<T>) -> Result<Tensor<T>> {
        match self {
            Network::Recognizer(r) => r.forward(x),
            Network::Joint(j) => Ok(j.forward(x)?.1),
        }
    }

    /// Enhanced frames, when the network has an enhancer.
    pub fn enhance(&mut self, x: &Tensor<T>) -> Option<Result<Tensor<T>>> {
        match self {
            Network::Recognizer(_) => None,
            Network::Joint(j) => Some(j.enhancer.forward(x)),
        }
    }

    pub fn has_enhancer(&self) -> bool {
        matches!(self, Network::Joint(_))
    }

    /// Zeroes gradients, runs forward and backward on one batch and leaves
    /// the loss gradients in the parameter buffers. A recognizer alone is
    /// trained on cross-entropy only.
    pub fn forward_backward(
        &mut self,
        x: &Tensor<T>,
        s_star: &Tensor<T>,
        labels: &[usize],
        loss: &JointLossCfg,
    ) -> Result<LossParts> {
        self.zero_grad();
        match self {
            Network::Recognizer(r) => {
                let logits = r.forward(x)?;
                let (ce, d) = softmax_cross_entropy(&logits, labels)?;
                r.backward(&d)?;
                Ok(LossParts { total: ce, mse: f64::NAN, ce })
            }
            Network::Joint(j) => {
                let (s_hat, logits) = j.forward(x)?;
                let (parts, d_s, d_logits) = joint_loss(&s_hat, s_star, &logits, labels, loss)?;
                j.backward(&d_s, &d_logits)?;
                Ok(parts)
            }
        }
    }

    /// Loss only, no backward pass.
    pub fn loss(&mut self, x: &Tensor<T>, s_star: &Tensor<T>, labels: &[usize], loss: &JointLossCfg) -> Result<LossParts> {
        match self {
            Network::Recognizer(r) => {
                let ce = softmax_cross_entropy(&r.forward(x)?, labels)?.0;
                Ok(LossParts { total: ce, mse: f64::NAN, ce })
            }
            Network::Joint(j) => {
                let (s_hat, logits) = j.forward(x)?;
                Ok(joint_loss(&s_hat, s_star, &logits, labels, loss)?.0)
            }
        }
    }
}

impl<T: Real> Module<T> for Network<T> {
    fn params(&self) -> Vec<&Param<T>> {
        match self {
            Network::Recognizer(r) => r.params(),
            Network::Joint(j) => j.params(),
        }
    }
    fn params_mut(&mut self) -> Vec<&mut Param<T>> {
        match self {
            Network::Recognizer(r) => r.params_mut(),
            Network::Joint(j) => j.params_mut(),
        }
    }
    fn set_training(&mut self, training: bool) {
        match self {
            Network::Recognizer(r) => r.set_training(training),
            Network::Joint(j) => j.set_training(training),
        }
    }
}
