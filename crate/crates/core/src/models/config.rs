use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

/// Enhancer architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WseNetCfg {
    #[serde(default = "default_width")]
    pub width: usize,
    #[serde(default = "default_depth")]
    pub depth_blocks: usize,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    #[serde(default = "default_true")]
    pub residual_output: bool,
}

fn default_width() -> usize {
    32
}
fn default_depth() -> usize {
    15
}
fn default_frame_len() -> usize {
    128
}
fn default_true() -> bool {
    true
}

impl Default for WseNetCfg {
    fn default() -> Self {
        Self { width: 32, depth_blocks: 15, frame_len: 128, residual_output: true }
    }
}

impl WseNetCfg {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.width >= 1, Param, "enhancer width must be positive");
        ensure!(self.frame_len >= 1, Param, "frame length must be positive");
        Ok(())
    }
}

/// Recognizer architecture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WsrNetCfg {
    pub channels: Vec<usize>,
    pub strides: Vec<usize>,
    pub num_classes: usize,
    #[serde(default)]
    pub fc_bias: bool,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
}

impl WsrNetCfg {
    /// Full-width recognizer: channels `[64, 128, 256, 512]`, strides `[1, 2, 2, 2]`.
    pub fn full(num_classes: usize) -> Self {
        Self { channels: vec![64, 128, 256, 512], strides: vec![1, 2, 2, 2], num_classes, fc_bias: false, frame_len: 128 }
    }

    /// Reduced-width recognizer used for desk-scale runs.
    pub fn reduced(num_classes: usize) -> Self {
        Self { channels: vec![16, 32, 64, 128], ..Self::full(num_classes) }
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.channels.is_empty(), Param, "recognizer needs at least one block");
        ensure!(
            self.channels.len() == self.strides.len(),
            Param,
            "{} channel entries vs {} strides",
            self.channels.len(),
            self.strides.len()
        );
        ensure!(self.num_classes >= 1, Param, "num_classes must be positive");
        let total: usize = self.strides.iter().product();
        ensure!(
            total > 0 && self.frame_len.is_multiple_of(total),
            Param,
            "frame length {} not divisible by total stride {total}",
            self.frame_len
        );
        Ok(())
    }
}

/// Weight of the enhancement term in the joint loss.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLossCfg {
    pub lambda: f64,
}

impl Default for JointLossCfg {
    fn default() -> Self {
        Self { lambda: 0.3 }
    }
}

impl JointLossCfg {
    pub fn new(lambda: f64) -> Result<Self> {
        let cfg = Self { lambda };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!((0.0..=1.0).contains(&self.lambda), Param, "lambda {} outside [0, 1]", self.lambda);
        Ok(())
    }
}
