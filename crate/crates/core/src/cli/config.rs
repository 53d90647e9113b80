use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};
use crate::fed::{AdaptiveMuCfg, FedAlgorithm, FedAlgorithmKind, PartitionMode, PartitionSpec};
use crate::models::{JointLossCfg, NetworkCfg, WseNetCfg, WsrNetCfg};
use crate::signal::{default_snr_grid, ChannelConfig, DatasetSpec, ModScheme};
use crate::train::{CentralCfg, OptimizerCfg};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    CentralWsr,
    CentralWser,
    Fed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSection {
    pub schemes: Vec<ModScheme>,
    #[serde(default = "default_snr_grid")]
    pub snr_grid_db: Vec<f64>,
    pub frames_per_scheme_per_snr: usize,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    /// Frames of every (scheme, SNR) cell that go to training; the rest
    /// form the test set.
    pub train_per_cell: usize,
    #[serde(default)]
    pub channel: ChannelConfig,
}

fn default_frame_len() -> usize {
    128
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default = "default_lambda")]
    pub lambda: f64,
    pub recognizer: WsrNetCfg,
    #[serde(default)]
    pub enhancer: Option<WseNetCfg>,
}

fn default_lambda() -> f64 {
    JointLossCfg::default().lambda
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CentralSection {
    pub epochs: usize,
    #[serde(default)]
    pub target_accuracy: Option<f64>,
    /// Also log training-set accuracy after every epoch.
    #[serde(default)]
    pub eval_train: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedSection {
    pub algorithm: FedAlgorithmKind,
    pub num_clients: usize,
    pub clients_per_round: usize,
    pub rounds: usize,
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    pub partition: PartitionMode,
    #[serde(default = "default_classes_per_client")]
    pub classes_per_client: usize,
    /// Fixed weight for FedProx, `mu_0` for FedProxPlus; ignored by FedAvg.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default)]
    pub mu_min: Option<f64>,
    #[serde(default)]
    pub mu_max: Option<f64>,
    #[serde(default)]
    pub epsilon: Option<f64>,
}

fn default_local_epochs() -> usize {
    2
}
fn default_classes_per_client() -> usize {
    2
}
fn default_mu() -> f64 {
    0.01
}

/// Every seed must be given explicitly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Seeds {
    pub dataset: u64,
    pub model: u64,
    pub partition: u64,
    /// Client selection and mini-batch order.
    pub selection: u64,
}

impl Seeds {
    pub fn set(&mut self, name: &str, value: u64) -> Result<()> {
        match name {
            "dataset" => self.dataset = value,
            "model" => self.model = value,
            "partition" => self.partition = value,
            "selection" => self.selection = value,
            _ => return Err(Error::Config(format!("unknown seed '{name}' (dataset, model, partition, selection)"))),
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub mode: Mode,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    pub dataset: DatasetSection,
    pub model: ModelSection,
    pub optimizer: OptimizerCfg,
    #[serde(default)]
    pub central: Option<CentralSection>,
    #[serde(default)]
    pub fed: Option<FedSection>,
    pub seeds: Seeds,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.dataset_spec().validate().map_err(as_config)?;
        let d = &self.dataset;
        ensure!(
            d.train_per_cell >= 1 && d.train_per_cell < d.frames_per_scheme_per_snr,
            Config,
            "train_per_cell must lie in 1..{}",
            d.frames_per_scheme_per_snr
        );
        let net = self.network_cfg();
        net.validate().map_err(as_config)?;
        ensure!(
            net.num_classes() == d.schemes.len(),
            Config,
            "recognizer has {} classes but the dataset {} schemes",
            net.num_classes(),
            d.schemes.len()
        );
        ensure!(net.frame_len() == d.frame_len, Config, "model frame length {} != dataset {}", net.frame_len(), d.frame_len);
        self.loss().map_err(as_config)?;
        self.optimizer.validate()?;
        match self.mode {
            Mode::CentralWsr | Mode::CentralWser => {
                ensure!(self.central.is_some(), Config, "mode {:?} requires a [central] section", self.mode);
            }
            Mode::Fed => {
                ensure!(self.fed.is_some(), Config, "mode fed requires a [fed] section");
                self.fed_algorithm()?.validate()?;
            }
        }
        if self.mode == Mode::CentralWser {
            ensure!(self.model.enhancer.is_some(), Config, "mode central_wser requires [model.enhancer]");
        }
        Ok(())
    }

    pub fn dataset_spec(&self) -> DatasetSpec {
        let d = &self.dataset;
        DatasetSpec {
            schemes: d.schemes.clone(),
            snr_grid_db: d.snr_grid_db.clone(),
            frames_per_scheme_per_snr: d.frames_per_scheme_per_snr,
            frame_len: d.frame_len,
            channel: d.channel.clone(),
            seed: self.seeds.dataset,
        }
    }

    /// The enhancer is dropped in `central_wsr` mode.
    pub fn network_cfg(&self) -> NetworkCfg {
        let enhancer = match self.mode {
            Mode::CentralWsr => None,
            _ => self.model.enhancer.clone(),
        };
        NetworkCfg { enhancer, recognizer: self.model.recognizer.clone() }
    }

    pub fn loss(&self) -> Result<JointLossCfg> {
        JointLossCfg::new(self.model.lambda)
    }

    pub fn central_cfg(&self) -> Result<CentralCfg> {
        let c = self.central.as_ref().ok_or_else(|| Error::Config("missing [central] section".into()))?;
        Ok(CentralCfg {
            epochs: c.epochs,
            optimizer: self.optimizer.clone(),
            loss: self.loss()?,
            target_accuracy: c.target_accuracy,
            eval_train: c.eval_train,
        })
    }

    pub fn fed_section(&self) -> Result<&FedSection> {
        self.fed.as_ref().ok_or_else(|| Error::Config("missing [fed] section".into()))
    }

    pub fn fed_algorithm(&self) -> Result<FedAlgorithm> {
        let f = self.fed_section()?;
        let base = AdaptiveMuCfg::around(f.mu);
        let adaptive = AdaptiveMuCfg {
            mu_min: f.mu_min.unwrap_or(base.mu_min),
            mu_max: f.mu_max.unwrap_or(base.mu_max),
            epsilon: f.epsilon.unwrap_or(base.epsilon),
        };
        Ok(FedAlgorithm {
            kind: f.algorithm,
            mu: f.mu,
            local_epochs: f.local_epochs,
            optimizer: self.optimizer.clone(),
            loss: self.loss()?,
            adaptive: Some(adaptive),
        })
    }

    pub fn partition_spec(&self) -> Result<PartitionSpec> {
        let f = self.fed_section()?;
        Ok(PartitionSpec {
            mode: f.partition,
            num_clients: f.num_clients,
            classes_per_client: f.classes_per_client,
            seed: self.seeds.partition,
        })
    }
}

fn as_config(e: Error) -> Error {
    match e {
        Error::Param(m) | Error::Shape(m) | Error::Scheme(m) => Error::Config(m),
        other => other,
    }
}
