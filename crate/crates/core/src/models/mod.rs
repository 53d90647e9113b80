//! ACBlock, enhancer, recognizer and the joint network.

pub mod acblock;
pub mod config;
pub mod summary;
pub mod wsenet;
pub mod wsernet;
pub mod wsrnet;

pub use acblock::{AcBlock, AcBlockCfg};
pub use config::{JointLossCfg, WseNetCfg, WsrNetCfg};
pub use summary::{
    model_summary, wsenet_summary, wsrnet_summary, ModelSummary, SummaryRow, WSENET_REFERENCE_PARAMS, WSRNET_REFERENCE_PARAMS,
};
pub use wsenet::WseNet;
pub use wsernet::{joint_loss, LossParts, Network, NetworkCfg, WserNet};
pub use wsrnet::WsrNet;
