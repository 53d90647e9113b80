//! Simulated federated training: partitioning, client selection, proximal
//! local training, weighted aggregation and adaptive proximal weights.

pub mod aggregate;
pub mod partition;
pub mod server;

pub use aggregate::{adaptive_mu, aggregate, select_clients, AdaptiveMuCfg};
pub use partition::{partition_iid, partition_noniid, PartitionMode, PartitionSpec};
pub use server::{
    client_seed, evaluate, local_train, ClientReport, ClientState, FedAlgorithm, FedAlgorithmKind, Federation, RoundRecord,
    ServerState,
};
