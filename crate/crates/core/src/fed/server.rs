use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::aggregate::{adaptive_mu, aggregate, select_clients, AdaptiveMuCfg};
use crate::error::{ensure, Error, Result};
use crate::models::{JointLossCfg, Network};
use crate::nncore::{flatten_params, load_params, ParamVector};
use crate::rng::derived_rng;
use crate::signal::Dataset;
use crate::train::{accuracy_on, train_epochs, OptimizerCfg, Proximal};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FedAlgorithmKind {
    FedAvg,
    FedProx,
    FedProxPlus,
}

impl FedAlgorithmKind {
    pub fn name(self) -> &'static str {
        match self {
            FedAlgorithmKind::FedAvg => "FedAvg",
            FedAlgorithmKind::FedProx => "FedProx",
            FedAlgorithmKind::FedProxPlus => "FedProxPlus",
        }
    }
}

/// Client-side algorithm settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FedAlgorithm {
    pub kind: FedAlgorithmKind,
    /// Proximal weight for FedProx; initial `mu_0` for FedProx+.
    #[serde(default = "default_mu")]
    pub mu: f64,
    #[serde(default = "default_local_epochs")]
    pub local_epochs: usize,
    pub optimizer: OptimizerCfg,
    #[serde(default)]
    pub loss: JointLossCfg,
    /// FedProx+ clamp; defaults to `[mu / 10, 10 mu]`, floor 0.01.
    #[serde(default)]
    pub adaptive: Option<AdaptiveMuCfg>,
}

fn default_mu() -> f64 {
    0.01
}
fn default_local_epochs() -> usize {
    2
}

impl FedAlgorithm {
    pub fn new(kind: FedAlgorithmKind, mu: f64, local_epochs: usize, optimizer: OptimizerCfg) -> Self {
        Self { kind, mu, local_epochs, optimizer, loss: JointLossCfg::default(), adaptive: None }
    }

    pub fn adaptive_cfg(&self) -> AdaptiveMuCfg {
        self.adaptive.unwrap_or_else(|| AdaptiveMuCfg::around(self.mu))
    }

    /// Proximal weight every client starts with.
    pub fn initial_mu(&self) -> f64 {
        match self.kind {
            FedAlgorithmKind::FedAvg => 0.0,
            _ => self.mu,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.optimizer.validate()?;
        self.loss.validate()?;
        ensure!(self.mu.is_finite() && self.mu >= 0.0, Config, "mu must be finite and non-negative");
        if self.kind == FedAlgorithmKind::FedProxPlus {
            self.adaptive_cfg().validate(self.mu)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClientState {
    pub id: usize,
    pub shard: Vec<usize>,
    pub mu: f64,
    /// Accuracy on the own shard after the most recent local training.
    pub performance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ServerState {
    pub global: ParamVector<f32>,
    pub round: usize,
    pub selection_probs: Vec<f64>,
}

/// Per-client outcome of one round.
#[derive(Debug, Clone, PartialEq)]
pub struct ClientReport {
    pub id: usize,
    pub performance: f64,
    /// Proximal weight used during this round's local training.
    pub mu: f64,
    pub local_loss: f64,
    pub num_samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    pub round: usize,
    pub selected: Vec<usize>,
    pub clients: Vec<ClientReport>,
    pub global_performance: f64,
    /// Every client's proximal weight after the round's update.
    pub mu_after: Vec<f64>,
    pub wall_time_s: f64,
}

impl RoundRecord {
    pub fn mean_performance(&self) -> f64 {
        mean(self.clients.iter().map(|c| c.performance))
    }
    pub fn mean_local_loss(&self) -> f64 {
        mean(self.clients.iter().map(|c| c.local_loss))
    }
    pub fn mu_range(&self) -> (f64, f64) {
        let mus = self.clients.iter().map(|c| c.mu);
        (mus.clone().fold(f64::INFINITY, f64::min), mus.fold(f64::NEG_INFINITY, f64::max))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    s / n.max(1) as f64
}

/// Shuffling stream of client `client` in round `round`.
pub fn client_seed(seed: u64, client: usize, round: usize) -> u64 {
    crate::rng::derive_seed(seed, &[client as u64, round as u64])
}

/// Runs `alg.local_epochs` epochs of proximal SGD from `w_t` on the shard.
/// Returns the new parameters, the mean loss of the last epoch and the
/// shard size.
pub fn local_train(
    template: &Network<f32>,
    w_t: &ParamVector<f32>,
    train: &Dataset,
    shard: &[usize],
    alg: &FedAlgorithm,
    mu: f64,
    seed: u64,
) -> Result<(ParamVector<f32>, f64, usize)> {
    ensure!(!shard.is_empty(), Param, "client shard is empty");
    let mut net = template.clone();
    load_params(&mut net, w_t)?;
    let prox = Proximal { mu, anchor: w_t };
    let mut rng = derived_rng(seed, &[]);
    let stats = train_epochs(&mut net, train, shard, &alg.optimizer, &alg.loss, alg.local_epochs, Some(&prox), &mut rng)?;
    let loss = stats.last().map_or(f64::NAN, |s| s.loss);
    Ok((flatten_params(&net), loss, shard.len()))
}

/// Accuracy of `params` on `indices` of `ds` with batch norm in eval mode.
pub fn evaluate(template: &Network<f32>, params: &ParamVector<f32>, ds: &Dataset, indices: &[usize]) -> Result<f64> {
    let mut net = template.clone();
    load_params(&mut net, params)?;
    accuracy_on(&mut net, ds, indices)
}

/// Federated simulation state.
pub struct Federation<'a> {
    pub server: ServerState,
    pub clients: Vec<ClientState>,
    pub alg: FedAlgorithm,
    pub clients_per_round: usize,
    pub template: Network<f32>,
    pub train: &'a Dataset,
    pub test: &'a Dataset,
    /// Seed for client selection and client shuffling streams.
    pub selection_seed: u64,
    pool: rayon::ThreadPool,
}

impl<'a> Federation<'a> {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        template: Network<f32>,
        shards: Vec<Vec<usize>>,
        alg: FedAlgorithm,
        clients_per_round: usize,
        train: &'a Dataset,
        test: &'a Dataset,
        selection_seed: u64,
        max_parallel: usize,
    ) -> Result<Self> {
        alg.validate()?;
        ensure!(!shards.is_empty(), Param, "no clients");
        ensure!(shards.iter().all(|s| !s.is_empty()), Param, "every client shard must be nonempty");
        ensure!(
            (1..=shards.len()).contains(&clients_per_round),
            Config,
            "clients per round {clients_per_round} must lie in 1..={}",
            shards.len()
        );
        ensure!(!test.is_empty(), Param, "empty test set");
        let n = shards.len();
        let mu = alg.initial_mu();
        let clients = shards
            .into_iter()
            .enumerate()
            .map(|(id, shard)| ClientState { id, shard, mu, performance: None })
            .collect();
        let server = ServerState { global: flatten_params(&template), round: 0, selection_probs: vec![1.0 / n as f64; n] };
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(max_parallel.max(1))
            .build()
            .map_err(|e| Error::Config(e.to_string()))?;
        Ok(Self { server, clients, alg, clients_per_round, template, train, test, selection_seed, pool })
    }

    /// One round: select, train locally, aggregate, evaluate and, for
    /// FedProx+, refresh every client's proximal weight.
    pub fn run_round(&mut self) -> Result<RoundRecord> {
        let start = Instant::now();
        let t = self.server.round;
        let mut sel_rng = derived_rng(self.selection_seed, &[u64::MAX, t as u64]);
        let selected = select_clients(&self.server.selection_probs, self.clients_per_round, &mut sel_rng)?;
        let w_t = &self.server.global;
        let (template, train, alg, seed) = (&self.template, self.train, &self.alg, self.selection_seed);
        let clients = &self.clients;
        let results: Vec<(ParamVector<f32>, ClientReport)> = self.pool.install(|| {
            selected
                .par_iter()
                .map(|&k| {
                    let c = &clients[k];
                    let (w_k, loss, n_k) = local_train(template, w_t, train, &c.shard, alg, c.mu, client_seed(seed, k, t))?;
                    let performance = evaluate(template, &w_k, train, &c.shard)?;
                    Ok((w_k, ClientReport { id: k, performance, mu: c.mu, local_loss: loss, num_samples: n_k }))
                })
                .collect::<Result<Vec<_>>>()
        })?;
        let updates: Vec<(&ParamVector<f32>, usize)> = results.iter().map(|(w, r)| (w, r.num_samples)).collect();
        let global = aggregate(&updates)?;
        let all_test: Vec<usize> = (0..self.test.len()).collect();
        let p_global = evaluate(&self.template, &global, self.test, &all_test)?;
        for (_, r) in &results {
            self.clients[r.id].performance = Some(r.performance);
        }
        if self.alg.kind == FedAlgorithmKind::FedProxPlus {
            let cfg = self.alg.adaptive_cfg();
            for c in &mut self.clients {
                if let Some(p_k) = c.performance {
                    c.mu = adaptive_mu(p_k, p_global, self.alg.mu, &cfg);
                }
            }
        }
        self.server.global = global;
        self.server.round += 1;
        Ok(RoundRecord {
            round: t,
            selected,
            clients: results.into_iter().map(|(_, r)| r).collect(),
            global_performance: p_global,
            mu_after: self.clients.iter().map(|c| c.mu).collect(),
            wall_time_s: start.elapsed().as_secs_f64(),
        })
    }

    /// Runs `rounds` rounds, reporting each record as it completes.
    pub fn run(&mut self, rounds: usize, mut on_round: impl FnMut(&RoundRecord)) -> Result<Vec<RoundRecord>> {
        (0..rounds)
            .map(|_| {
                let r = self.run_round()?;
                on_round(&r);
                Ok(r)
            })
            .collect()
    }
}
