//! Federated exactness oracles shared by the integration tests and the
//! acceptance run.

use wser::fed::{adaptive_mu, aggregate, client_seed, AdaptiveMuCfg, FedAlgorithm, FedAlgorithmKind, Federation};
use wser::models::{JointLossCfg, NetworkCfg, WsrNetCfg};
use wser::nncore::{flatten_params, load_params, Module, ParamVector};
use wser::rng::rng_from_seed;
use wser::signal::{Dataset, ModScheme};
use wser::train::{add_proximal_grad, make_batch, train_central, CentralCfg, OptimizerCfg, Proximal};

use super::{randn, small_dataset, small_joint_cfg, FD_STEP};

pub fn fixture() -> (Dataset, Dataset) {
    let ds = small_dataset(&[ModScheme::Bpsk, ModScheme::Qpsk, ModScheme::Gfsk], &[4.0, 12.0], 12, 16, 9);
    ds.split_per_cell(9)
}

pub fn small_recognizer(num_classes: usize) -> NetworkCfg {
    NetworkCfg {
        enhancer: None,
        recognizer: WsrNetCfg { channels: vec![4, 6], strides: vec![1, 2], num_classes, fc_bias: false, frame_len: 16 },
    }
}

fn optimizer() -> OptimizerCfg {
    OptimizerCfg::new(0.05, 8)
}

/// Random updates over the layout of a real network, compared against the
/// weighted mean written out entry by entry in input order.
pub fn aggregation_matches_brute_force(seed: u64, clients: usize) -> bool {
    let mut rng = rng_from_seed(seed);
    let template = flatten_params(&small_recognizer(3).build::<f32>(seed).unwrap());
    let updates: Vec<(ParamVector<f32>, usize)> = (0..clients)
        .map(|k| {
            let values = randn(&mut rng, template.len()).into_iter().map(|v| v as f32).collect();
            (ParamVector::new(template.layout().clone(), values).unwrap(), 1 + (k * 37 + seed as usize) % 50)
        })
        .collect();
    let refs: Vec<(&ParamVector<f32>, usize)> = updates.iter().map(|(w, n)| (w, *n)).collect();
    let got = aggregate(&refs).unwrap();
    let total: usize = updates.iter().map(|u| u.1).sum();
    (0..template.len()).all(|i| {
        let num: f64 = updates.iter().map(|(w, n)| *n as f64 * w.values()[i] as f64).sum();
        got.values()[i] == (num / total as f64) as f32
    })
}

fn run(kind: FedAlgorithmKind, mu: f64, shards: Vec<Vec<usize>>, k: usize, epochs: usize, rounds: usize, seed: u64) -> Vec<ParamVector<f32>> {
    let (train, test) = fixture();
    let template = small_joint_cfg(16, 3).build::<f32>(4).unwrap();
    let alg = FedAlgorithm::new(kind, mu, epochs, optimizer());
    let mut fed = Federation::new(template, shards, alg, k, &train, &test, seed, 1).unwrap();
    (0..rounds)
        .map(|_| {
            fed.run_round().unwrap();
            fed.server.global.clone()
        })
        .collect()
}

/// FedAvg and FedProx with `mu = 0` produce bit-identical global models.
pub fn fedavg_equals_fedprox_mu0() -> bool {
    let (train, _) = fixture();
    let shards = wser::fed::partition_iid(train.len(), 4, 5).unwrap();
    let a = run(FedAlgorithmKind::FedAvg, 0.0, shards.clone(), 2, 2, 3, 11);
    let b = run(FedAlgorithmKind::FedProx, 0.0, shards, 2, 2, 3, 11);
    a.iter().zip(&b).all(|(x, y)| x.values() == y.values())
}

/// One FedAvg round with a single client holding every sample equals
/// `epochs` centralized epochs from the same initialization and stream.
pub fn single_client_equals_central(epochs: usize) -> bool {
    let (train, test) = fixture();
    let seed = 21;
    let all: Vec<usize> = (0..train.len()).collect();
    let fed = run(FedAlgorithmKind::FedAvg, 0.0, vec![all], 1, epochs, 1, seed);

    let mut net = small_joint_cfg(16, 3).build::<f32>(4).unwrap();
    let cfg = CentralCfg {
        epochs,
        optimizer: optimizer(),
        loss: JointLossCfg::default(),
        target_accuracy: None,
        eval_train: false,
    };
    train_central(&mut net, &train, &test, &cfg, client_seed(seed, 0, 0), |_| {}).unwrap();
    flatten_params(&net).values() == fed[0].values()
}

/// Worst relative error between the proximal objective's analytic gradient
/// and central differences of `F_k(w) + mu/2 ||w - w_t||^2`.
pub fn proximal_identity_err(mu: f64) -> f64 {
    let (train, _) = fixture();
    let mut net = small_joint_cfg(16, 3).build::<f64>(6).unwrap();
    super::perturb_tail(&mut net, &mut rng_from_seed(1));
    let mut anchor = flatten_params(&net);
    let mut rng = rng_from_seed(2);
    let noise = randn(&mut rng, anchor.len());
    for range in anchor.layout().clone().trainable_ranges() {
        for i in range {
            anchor.values_mut()[i] += 0.1 * noise[i];
        }
    }
    let idx: Vec<usize> = (0..12).collect();
    let batch = make_batch::<f64>(&train, &idx).unwrap();
    let loss = JointLossCfg::default();

    let objective = |net: &mut wser::models::Network<f64>| -> f64 {
        let f = net.loss(&batch.x, &batch.s_star, &batch.labels, &loss).unwrap().total;
        f + 0.5 * mu * flatten_params(net).trainable_sq_distance(&anchor).unwrap()
    };
    net.set_training(true);
    net.forward_backward(&batch.x, &batch.s_star, &batch.labels, &loss).unwrap();
    add_proximal_grad(&mut net, &Proximal { mu, anchor: &anchor }).unwrap();
    let analytic: Vec<f64> = net.params().iter().flat_map(|p| p.grad.clone()).collect();

    let base = flatten_params(&net);
    let mut worst: f64 = 0.0;
    for range in base.layout().trainable_ranges() {
        for i in range.step_by(3) {
            let mut w = base.clone();
            w.values_mut()[i] += FD_STEP;
            load_params(&mut net, &w).unwrap();
            let up = objective(&mut net);
            w.values_mut()[i] -= 2.0 * FD_STEP;
            load_params(&mut net, &w).unwrap();
            let down = objective(&mut net);
            worst = worst.max(super::rel_err(analytic[i], (up - down) / (2.0 * FD_STEP)));
        }
    }
    load_params(&mut net, &base).unwrap();
    worst
}

/// Checks the adaptive weight on the grid `P in {0, 0.1, ..., 1}^2`:
/// fixed point at `P_k = P_global`, non-increasing in `P_k`,
/// non-decreasing in `P_global`, and clamped. Returns the violations.
pub fn adaptive_mu_grid_violations(mu_0: f64, cfg: &AdaptiveMuCfg) -> Vec<String> {
    let grid: Vec<f64> = (0..=10).map(|i| i as f64 / 10.0).collect();
    let mut bad = Vec::new();
    for &pk in &grid {
        for &pg in &grid {
            let mu = adaptive_mu(pk, pg, mu_0, cfg);
            if !(cfg.mu_min..=cfg.mu_max).contains(&mu) {
                bad.push(format!("mu({pk}, {pg}) = {mu} outside bounds"));
            }
            if pk == pg && pk >= cfg.epsilon && (mu - mu_0).abs() > 1e-15 {
                bad.push(format!("mu({pk}, {pk}) = {mu} != mu_0"));
            }
            if pk + 0.1 <= 1.0 + 1e-12 && adaptive_mu(pk + 0.1, pg, mu_0, cfg) > mu {
                bad.push(format!("mu increases in P_k at ({pk}, {pg})"));
            }
            if pg + 0.1 <= 1.0 + 1e-12 && adaptive_mu(pk, pg + 0.1, mu_0, cfg) < mu {
                bad.push(format!("mu decreases in P_global at ({pk}, {pg})"));
            }
        }
    }
    bad
}
