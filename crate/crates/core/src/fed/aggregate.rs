use std::cmp::Ordering;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::nncore::ParamVector;

/// Sample-count weighted mean `sum_k (n_k / sum_j n_j) * w_k`, applied to
/// every entry including batch-norm running statistics.
///
/// Products and sums are formed in `f64` over a canonical ordering of the
/// updates, so the result does not depend on the order of `updates`.
pub fn aggregate(updates: &[(&ParamVector<f32>, usize)]) -> Result<ParamVector<f32>> {
    ensure!(!updates.is_empty(), Param, "nothing to aggregate");
    let first = updates[0].0;
    for (w, _) in &updates[1..] {
        first.check_layout(w)?;
    }
    let total: usize = updates.iter().map(|u| u.1).sum();
    ensure!(total > 0, Param, "aggregation weights sum to zero");
    let mut order: Vec<&(&ParamVector<f32>, usize)> = updates.iter().collect();
    order.sort_by(|a, b| a.1.cmp(&b.1).then_with(|| cmp_values(a.0.values(), b.0.values())));
    let mut acc = vec![0f64; first.len()];
    for (w, n) in order {
        let n = *n as f64;
        for (a, &v) in acc.iter_mut().zip(w.values()) {
            *a += n * v as f64;
        }
    }
    let total = total as f64;
    let values = acc.into_iter().map(|a| (a / total) as f32).collect();
    ParamVector::new(first.layout().clone(), values)
}

fn cmp_values(a: &[f32], b: &[f32]) -> Ordering {
    a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(Ordering::Equal)
}

/// Clamp bounds and floor for [`adaptive_mu`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdaptiveMuCfg {
    pub mu_min: f64,
    pub mu_max: f64,
    pub epsilon: f64,
}

impl AdaptiveMuCfg {
    /// `[mu_0 / 10, 10 mu_0]` with a performance floor of 0.01.
    pub fn around(mu_0: f64) -> Self {
        Self { mu_min: mu_0 / 10.0, mu_max: 10.0 * mu_0, epsilon: 0.01 }
    }

    pub fn validate(&self, mu_0: f64) -> Result<()> {
        ensure!(mu_0 > 0.0 && mu_0.is_finite(), Config, "mu_0 must be positive");
        ensure!(self.epsilon > 0.0, Config, "epsilon must be positive");
        ensure!(
            0.0 <= self.mu_min && self.mu_min <= mu_0 && mu_0 <= self.mu_max,
            Config,
            "need 0 <= mu_min <= mu_0 <= mu_max"
        );
        Ok(())
    }
}

/// `clamp(mu_0 * P_global / max(P_k, epsilon), mu_min, mu_max)`: clients
/// lagging the global model are pulled harder towards it.
pub fn adaptive_mu(p_k: f64, p_global: f64, mu_0: f64, cfg: &AdaptiveMuCfg) -> f64 {
    (mu_0 * p_global / p_k.max(cfg.epsilon)).clamp(cfg.mu_min, cfg.mu_max)
}

/// Draws `k` distinct clients, returned in ascending order. Uniform
/// `probs` give uniform sampling without replacement; otherwise clients
/// are drawn successively in proportion to `probs`.
pub fn select_clients<R: rand::Rng + ?Sized>(probs: &[f64], k: usize, rng: &mut R) -> Result<Vec<usize>> {
    let n = probs.len();
    ensure!(k >= 1, Param, "must select at least one client");
    ensure!(k <= n, Param, "cannot select {k} of {n} clients");
    ensure!(probs.iter().all(|p| p.is_finite() && *p >= 0.0), Param, "selection probabilities must be non-negative");
    let uniform = probs.iter().all(|&p| p == probs[0]);
    let mut picked = if uniform {
        index::sample(rng, n, k).into_vec()
    } else {
        ensure!(probs.iter().filter(|&&p| p > 0.0).count() >= k, Param, "fewer than {k} clients have positive probability");
        index::sample_weighted(rng, n, |i| probs[i], k)
            .map_err(|e| crate::Error::Param(e.to_string()))?
            .into_vec()
    };
    picked.sort_unstable();
    Ok(picked)
}
