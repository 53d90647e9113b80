mod common;

use std::collections::BTreeSet;

use common::fed::*;
use proptest::prelude::*;
use wser::fed::{adaptive_mu, aggregate, partition_iid, partition_noniid, select_clients, AdaptiveMuCfg};
use wser::nncore::{flatten_params, load_params, ParamVector};
use wser::rng::rng_from_seed;

#[test]
fn aggregation_is_brute_force_weighted_mean() {
    for seed in 0..5 {
        assert!(aggregation_matches_brute_force(seed, 1 + seed as usize * 2), "seed {seed}");
    }
}

#[test]
fn fedavg_is_fedprox_with_zero_mu() {
    assert!(fedavg_equals_fedprox_mu0());
}

#[test]
fn one_client_round_is_central_training() {
    assert!(single_client_equals_central(1));
    assert!(single_client_equals_central(2));
}

#[test]
fn proximal_gradient_identity() {
    for mu in [0.01, 0.5] {
        let err = proximal_identity_err(mu);
        assert!(err < 1e-5, "mu {mu}: {err:e}");
    }
}

#[test]
fn adaptive_mu_grid() {
    let bad = adaptive_mu_grid_violations(0.01, &AdaptiveMuCfg::around(0.01));
    assert!(bad.is_empty(), "{bad:?}");
}

#[test]
fn uniform_selection_frequencies() {
    let (n, k, draws) = (10, 3, 20_000);
    let mut counts = vec![0usize; n];
    let mut rng = rng_from_seed(17);
    for _ in 0..draws {
        let s = select_clients(&vec![1.0; n], k, &mut rng).unwrap();
        assert_eq!(s.len(), k);
        assert!(s.windows(2).all(|w| w[0] < w[1]));
        s.iter().for_each(|&c| counts[c] += 1);
    }
    // each client is picked with probability k/n; 5 standard errors
    let p = k as f64 / n as f64;
    let sd = (p * (1.0 - p) / draws as f64).sqrt();
    for c in counts {
        assert!((c as f64 / draws as f64 - p).abs() < 5.0 * sd);
    }
}

#[test]
fn weighted_selection_never_picks_zero_weight() {
    let probs = [0.0, 1.0, 2.0, 0.0, 3.0];
    let mut rng = rng_from_seed(3);
    for _ in 0..500 {
        let s = select_clients(&probs, 2, &mut rng).unwrap();
        assert!(s.iter().all(|&c| probs[c] > 0.0));
    }
    assert!(select_clients(&probs, 4, &mut rng).is_err());
}

#[test]
fn iid_shards_preserve_class_balance() {
    let (train, _) = common::fed::fixture();
    let big: Vec<usize> = (0..6000).map(|i| i % 4).collect();
    let shards = partition_iid(big.len(), 5, 2).unwrap();
    for shard in &shards {
        for c in 0..4 {
            let frac = shard.iter().filter(|&&i| big[i] == c).count() as f64 / shard.len() as f64;
            assert!((frac - 0.25).abs() < 0.03, "class {c} fraction {frac}");
        }
    }
    assert_eq!(partition_iid(train.len(), 3, 1).unwrap().len(), 3);
}

fn is_partition(shards: &[Vec<usize>], n: usize) -> bool {
    let mut seen = BTreeSet::new();
    shards.iter().flatten().all(|&i| seen.insert(i)) && seen.len() == n && seen.iter().all(|&i| i < n)
}

fn vector(layout_seed: u64, values: &[f32]) -> ParamVector<f32> {
    let template = flatten_params(&small_recognizer(2).build::<f32>(layout_seed).unwrap());
    let mut v = template.clone();
    for (dst, src) in v.values_mut().iter_mut().zip(values.iter().cycle()) {
        *dst = *src;
    }
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn iid_partition_is_disjoint_and_exhaustive(n in 1usize..400, clients in 1usize..20, seed in any::<u64>()) {
        prop_assume!(clients <= n);
        let shards = partition_iid(n, clients, seed).unwrap();
        prop_assert_eq!(shards.len(), clients);
        prop_assert!(is_partition(&shards, n));
        let sizes: Vec<usize> = shards.iter().map(Vec::len).collect();
        prop_assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
    }

    #[test]
    fn noniid_partition_is_disjoint_exhaustive_and_label_limited(
        m in 2usize..6,
        per_class in 20usize..60,
        clients in 1usize..12,
        cpc in 1usize..4,
        seed in any::<u64>(),
    ) {
        prop_assume!(clients * cpc >= m);
        let labels: Vec<usize> = (0..m * per_class).map(|i| i % m).collect();
        let shards = partition_noniid(&labels, m, clients, cpc, seed).unwrap();
        prop_assert_eq!(shards.len(), clients);
        prop_assert!(is_partition(&shards, labels.len()));
        for s in &shards {
            let classes: BTreeSet<usize> = s.iter().map(|&i| labels[i]).collect();
            prop_assert!(classes.len() <= cpc);
        }
    }

    #[test]
    fn aggregation_ignores_update_order(
        raw in prop::collection::vec((prop::collection::vec(-10.0f32..10.0, 1..8), 1usize..100), 1..6),
        rot in 0usize..6,
    ) {
        let updates: Vec<(ParamVector<f32>, usize)> = raw.iter().map(|(v, n)| (vector(1, v), *n)).collect();
        let refs: Vec<(&ParamVector<f32>, usize)> = updates.iter().map(|(w, n)| (w, *n)).collect();
        let mut rotated = refs.clone();
        rotated.rotate_left(rot % refs.len());
        rotated.reverse();
        let (a, b) = (aggregate(&refs).unwrap(), aggregate(&rotated).unwrap());
        prop_assert_eq!(a.values(), b.values());
    }

    #[test]
    fn aggregation_fixed_points(values in prop::collection::vec(-10.0f32..10.0, 1..8), n in 1usize..1000, copies in 1usize..5) {
        let w = vector(1, &values);
        let same: Vec<(&ParamVector<f32>, usize)> = (0..copies).map(|_| (&w, n)).collect();
        let avg = aggregate(&same).unwrap();
        prop_assert_eq!(avg.values(), w.values());
        let other = vector(1, &[123.0]);
        let one_hot = [(&w, n), (&other, 0)];
        let avg = aggregate(&one_hot).unwrap();
        prop_assert_eq!(avg.values(), w.values());
    }

    #[test]
    fn adaptive_mu_monotone_and_clamped(pk in 0.0f64..1.0, pg in 0.0f64..1.0, d in 0.0f64..0.5, mu0 in 1e-4f64..1.0) {
        let cfg = AdaptiveMuCfg::around(mu0);
        let mu = adaptive_mu(pk, pg, mu0, &cfg);
        prop_assert!(mu >= cfg.mu_min && mu <= cfg.mu_max);
        prop_assert!(adaptive_mu(pk + d, pg, mu0, &cfg) <= mu);
        prop_assert!(adaptive_mu(pk, pg + d, mu0, &cfg) >= mu);
        if pk >= cfg.epsilon {
            prop_assert!((adaptive_mu(pk, pk, mu0, &cfg) - mu0).abs() <= 1e-12 * mu0);
        }
    }

    #[test]
    fn flatten_load_round_trip(seed in any::<u64>(), scale in -3.0f32..3.0) {
        let mut net = small_recognizer(3).build::<f32>(seed).unwrap();
        let mut p = flatten_params(&net);
        p.values_mut().iter_mut().enumerate().for_each(|(i, v)| *v = scale * (i as f32).sin());
        load_params(&mut net, &p).unwrap();
        let back = flatten_params(&net);
        prop_assert_eq!(back.values(), p.values());
    }
}
