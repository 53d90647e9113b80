use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::rng::derived_rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionMode {
    Iid,
    NoniidLabelShard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionSpec {
    pub mode: PartitionMode,
    pub num_clients: usize,
    #[serde(default = "default_classes_per_client")]
    pub classes_per_client: usize,
    pub seed: u64,
}

fn default_classes_per_client() -> usize {
    2
}

impl PartitionSpec {
    /// Splits sample indices `0..labels.len()` into client shards.
    pub fn apply(&self, labels: &[usize], num_classes: usize) -> Result<Vec<Vec<usize>>> {
        match self.mode {
            PartitionMode::Iid => partition_iid(labels.len(), self.num_clients, self.seed),
            PartitionMode::NoniidLabelShard => {
                partition_noniid(labels, num_classes, self.num_clients, self.classes_per_client, self.seed)
            }
        }
    }
}

/// Random permutation cut into `n` contiguous pieces whose sizes differ by
/// at most one. Each shard is returned sorted.
pub fn partition_iid(num_samples: usize, n: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    ensure!(n >= 1, Param, "need at least one client");
    ensure!(n <= num_samples, Param, "{n} clients but only {num_samples} samples");
    let mut perm: Vec<usize> = (0..num_samples).collect();
    perm.shuffle(&mut derived_rng(seed, &[]));
    Ok(split_even(&perm, n)
        .map(|s| {
            let mut s = s.to_vec();
            s.sort_unstable();
            s
        })
        .collect())
}

fn split_even<T>(items: &[T], parts: usize) -> impl Iterator<Item = &[T]> {
    let (base, extra) = (items.len() / parts, items.len() % parts);
    let mut start = 0;
    (0..parts).map(move |p| {
        let len = base + usize::from(p < extra);
        let s = &items[start..start + len];
        start += len;
        s
    })
}

/// Label-sharded split: the samples of each class are shuffled and cut
/// into label-pure shards, `num_clients * classes_per_client` in total and
/// spread over classes as evenly as possible. Shards are dealt to clients
/// in random order, `classes_per_client` each, so no client holds more
/// than `classes_per_client` labels.
pub fn partition_noniid(
    labels: &[usize],
    num_classes: usize,
    num_clients: usize,
    classes_per_client: usize,
    seed: u64,
) -> Result<Vec<Vec<usize>>> {
    ensure!(num_clients >= 1 && classes_per_client >= 1, Param, "need at least one client and one class per client");
    let total_shards = num_clients * classes_per_client;
    ensure!(
        total_shards >= num_classes,
        Param,
        "{num_clients} clients x {classes_per_client} shards cannot cover {num_classes} classes"
    );
    let mut rng = derived_rng(seed, &[]);
    let mut by_class = vec![Vec::new(); num_classes];
    for (i, &l) in labels.iter().enumerate() {
        ensure!(l < num_classes, Param, "label {l} out of range for {num_classes} classes");
        by_class[l].push(i);
    }
    let mut shards = Vec::with_capacity(total_shards);
    for (c, members) in by_class.iter_mut().enumerate() {
        let count = total_shards / num_classes + usize::from(c < total_shards % num_classes);
        ensure!(members.len() >= count, Param, "class {c} has {} samples for {count} shards", members.len());
        members.shuffle(&mut rng);
        shards.extend(split_even(members, count).map(<[usize]>::to_vec));
    }
    shards.shuffle(&mut rng);
    Ok(shards
        .chunks(classes_per_client)
        .map(|group| {
            let mut s: Vec<usize> = group.concat();
            s.sort_unstable();
            s
        })
        .collect())
}
