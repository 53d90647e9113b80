//! Accuracy tables, confusion matrices and enhancement gain.

use std::collections::BTreeMap;

use crate::error::{ensure, Result};
use crate::models::Network;
use crate::nncore::Real;
use crate::signal::{snr_key, Dataset};
use crate::train::{make_batch, predict_all, EVAL_BATCH};

/// Reported gain when the enhanced output matches the target exactly.
pub const GAIN_CAP_DB: f64 = 99.0;

/// Rows are true classes, columns predictions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

pub fn confusion(pred: &[usize], truth: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    ensure!(pred.len() == truth.len(), Shape, "{} predictions for {} labels", pred.len(), truth.len());
    let mut counts = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &t) in pred.iter().zip(truth) {
        ensure!(p < num_classes && t < num_classes, Param, "label pair ({t}, {p}) out of range for {num_classes} classes");
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

impl ConfusionMatrix {
    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }
    pub fn accuracy(&self) -> f64 {
        self.trace() as f64 / self.total().max(1) as f64
    }
    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
    /// Per-class recall; `NaN` for classes without samples.
    pub fn recall(&self) -> Vec<f64> {
        self.row_sums().iter().enumerate().map(|(i, &n)| self.counts[i][i] as f64 / n as f64).collect()
    }
}

/// One accuracy cell. `None` stands for the ALL bucket.
#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub snr_db: Option<f32>,
    pub class: Option<usize>,
    pub correct: usize,
    pub count: usize,
}

impl AccuracyRow {
    pub fn accuracy(&self) -> f64 {
        self.correct as f64 / self.count.max(1) as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnhancementRow {
    pub snr_db: f32,
    pub mse_in: f64,
    pub mse_out: f64,
    pub gain_db: f64,
    pub count: usize,
}

/// `10 log10(mse_in / mse_out)`, exactly 0 for equal errors and capped at
/// [`GAIN_CAP_DB`] in magnitude.
pub fn gain_db(mse_in: f64, mse_out: f64) -> f64 {
    if mse_in == mse_out {
        0.0
    } else if mse_out == 0.0 {
        GAIN_CAP_DB
    } else if mse_in == 0.0 {
        -GAIN_CAP_DB
    } else {
        (10.0 * (mse_in / mse_out).log10()).clamp(-GAIN_CAP_DB, GAIN_CAP_DB)
    }
}

/// Accuracy, per-class and enhancement results over a dataset.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MetricsTable {
    /// One row per SNR (ascending) followed by the ALL row.
    pub by_snr: Vec<AccuracyRow>,
    /// One row per (SNR, class), SNR-major.
    pub by_snr_class: Vec<AccuracyRow>,
    pub enhancement: Vec<EnhancementRow>,
}

/// Groups sample indices by SNR in ascending order.
fn snr_buckets(ds: &Dataset) -> BTreeMap<i64, (f32, Vec<usize>)> {
    let mut buckets: BTreeMap<i64, (f32, Vec<usize>)> = BTreeMap::new();
    for (i, s) in ds.samples.iter().enumerate() {
        buckets.entry(snr_key(s.snr_db)).or_insert((s.snr_db, Vec::new())).1.push(i);
    }
    buckets
}

/// Per-SNR accuracy rows plus the ALL row, from precomputed predictions.
pub fn accuracy_table(pred: &[usize], ds: &Dataset) -> Result<Vec<AccuracyRow>> {
    ensure!(pred.len() == ds.len(), Shape, "{} predictions for {} samples", pred.len(), ds.len());
    let mut rows: Vec<AccuracyRow> = snr_buckets(ds)
        .into_values()
        .map(|(snr, idx)| AccuracyRow {
            snr_db: Some(snr),
            class: None,
            correct: idx.iter().filter(|&&i| pred[i] == ds.samples[i].label).count(),
            count: idx.len(),
        })
        .collect();
    rows.push(AccuracyRow {
        snr_db: None,
        class: None,
        correct: rows.iter().map(|r| r.correct).sum(),
        count: rows.iter().map(|r| r.count).sum(),
    });
    Ok(rows)
}

/// Accuracy per (SNR, class) from precomputed predictions.
pub fn class_table(pred: &[usize], ds: &Dataset) -> Result<Vec<AccuracyRow>> {
    ensure!(pred.len() == ds.len(), Shape, "{} predictions for {} samples", pred.len(), ds.len());
    let mut rows = Vec::new();
    for (snr, idx) in snr_buckets(ds).into_values() {
        for class in 0..ds.num_classes() {
            let members: Vec<usize> = idx.iter().copied().filter(|&i| ds.samples[i].label == class).collect();
            rows.push(AccuracyRow {
                snr_db: Some(snr),
                class: Some(class),
                correct: members.iter().filter(|&&i| pred[i] == class).count(),
                count: members.len(),
            });
        }
    }
    Ok(rows)
}

/// Predictions of the network for every sample, bucketed by SNR.
pub fn accuracy_by_snr<T: Real>(net: &mut Network<T>, ds: &Dataset) -> Result<Vec<AccuracyRow>> {
    accuracy_table(&predict_all(net, ds)?, ds)
}

/// Mean squared error per complex sample between two `(2, L)` frames.
fn frame_sq_error(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| (x as f64 - y as f64).powi(2)).sum::<f64>()
}

/// Per-SNR `mse_in = mean |x - s*|^2`, `mse_out = mean |s_hat - s*|^2`.
/// `s_hat[i]` holds the enhanced frame of sample `i` as `(2, L)` rows.
pub fn enhancement_table(s_hat: &[Vec<f32>], ds: &Dataset) -> Result<Vec<EnhancementRow>> {
    ensure!(s_hat.len() == ds.len(), Shape, "{} enhanced frames for {} samples", s_hat.len(), ds.len());
    let mut rows = Vec::new();
    for (snr, idx) in snr_buckets(ds).into_values() {
        let (mut e_in, mut e_out) = (0.0, 0.0);
        for &i in &idx {
            let s = &ds.samples[i];
            ensure!(s_hat[i].len() == 2 * ds.frame_len, Shape, "enhanced frame {i} has wrong length");
            e_in += frame_sq_error(s.x.as_slice(), s.s_star.as_slice());
            e_out += frame_sq_error(&s_hat[i], s.s_star.as_slice());
        }
        let n = (idx.len() * ds.frame_len) as f64;
        let (mse_in, mse_out) = (e_in / n, e_out / n);
        rows.push(EnhancementRow { snr_db: snr, mse_in, mse_out, gain_db: gain_db(mse_in, mse_out), count: idx.len() });
    }
    Ok(rows)
}

/// Enhanced frames for every sample; `None` when the network has no enhancer.
pub fn enhance_all<T: Real>(net: &mut Network<T>, ds: &Dataset) -> Result<Option<Vec<Vec<f32>>>> {
    if !net.has_enhancer() {
        return Ok(None);
    }
    crate::nncore::Module::set_training(net, false);
    let all: Vec<usize> = (0..ds.len()).collect();
    let mut out = Vec::with_capacity(ds.len());
    for idx in all.chunks(EVAL_BATCH) {
        let batch = make_batch::<T>(ds, idx)?;
        let s_hat = net.enhance(&batch.x).expect("enhancer present")?;
        ensure!(s_hat.all_finite(), Numeric, "non-finite enhancer output");
        for n in 0..idx.len() {
            let mut frame = Vec::with_capacity(2 * ds.frame_len);
            for c in 0..2 {
                frame.extend(s_hat.row(c, n).iter().map(|v| v.to_f64() as f32));
            }
            out.push(frame);
        }
    }
    Ok(Some(out))
}

pub fn enhancement_gain<T: Real>(net: &mut Network<T>, ds: &Dataset) -> Result<Option<Vec<EnhancementRow>>> {
    enhance_all(net, ds)?.map(|s_hat| enhancement_table(&s_hat, ds)).transpose()
}

/// Full metrics for a network on a dataset.
pub fn evaluate_network<T: Real>(net: &mut Network<T>, ds: &Dataset) -> Result<(MetricsTable, Vec<usize>)> {
    ensure!(!ds.is_empty(), Param, "cannot evaluate on an empty dataset");
    let pred = predict_all(net, ds)?;
    let table = MetricsTable {
        by_snr: accuracy_table(&pred, ds)?,
        by_snr_class: class_table(&pred, ds)?,
        enhancement: enhancement_gain(net, ds)?.unwrap_or_default(),
    };
    Ok((table, pred))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{IqFrame, LabeledSample};

    fn ds(labels: &[(usize, f32)]) -> Dataset {
        let f = IqFrame::from_rows(&[0.0, 1.0], &[1.0, 0.0]).unwrap();
        Dataset {
            scheme_names: vec!["A".into(), "B".into(), "C".into()],
            frame_len: 2,
            samples: labels
                .iter()
                .map(|&(label, snr_db)| LabeledSample { x: f.clone(), s_star: f.clone(), label, snr_db })
                .collect(),
        }
    }

    #[test]
    fn confusion_basics() {
        let c = confusion(&[5], &[2], 6).unwrap();
        assert_eq!(c.counts[2][5], 1);
        assert_eq!(c.total(), 1);
        let c = confusion(&[0, 1, 2], &[0, 1, 2], 3).unwrap();
        assert_eq!(c.trace(), 3);
        assert!(confusion(&[3], &[0], 3).is_err());
    }

    #[test]
    fn all_row_is_weighted_mean() {
        let d = ds(&[(0, 0.0), (1, 0.0), (2, 4.0), (0, 4.0), (1, 4.0)]);
        let rows = accuracy_table(&[0, 0, 2, 0, 0], &d).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].correct, rows[0].count), (1, 2));
        assert_eq!((rows[1].correct, rows[1].count), (2, 3));
        assert_eq!(rows[2].snr_db, None);
        assert_eq!(rows[2].accuracy(), 3.0 / 5.0);
    }

    #[test]
    fn gain_conventions() {
        assert_eq!(gain_db(0.5, 0.5), 0.0);
        assert_eq!(gain_db(0.5, 0.0), GAIN_CAP_DB);
        assert!((gain_db(1.0, 0.1) - 10.0).abs() < 1e-12);
        let d = ds(&[(0, 0.0)]);
        let rows = enhancement_table(&[vec![0.0, 1.0, 1.0, 0.0]], &d).unwrap();
        assert_eq!(rows[0].gain_db, 0.0);
    }
}
