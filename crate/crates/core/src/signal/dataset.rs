use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::channel::{add_awgn, apply_channel, normalize_power, ChannelConfig};
use super::modulation::random_waveform;
use super::scheme::ModScheme;
use crate::error::{ensure, Result};
use crate::rng::derived_rng;

/// One frame stored as two rows of `L` samples: in-phase then quadrature.
#[derive(Debug, Clone, PartialEq)]
pub struct IqFrame {
    data: Vec<f32>,
}

impl IqFrame {
    pub fn from_rows(i_row: &[f32], q_row: &[f32]) -> Result<Self> {
        ensure!(i_row.len() == q_row.len(), Shape, "I row has {} samples, Q row {}", i_row.len(), q_row.len());
        ensure!(i_row.iter().chain(q_row).all(|v| v.is_finite()), Numeric, "frame holds non-finite samples");
        let mut data = Vec::with_capacity(2 * i_row.len());
        data.extend_from_slice(i_row);
        data.extend_from_slice(q_row);
        Ok(Self { data })
    }

    pub fn from_complex(x: &[Complex64]) -> Self {
        let mut data = Vec::with_capacity(2 * x.len());
        data.extend(x.iter().map(|v| v.re as f32));
        data.extend(x.iter().map(|v| v.im as f32));
        Self { data }
    }

    pub(crate) fn from_interleaved_rows(data: Vec<f32>) -> Self {
        Self { data }
    }

    pub fn len(&self) -> usize {
        self.data.len() / 2
    }
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
    pub fn i_row(&self) -> &[f32] {
        &self.data[..self.len()]
    }
    pub fn q_row(&self) -> &[f32] {
        &self.data[self.len()..]
    }
    /// Row-major `(2, L)` array.
    pub fn as_slice(&self) -> &[f32] {
        &self.data
    }

    pub fn to_complex(&self) -> Vec<Complex64> {
        self.i_row().iter().zip(self.q_row()).map(|(&i, &q)| Complex64::new(i as f64, q as f64)).collect()
    }
}

/// Splits a complex stream into non-overlapping frames of length `len`,
/// dropping any trailing partial window.
pub fn to_iq_frames(x: &[Complex64], len: usize) -> Result<Vec<IqFrame>> {
    ensure!(len >= 1, Param, "frame length must be positive");
    ensure!(x.len() >= len, Param, "stream of {} samples is shorter than one frame of {len}", x.len());
    Ok(x.chunks_exact(len).map(IqFrame::from_complex).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSample {
    /// Observed noisy frame.
    pub x: IqFrame,
    /// Channel-impaired frame before noise.
    pub s_star: IqFrame,
    pub label: usize,
    pub snr_db: f32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetSpec {
    pub schemes: Vec<ModScheme>,
    #[serde(default = "default_snr_grid")]
    pub snr_grid_db: Vec<f64>,
    pub frames_per_scheme_per_snr: usize,
    #[serde(default = "default_frame_len")]
    pub frame_len: usize,
    #[serde(default)]
    pub channel: ChannelConfig,
    pub seed: u64,
}

pub fn default_snr_grid() -> Vec<f64> {
    (-3..=7).map(|v| 2.0 * v as f64).collect()
}

fn default_frame_len() -> usize {
    128
}

impl DatasetSpec {
    pub fn validate(&self) -> Result<()> {
        ensure!(!self.schemes.is_empty(), Param, "at least one scheme required");
        ensure!(!self.snr_grid_db.is_empty(), Param, "SNR grid must not be empty");
        ensure!(self.snr_grid_db.iter().all(|s| !s.is_nan()), Param, "SNR grid holds NaN");
        ensure!(self.frames_per_scheme_per_snr >= 1, Param, "frames_per_scheme_per_snr must be at least 1");
        ensure!(self.frame_len >= 1, Param, "frame length must be positive");
        ensure!(self.schemes.len() <= u16::MAX as usize, Param, "too many schemes");
        self.channel.validate()
    }
}

/// A labelled collection of frames with its class names.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub scheme_names: Vec<String>,
    pub frame_len: usize,
    pub samples: Vec<LabeledSample>,
}

impl Dataset {
    pub fn num_classes(&self) -> usize {
        self.scheme_names.len()
    }
    pub fn len(&self) -> usize {
        self.samples.len()
    }
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            scheme_names: self.scheme_names.clone(),
            frame_len: self.frame_len,
            samples: indices.iter().map(|&i| self.samples[i].clone()).collect(),
        }
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.label).collect()
    }

    /// Sample counts per `(label, snr)` cell, SNR keyed by its bit pattern.
    pub fn cell_counts(&self) -> BTreeMap<(usize, i64), usize> {
        let mut counts = BTreeMap::new();
        for s in &self.samples {
            *counts.entry((s.label, snr_key(s.snr_db))).or_insert(0) += 1;
        }
        counts
    }

    /// Splits every `(label, snr)` cell: its first `train_per_cell` samples
    /// go to the first dataset, the rest to the second.
    pub fn split_per_cell(&self, train_per_cell: usize) -> (Dataset, Dataset) {
        let mut seen: BTreeMap<(usize, i64), usize> = BTreeMap::new();
        let (mut train, mut test) = (Vec::new(), Vec::new());
        for (i, s) in self.samples.iter().enumerate() {
            let c = seen.entry((s.label, snr_key(s.snr_db))).or_insert(0);
            if *c < train_per_cell {
                train.push(i);
            } else {
                test.push(i);
            }
            *c += 1;
        }
        (self.subset(&train), self.subset(&test))
    }
}

/// Grouping key for SNR values (milli-dB).
pub fn snr_key(snr_db: f32) -> i64 {
    if snr_db.is_infinite() {
        if snr_db > 0.0 {
            i64::MAX
        } else {
            i64::MIN
        }
    } else {
        (snr_db as f64 * 1000.0).round() as i64
    }
}

/// Generates one `(scheme, snr)` cell.
fn generate_cell(spec: &DatasetSpec, scheme_idx: usize, snr_idx: usize) -> Result<Vec<LabeledSample>> {
    let scheme = spec.schemes[scheme_idx];
    let snr = spec.snr_grid_db[snr_idx];
    let mut rng = derived_rng(spec.seed, &[scheme_idx as u64, snr_idx as u64]);
    let ch = &spec.channel;
    let len = spec.frame_len;
    let guard = ch.rrc_span * ch.samples_per_symbol + ch.max_delay() + 2;
    (0..spec.frames_per_scheme_per_snr)
        .map(|_| {
            let realization = ch.draw_realization(&mut rng);
            let clean = random_waveform(scheme, len + 2 * guard, &realization, &mut rng)?;
            let impaired = apply_channel(&clean, &realization, &mut rng)?;
            let mut s_star = impaired[guard..guard + len].to_vec();
            normalize_power(&mut s_star);
            let x = add_awgn(&s_star, snr, &mut rng);
            Ok(LabeledSample {
                x: IqFrame::from_complex(&x),
                s_star: IqFrame::from_complex(&s_star),
                label: scheme_idx,
                snr_db: snr as f32,
            })
        })
        .collect()
}

/// Generates `frames_per_scheme_per_snr` frames for every `(scheme, snr)`
/// pair, scheme-major. Each cell draws from its own seed derived from
/// `spec.seed`, so the result is a pure function of `spec`.
pub fn generate_dataset(spec: &DatasetSpec) -> Result<Dataset> {
    spec.validate()?;
    let cells: Vec<(usize, usize)> =
        (0..spec.schemes.len()).flat_map(|m| (0..spec.snr_grid_db.len()).map(move |s| (m, s))).collect();
    let parts = cells.par_iter().map(|&(m, s)| generate_cell(spec, m, s)).collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        scheme_names: spec.schemes.iter().map(|s| s.name().to_string()).collect(),
        frame_len: spec.frame_len,
        samples: parts.into_iter().flatten().collect(),
    })
}
