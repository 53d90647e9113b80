//! FIR prototypes used by the modulators.

use std::f64::consts::PI;

use crate::error::{ensure, Result};

/// Root-raised-cosine taps spanning `span_symbols` symbols at `sps`
/// samples per symbol (`span_symbols * sps + 1` taps), scaled to unit energy.
pub fn rrc_taps(rolloff: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    ensure!(rolloff > 0.0 && rolloff < 1.0, Param, "roll-off {rolloff} outside (0, 1)");
    ensure!(span_symbols >= 4 && span_symbols.is_multiple_of(2), Param, "span {span_symbols} must be even and at least 4");
    ensure!(sps >= 1, Param, "samples per symbol must be positive");
    let n = span_symbols * sps + 1;
    let mid = (n / 2) as isize;
    let b = rolloff;
    let mut taps: Vec<f64> = (0..n as isize)
        .map(|i| {
            let t = (i - mid) as f64 / sps as f64;
            if t == 0.0 {
                1.0 - b + 4.0 * b / PI
            } else if ((4.0 * b * t).abs() - 1.0).abs() < 1e-12 {
                b / 2f64.sqrt() * ((1.0 + 2.0 / PI) * (PI / (4.0 * b)).sin() + (1.0 - 2.0 / PI) * (PI / (4.0 * b)).cos())
            } else {
                ((PI * t * (1.0 - b)).sin() + 4.0 * b * t * (PI * t * (1.0 + b)).cos())
                    / (PI * t * (1.0 - (4.0 * b * t).powi(2)))
            }
        })
        .collect();
    // enforce exact symmetry after evaluation
    for k in 0..n / 2 {
        let v = 0.5 * (taps[k] + taps[n - 1 - k]);
        taps[k] = v;
        taps[n - 1 - k] = v;
    }
    let energy: f64 = taps.iter().map(|v| v * v).sum();
    let s = energy.sqrt();
    taps.iter_mut().for_each(|v| *v /= s);
    Ok(taps)
}

/// Gaussian frequency-shaping taps for GFSK with unit DC gain.
pub fn gaussian_taps(bt: f64, span_symbols: usize, sps: usize) -> Result<Vec<f64>> {
    ensure!(bt > 0.0, Param, "GFSK bandwidth-time product must be positive");
    ensure!(sps >= 1 && span_symbols >= 1, Param, "invalid Gaussian filter span");
    let n = span_symbols * sps + 1;
    let mid = (n / 2) as f64;
    let a = 2.0 * PI * PI * bt * bt / 2f64.ln();
    let mut taps: Vec<f64> = (0..n).map(|i| ((i as f64 - mid) / sps as f64).powi(2)).map(|t2| (-a * t2).exp()).collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= sum);
    Ok(taps)
}

/// Hamming-windowed sinc low-pass with cutoff in cycles/sample, unit DC gain.
pub fn lowpass_taps(cutoff: f64, num_taps: usize) -> Result<Vec<f64>> {
    ensure!(cutoff > 0.0 && cutoff < 0.5, Param, "cutoff {cutoff} outside (0, 0.5)");
    ensure!(num_taps % 2 == 1, Param, "low-pass length must be odd");
    let mid = (num_taps / 2) as f64;
    let mut taps: Vec<f64> = (0..num_taps)
        .map(|i| {
            let t = i as f64 - mid;
            let sinc = if t == 0.0 { 2.0 * cutoff } else { (2.0 * PI * cutoff * t).sin() / (PI * t) };
            let w = 0.54 - 0.46 * (2.0 * PI * i as f64 / (num_taps - 1) as f64).cos();
            sinc * w
        })
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter_mut().for_each(|v| *v /= sum);
    Ok(taps)
}

/// Convolution aligned to the filter centre: output has the input length
/// and `out[n] = sum_k taps[k] * x[n + c - k]` with `c = (taps.len() - 1) / 2`.
pub fn filter_same<S>(x: &[S], taps: &[f64]) -> Vec<S>
where
    S: Copy + Default + std::ops::Add<Output = S> + std::ops::Mul<f64, Output = S>,
{
    let c = (taps.len() - 1) / 2;
    (0..x.len())
        .map(|n| {
            let mut acc = S::default();
            for (k, &h) in taps.iter().enumerate() {
                let i = n as isize + c as isize - k as isize;
                if i >= 0 && (i as usize) < x.len() {
                    acc = acc + x[i as usize] * h;
                }
            }
            acc
        })
        .collect()
}
