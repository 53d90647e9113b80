use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImpairmentLevel {
    /// Identity channel; only noise is added downstream.
    AwgnOnly,
    /// Timing, frequency and phase offsets.
    Offsets,
    /// Offsets plus static multipath fading.
    FullFading,
}

/// Modulation and channel parameters. Offsets are in normalized units:
/// `f_err` in cycles/sample, `theta_err` in radians, `zeta_err` in samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelConfig {
    pub samples_per_symbol: usize,
    pub rolloff: f64,
    /// RRC span in symbols.
    pub rrc_span: usize,
    pub fading_tap_mags_db: Vec<f64>,
    /// Tap delays in samples.
    pub fading_tap_delays: Vec<f64>,
    pub f_err: f64,
    pub theta_err: f64,
    pub zeta_err: f64,
    pub cpfsk_index: f64,
    pub gfsk_bt: f64,
    /// Phase advance per sample for a unit shaped GFSK frequency pulse.
    pub gfsk_sensitivity: f64,
    /// AM-DSB modulation index applied to a peak-normalized message.
    pub am_index: f64,
    /// WBFM peak deviation in cycles/sample for a peak-normalized message.
    pub wbfm_deviation: f64,
    /// Message low-pass cutoff in cycles/sample.
    pub message_cutoff: f64,
    pub impairment_level: ImpairmentLevel,
    /// When set, dataset generation draws per-frame offsets uniformly from
    /// `[-f_err, f_err]`, `[-theta_err, theta_err]` and `[0, zeta_err]`
    /// instead of using the fixed values.
    pub randomize_offsets: bool,
    /// Unused numerically; kept to document the sampling rate of the source data.
    pub sample_rate_hz: f64,
}

impl Default for ChannelConfig {
    fn default() -> Self {
        Self {
            samples_per_symbol: 2,
            rolloff: 0.35,
            rrc_span: 8,
            fading_tap_mags_db: vec![-1.0, -1.0, -1.0, 0.0, 0.0, -3.0, -5.0, -7.0],
            fading_tap_delays: vec![0.0; 8],
            f_err: 0.0,
            theta_err: 0.0,
            zeta_err: 0.0,
            cpfsk_index: 0.5,
            gfsk_bt: 0.3,
            gfsk_sensitivity: 1.57,
            am_index: 0.5,
            wbfm_deviation: 0.25,
            message_cutoff: 0.15,
            impairment_level: ImpairmentLevel::AwgnOnly,
            randomize_offsets: true,
            sample_rate_hz: 30_000.0,
        }
    }
}

impl ChannelConfig {
    pub fn validate(&self) -> Result<()> {
        ensure!(self.samples_per_symbol >= 1, Param, "samples_per_symbol must be at least 1");
        ensure!(self.rolloff > 0.0 && self.rolloff < 1.0, Param, "roll-off {} outside (0, 1)", self.rolloff);
        ensure!(
            self.fading_tap_mags_db.len() == self.fading_tap_delays.len(),
            Param,
            "{} tap magnitudes vs {} delays",
            self.fading_tap_mags_db.len(),
            self.fading_tap_delays.len()
        );
        ensure!(self.fading_tap_delays.iter().all(|&d| d >= 0.0 && d.is_finite()), Param, "tap delays must be non-negative");
        ensure!(self.zeta_err >= 0.0, Param, "timing error must be non-negative");
        ensure!(
            [self.f_err, self.theta_err, self.cpfsk_index, self.gfsk_bt, self.am_index, self.wbfm_deviation]
                .iter()
                .all(|v| v.is_finite()),
            Param,
            "channel parameters must be finite"
        );
        Ok(())
    }

    /// Longest delay (in whole samples, rounded up) introduced by the channel.
    pub fn max_delay(&self) -> usize {
        let taps = match self.impairment_level {
            ImpairmentLevel::FullFading => self.fading_tap_delays.iter().copied().fold(0.0, f64::max),
            _ => 0.0,
        };
        let timing = if self.impairment_level == ImpairmentLevel::AwgnOnly { 0.0 } else { self.zeta_err };
        (taps + timing).ceil() as usize + 1
    }

    /// One per-frame realization of the offsets.
    pub fn draw_realization<R: Rng + ?Sized>(&self, rng: &mut R) -> ChannelConfig {
        let mut cfg = self.clone();
        if self.randomize_offsets && self.impairment_level != ImpairmentLevel::AwgnOnly {
            cfg.f_err = self.f_err * rng.random_range(-1.0..=1.0);
            cfg.theta_err = self.theta_err * rng.random_range(-1.0..=1.0);
            cfg.zeta_err = self.zeta_err * rng.random_range(0.0..=1.0);
        }
        cfg
    }
}

pub fn mean_power(x: &[Complex64]) -> f64 {
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len().max(1) as f64
}

/// Scales to unit average power; an all-zero signal is returned unchanged.
pub fn normalize_power(x: &mut [Complex64]) {
    let p = mean_power(x);
    if p > 0.0 {
        let s = 1.0 / p.sqrt();
        x.iter_mut().for_each(|v| *v *= s);
    }
}

/// Delays by a non-negative, possibly fractional, number of samples using
/// linear interpolation; samples before the start are zero.
pub fn fractional_delay(x: &[Complex64], delay: f64) -> Vec<Complex64> {
    let whole = delay.floor() as usize;
    let frac = delay - delay.floor();
    let at = |i: isize| if i >= 0 && (i as usize) < x.len() { x[i as usize] } else { Complex64::new(0.0, 0.0) };
    (0..x.len() as isize)
        .map(|n| {
            let i = n - whole as isize;
            if frac == 0.0 {
                at(i)
            } else {
                at(i) * (1.0 - frac) + at(i - 1) * frac
            }
        })
        .collect()
}

/// Applies the channel and hardware impairments selected by
/// `cfg.impairment_level` (no noise): timing error, multipath with complex
/// Gaussian tap weights, then `exp(j(2 pi f_err n + theta_err))`, and
/// renormalizes to unit average power. `AwgnOnly` is the identity.
pub fn apply_channel<R: Rng + ?Sized>(clean: &[Complex64], cfg: &ChannelConfig, rng: &mut R) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    if cfg.impairment_level == ImpairmentLevel::AwgnOnly {
        return Ok(clean.to_vec());
    }
    let mut y = if cfg.zeta_err > 0.0 { fractional_delay(clean, cfg.zeta_err) } else { clean.to_vec() };
    if cfg.impairment_level == ImpairmentLevel::FullFading {
        let mut faded = vec![Complex64::new(0.0, 0.0); y.len()];
        for (&mag_db, &delay) in cfg.fading_tap_mags_db.iter().zip(&cfg.fading_tap_delays) {
            let amp = 10f64.powf(mag_db / 20.0) / 2f64.sqrt();
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            let h = Complex64::new(re, im) * amp;
            let path = if delay > 0.0 { fractional_delay(&y, delay) } else { y.clone() };
            for (f, p) in faded.iter_mut().zip(path) {
                *f += h * p;
            }
        }
        y = faded;
    }
    if cfg.f_err != 0.0 || cfg.theta_err != 0.0 {
        for (n, v) in y.iter_mut().enumerate() {
            *v *= Complex64::from_polar(1.0, 2.0 * PI * cfg.f_err * n as f64 + cfg.theta_err);
        }
    }
    normalize_power(&mut y);
    Ok(y)
}

/// Noise variance per complex sample for a unit-power signal.
pub fn noise_variance(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Adds circularly-symmetric complex Gaussian noise of variance
/// `10^(-snr_db / 10)` per sample. `snr_db = +inf` adds nothing.
pub fn add_awgn<R: Rng + ?Sized>(s_star: &[Complex64], snr_db: f64, rng: &mut R) -> Vec<Complex64> {
    if snr_db == f64::INFINITY {
        return s_star.to_vec();
    }
    let sd = (noise_variance(snr_db) / 2.0).sqrt();
    s_star
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            s + Complex64::new(re * sd, im * sd)
        })
        .collect()
}
