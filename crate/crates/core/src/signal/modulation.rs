use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::channel::{normalize_power, ChannelConfig};
use super::filters::{filter_same, gaussian_taps, lowpass_taps, rrc_taps};
use super::scheme::ModScheme;
use crate::error::{ensure, Error, Result};

const GAUSSIAN_SPAN: usize = 4;
const MESSAGE_TAPS: usize = 33;

fn inverse_gray(g: usize) -> usize {
    let mut b = g;
    let mut shift = g >> 1;
    while shift != 0 {
        b ^= shift;
        shift >>= 1;
    }
    b
}

/// Gray-coded PAM level for label `s` among `m` levels: `2p - (m - 1)`.
fn gray_pam(s: usize, m: usize) -> f64 {
    (2 * inverse_gray(s)) as f64 - (m - 1) as f64
}

/// Constellation of a linearly modulated scheme, indexed by symbol label.
/// Continuous-phase and analog schemes have none.
pub fn constellation(scheme: ModScheme) -> Option<Vec<Complex64>> {
    let c = |re: f64, im: f64| Complex64::new(re, im);
    let points = match scheme {
        ModScheme::Bpsk => vec![c(1.0, 0.0), c(-1.0, 0.0)],
        ModScheme::Qpsk => {
            let a = 1.0 / 2f64.sqrt();
            (0..4).map(|s| c(if s & 2 == 0 { a } else { -a }, if s & 1 == 0 { a } else { -a })).collect()
        }
        ModScheme::Psk8 => (0..8).map(|s| Complex64::from_polar(1.0, 2.0 * PI * inverse_gray(s) as f64 / 8.0)).collect(),
        ModScheme::Pam4 => (0..4).map(|s| c(gray_pam(s, 4) / 5f64.sqrt(), 0.0)).collect(),
        ModScheme::Qam16 => {
            let n = 10f64.sqrt();
            (0..16).map(|s| c(gray_pam(s >> 2, 4) / n, gray_pam(s & 3, 4) / n)).collect()
        }
        ModScheme::Qam64 => {
            let n = 42f64.sqrt();
            (0..64).map(|s| c(gray_pam(s >> 3, 8) / n, gray_pam(s & 7, 8) / n)).collect()
        }
        _ => return None,
    };
    Some(points)
}

/// Maps symbol labels to constellation points (before pulse shaping).
pub fn map_symbols(symbols: &[usize], scheme: ModScheme) -> Result<Vec<Complex64>> {
    let points = constellation(scheme)
        .ok_or_else(|| Error::Scheme(format!("{scheme} has no linear constellation")))?;
    symbols
        .iter()
        .map(|&s| points.get(s).copied().ok_or_else(|| Error::Param(format!("symbol {s} out of range for {scheme}"))))
        .collect()
}

/// Integrates per-sample phase increments: `phase[n] = sum_{i <= n} inc[i]`.
pub fn integrate_phase(increments: &[f64]) -> Vec<Complex64> {
    let mut phase = 0.0;
    increments
        .iter()
        .map(|&d| {
            phase += d;
            Complex64::from_polar(1.0, phase)
        })
        .collect()
}

/// Digital modulation at `cfg.samples_per_symbol` samples per symbol.
/// Linear schemes are upsampled and RRC-shaped; CPFSK and GFSK integrate
/// a frequency pulse. Output has unit average power.
pub fn modulate_digital(symbols: &[usize], scheme: ModScheme, cfg: &ChannelConfig) -> Result<Vec<Complex64>> {
    ensure!(!scheme.is_analog(), Scheme, "{scheme} is analog");
    cfg.validate()?;
    let size = scheme.alphabet_size().expect("digital scheme");
    if let Some(&bad) = symbols.iter().find(|&&s| s >= size) {
        return Err(Error::Param(format!("symbol {bad} out of range for {scheme}")));
    }
    let sps = cfg.samples_per_symbol;
    let mut out = match scheme {
        ModScheme::Cpfsk => {
            let step = PI * cfg.cpfsk_index / sps as f64;
            let inc: Vec<f64> = symbols.iter().flat_map(|&s| std::iter::repeat_n(step * nrz(s), sps)).collect();
            integrate_phase(&inc)
        }
        ModScheme::Gfsk => {
            let nrz: Vec<f64> = symbols.iter().flat_map(|&s| std::iter::repeat_n(nrz(s), sps)).collect();
            let shaped = filter_same(&nrz, &gaussian_taps(cfg.gfsk_bt, GAUSSIAN_SPAN, sps)?);
            let inc: Vec<f64> = shaped.iter().map(|v| v * cfg.gfsk_sensitivity).collect();
            integrate_phase(&inc)
        }
        _ => {
            let points = map_symbols(symbols, scheme)?;
            let mut up = vec![Complex64::new(0.0, 0.0); points.len() * sps];
            for (i, p) in points.into_iter().enumerate() {
                up[i * sps] = p;
            }
            filter_same(&up, &rrc_taps(cfg.rolloff, cfg.rrc_span, sps)?)
        }
    };
    normalize_power(&mut out);
    Ok(out)
}

fn nrz(symbol: usize) -> f64 {
    if symbol == 0 {
        -1.0
    } else {
        1.0
    }
}

/// Analog modulation of a real message. AM-DSB is the real envelope
/// `1 + am_index * m`; WBFM integrates `2 pi * wbfm_deviation * m`.
/// Output has unit average power.
pub fn modulate_analog(message: &[f64], scheme: ModScheme, cfg: &ChannelConfig) -> Result<Vec<Complex64>> {
    ensure!(scheme.is_analog(), Scheme, "{scheme} is digital");
    ensure!(message.iter().all(|v| v.is_finite()), Param, "message must be finite");
    let mut out = match scheme {
        ModScheme::AmDsb => message.iter().map(|&m| Complex64::new(1.0 + cfg.am_index * m, 0.0)).collect(),
        ModScheme::Wbfm => {
            let k = 2.0 * PI * cfg.wbfm_deviation;
            integrate_phase(&message.iter().map(|m| k * m).collect::<Vec<_>>())
        }
        _ => unreachable!(),
    };
    normalize_power(&mut out);
    Ok(out)
}

/// Band-limited Gaussian message with peak magnitude 1.
pub fn random_message<R: Rng + ?Sized>(len: usize, cutoff: f64, rng: &mut R) -> Result<Vec<f64>> {
    let white: Vec<f64> = (0..len).map(|_| StandardNormal.sample(rng)).collect();
    let mut m = filter_same(&white, &lowpass_taps(cutoff, MESSAGE_TAPS)?);
    let peak = m.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak > 0.0 {
        m.iter_mut().for_each(|v| *v /= peak);
    }
    Ok(m)
}

/// Modulates `num_samples` samples of random data for `scheme`.
pub fn random_waveform<R: Rng + ?Sized>(
    scheme: ModScheme,
    num_samples: usize,
    cfg: &ChannelConfig,
    rng: &mut R,
) -> Result<Vec<Complex64>> {
    if scheme.is_analog() {
        let message = random_message(num_samples, cfg.message_cutoff, rng)?;
        modulate_analog(&message, scheme, cfg)
    } else {
        let size = scheme.alphabet_size().expect("digital scheme");
        let nsym = num_samples.div_ceil(cfg.samples_per_symbol);
        let symbols: Vec<usize> = (0..nsym).map(|_| rng.random_range(0..size)).collect();
        let mut w = modulate_digital(&symbols, scheme, cfg)?;
        w.truncate(num_samples);
        Ok(w)
    }
}
