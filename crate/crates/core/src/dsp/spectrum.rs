//! Hann-windowed periodograms and relative band power.

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

use super::band::BandDefinition;
use super::epoch::EpochSet;

/// One-sided mean periodogram for a single channel.
#[derive(Debug, Clone)]
pub struct Periodogram {
    /// Power at bin k; bin k sits at `k * fs / n` Hz.
    pub power: Vec<f64>,
    pub bin_hz: f64,
}

impl Periodogram {
    /// Sum of bin powers whose center frequency lies in `[low, high)`,
    /// skipping bins inside any exclusion interval (also `[low, high)`).
    pub fn band_power(&self, low: f64, high: f64, exclusions: &[(f64, f64)]) -> f64 {
        let mut total = 0.0;
        for (k, &p) in self.power.iter().enumerate() {
            let f = k as f64 * self.bin_hz;
            if f < low || f >= high {
                continue;
            }
            if exclusions.iter().any(|&(lo, hi)| f >= lo && f < hi) {
                continue;
            }
            total += p;
        }
        total
    }
}

fn hann_window(n: usize) -> Vec<f64> {
    (0..n)
        .map(|i| {
            let x = std::f64::consts::PI * i as f64 / n as f64;
            x.sin() * x.sin()
        })
        .collect()
}

/// Hann-windowed periodogram of each epoch, averaged across epochs
/// (Welch's method with non-overlapping segments). Each epoch's mean is
/// removed before windowing so DC leakage cannot contaminate the analysis
/// range. Summation order is fixed so channel-parallel callers stay
/// bit-reproducible.
pub fn mean_periodogram(epochs: &EpochSet, channel: usize) -> Periodogram {
    let n = epochs.epoch_len;
    let window = hann_window(n);
    let window_norm: f64 = window.iter().map(|w| w * w).sum();
    let mut planner = FftPlanner::new();
    let fft = planner.plan_fft_forward(n);

    let n_bins = n / 2 + 1;
    let mut power = vec![0.0f64; n_bins];
    let mut buf: Vec<Complex<f64>> = Vec::with_capacity(n);
    for e in 0..epochs.n_epochs {
        let x = epochs.epoch(channel, e);
        let mean = x.iter().sum::<f64>() / n as f64;
        buf.clear();
        buf.extend(
            x.iter()
                .zip(&window)
                .map(|(&x, &w)| Complex::new((x - mean) * w, 0.0)),
        );
        fft.process(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            let mag_sq = buf[k].norm_sqr();
            // One-sided spectrum: double every bin except DC and Nyquist.
            let one_sided = if k == 0 || (n % 2 == 0 && k == n / 2) {
                mag_sq
            } else {
                2.0 * mag_sq
            };
            *p += one_sided / window_norm;
        }
    }
    let scale = 1.0 / epochs.n_epochs as f64;
    for p in power.iter_mut() {
        *p *= scale;
    }
    Periodogram {
        power,
        bin_hz: epochs.fs_hz / n as f64,
    }
}

/// Relative band power per channel: band power divided by the total power
/// over `analysis_range`, both computed on the mean periodogram with the
/// same exclusion intervals. Output layout is channel-major:
/// `result[channel][band]`.
pub fn band_relative_power(
    epochs: &EpochSet,
    bands: &[BandDefinition],
    analysis_range: (f64, f64),
    exclusions: &[(f64, f64)],
) -> Result<Vec<Vec<f64>>> {
    let (range_lo, range_hi) = analysis_range;
    let nyquist = epochs.fs_hz / 2.0;
    if !(range_lo > 0.0 && range_lo < range_hi && range_hi <= nyquist) {
        return Err(Error::Validation(format!(
            "analysis range [{range_lo}, {range_hi}) outside (0, {nyquist}]"
        )));
    }
    for b in bands {
        if b.low_hz < range_lo || b.high_hz > range_hi {
            return Err(Error::Validation(format!(
                "band {} [{}, {}) not inside the analysis range",
                b.name, b.low_hz, b.high_hz
            )));
        }
    }

    let mut out = Vec::with_capacity(epochs.n_channels);
    for c in 0..epochs.n_channels {
        let pg = mean_periodogram(epochs, c);
        let total = pg.band_power(range_lo, range_hi, exclusions);
        if total <= 0.0 {
            return Err(Error::DegenerateSpectrum);
        }
        out.push(
            bands
                .iter()
                .map(|b| pg.band_power(b.low_hz, b.high_hz, exclusions) / total)
                .collect(),
        );
    }
    Ok(out)
}
