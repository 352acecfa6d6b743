//! Butterworth IIR design (analog prototype + bilinear transform) and
//! biquad-cascade filtering.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FilterKind {
    Lowpass,
    Highpass,
    Bandstop,
}

/// One second-order section, denominator normalized to `a0 = 1`.
/// First-order sections are stored with `b2 = a2 = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Biquad {
    pub b0: f64,
    pub b1: f64,
    pub b2: f64,
    pub a1: f64,
    pub a2: f64,
    /// 1 for a first-order section, 2 otherwise.
    pub section_order: usize,
}

impl Biquad {
    /// Largest pole magnitude of this section.
    pub fn max_pole_magnitude(&self) -> f64 {
        if self.section_order == 1 {
            return self.a1.abs();
        }
        // Roots of z^2 + a1 z + a2.
        let disc = self.a1 * self.a1 - 4.0 * self.a2;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            let r1 = (-self.a1 + sq) / 2.0;
            let r2 = (-self.a1 - sq) / 2.0;
            r1.abs().max(r2.abs())
        } else {
            // Conjugate pair: |p|^2 = a2.
            self.a2.sqrt()
        }
    }

    fn response(&self, z_inv: Complex64) -> Complex64 {
        let num = Complex64::new(self.b0, 0.0) + z_inv * (self.b1 + z_inv * self.b2);
        let den = Complex64::new(1.0, 0.0) + z_inv * (self.a1 + z_inv * self.a2);
        num / den
    }
}

/// Cascade of biquad sections realizing one designed filter.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterCascade {
    pub sections: Vec<Biquad>,
    pub kind: FilterKind,
    pub order: usize,
    pub cutoffs_hz: Vec<f64>,
    pub fs_hz: f64,
}

impl FilterCascade {
    /// Complex frequency response at `f_hz`.
    pub fn response_at(&self, f_hz: f64) -> Complex64 {
        let omega = 2.0 * std::f64::consts::PI * f_hz / self.fs_hz;
        let z_inv = Complex64::new(omega.cos(), -omega.sin());
        self.sections
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, s| acc * s.response(z_inv))
    }

    pub fn magnitude_at(&self, f_hz: f64) -> f64 {
        self.response_at(f_hz).norm()
    }

    pub fn max_pole_magnitude(&self) -> f64 {
        self.sections
            .iter()
            .map(Biquad::max_pole_magnitude)
            .fold(0.0, f64::max)
    }

    /// Single forward pass, zero initial conditions. Output length equals
    /// input length.
    pub fn apply(&self, signal: &[f64]) -> Result<Vec<f64>> {
        if signal.is_empty() {
            return Err(Error::Signal("empty signal".into()));
        }
        if signal.len() <= 3 * self.order {
            return Err(Error::Signal(format!(
                "signal length {} too short for order {} (need > {})",
                signal.len(),
                self.order,
                3 * self.order
            )));
        }
        let mut out = signal.to_vec();
        for s in &self.sections {
            let (mut s1, mut s2) = (0.0f64, 0.0f64);
            for x in out.iter_mut() {
                // Direct form II transposed.
                let y = s.b0 * *x + s1;
                s1 = s.b1 * *x - s.a1 * y + s2;
                s2 = s.b2 * *x - s.a2 * y;
                *x = y;
            }
        }
        Ok(out)
    }

    /// Forward-backward pass (zero phase, magnitude response squared).
    /// Off the default path; the standard pipeline filters causally.
    pub fn apply_zero_phase(&self, signal: &[f64]) -> Result<Vec<f64>> {
        let mut forward = self.apply(signal)?;
        forward.reverse();
        let mut backward = self.apply(&forward)?;
        backward.reverse();
        Ok(backward)
    }
}

/// Designs a discrete-time Butterworth filter as a biquad cascade.
///
/// The analog prototype is scaled to the prewarped cutoff(s) and mapped with
/// the bilinear transform, so the -3 dB point lands exactly on the requested
/// digital cutoff. `order` is the overall order of the digital filter; for
/// bandstop it must be even (the stopband transform doubles the prototype).
pub fn design_butterworth(
    kind: FilterKind,
    order: usize,
    cutoffs_hz: &[f64],
    fs_hz: f64,
) -> Result<FilterCascade> {
    if order < 1 {
        return Err(Error::FilterDesign("order must be >= 1".into()));
    }
    if !(fs_hz.is_finite() && fs_hz > 0.0) {
        return Err(Error::FilterDesign(format!("invalid sample rate {fs_hz}")));
    }
    let nyquist = fs_hz / 2.0;
    for &f in cutoffs_hz {
        if !(f > 0.0 && f < nyquist) {
            return Err(Error::FilterDesign(format!(
                "cutoff {f} Hz outside (0, {nyquist}) for fs = {fs_hz}"
            )));
        }
    }
    let prewarp = |f: f64| 2.0 * fs_hz * (std::f64::consts::PI * f / fs_hz).tan();
    let big_k = 2.0 * fs_hz;

    let sections = match kind {
        FilterKind::Lowpass | FilterKind::Highpass => {
            if cutoffs_hz.len() != 1 {
                return Err(Error::FilterDesign(
                    "lowpass/highpass take exactly one cutoff".into(),
                ));
            }
            let wc = prewarp(cutoffs_hz[0]);
            let mut sections = Vec::new();
            for (cos_theta, _) in prototype_pairs(order) {
                // Conjugate pole pair: s^2 + c1 s + c2. The prototype poles
                // sit on the unit circle, so the highpass transform wc/p
                // yields the same denominator as the lowpass scaling wc*p.
                let (c1, c2) = (-2.0 * wc * cos_theta, wc * wc);
                let (b2, b1, b0) = match kind {
                    FilterKind::Lowpass => (0.0, 0.0, c2),
                    _ => (1.0, 0.0, 0.0),
                };
                sections.push(bilinear_sos(b2, b1, b0, c1, c2, big_k));
            }
            if order % 2 == 1 {
                // Real pole at -wc.
                let section = match kind {
                    FilterKind::Lowpass => bilinear_first(0.0, wc, wc, big_k),
                    _ => bilinear_first(1.0, 0.0, wc, big_k),
                };
                sections.push(section);
            }
            sections
        }
        FilterKind::Bandstop => {
            if cutoffs_hz.len() != 2 || cutoffs_hz[0] >= cutoffs_hz[1] {
                return Err(Error::FilterDesign(
                    "bandstop takes two cutoffs with low < high".into(),
                ));
            }
            if order % 2 == 1 {
                return Err(Error::FilterDesign(
                    "bandstop order must be even (stopband transform doubles the prototype)".into(),
                ));
            }
            let proto_order = order / 2;
            let wl = prewarp(cutoffs_hz[0]);
            let wh = prewarp(cutoffs_hz[1]);
            let w0_sq = wl * wh;
            let bw = wh - wl;
            let mut sections = Vec::new();
            for (cos_theta, sin_theta) in prototype_pairs(proto_order) {
                let p = Complex64::new(cos_theta, sin_theta);
                // Stopband transform: each prototype pole yields the roots of
                // sigma^2 - (BW/p) sigma + w0^2; their conjugates come from
                // the conjugate prototype pole, so each root pairs with its
                // own conjugate into one section.
                let lin = Complex64::new(bw, 0.0) / p;
                let disc = (lin * lin - Complex64::new(4.0 * w0_sq, 0.0)).sqrt();
                for sigma in [(lin + disc) / 2.0, (lin - disc) / 2.0] {
                    let c1 = -2.0 * sigma.re;
                    let c2 = sigma.norm_sqr();
                    sections.push(bilinear_sos(1.0, 0.0, w0_sq, c1, c2, big_k));
                }
            }
            if proto_order % 2 == 1 {
                // Real prototype pole at -1: sigma^2 + BW sigma + w0^2.
                sections.push(bilinear_sos(1.0, 0.0, w0_sq, bw, w0_sq, big_k));
            }
            sections
        }
    };

    let mut cascade = FilterCascade {
        sections,
        kind,
        order,
        cutoffs_hz: cutoffs_hz.to_vec(),
        fs_hz,
    };
    // Pin the reference-frequency gain of every section to exactly one:
    // z = 1 for lowpass/bandstop (DC), z = -1 for highpass (Nyquist).
    let reference_z = match kind {
        FilterKind::Highpass => -1.0,
        _ => 1.0,
    };
    for s in &mut cascade.sections {
        normalize_section_gain(s, reference_z);
    }

    let worst = cascade.max_pole_magnitude();
    if worst >= 1.0 {
        return Err(Error::FilterDesign(format!(
            "unstable design: pole magnitude {worst}"
        )));
    }
    Ok(cascade)
}

/// Conjugate-pair prototype pole angles (upper half plane only) for a
/// normalized Butterworth filter of the given order.
fn prototype_pairs(order: usize) -> Vec<(f64, f64)> {
    (0..order / 2)
        .map(|k| {
            let theta = std::f64::consts::PI * (0.5 + (2 * k + 1) as f64 / (2.0 * order as f64));
            (theta.cos(), theta.sin())
        })
        .collect()
}

/// Bilinear transform of (b2 s^2 + b1 s + b0) / (s^2 + c1 s + c2).
fn bilinear_sos(b2: f64, b1: f64, b0: f64, c1: f64, c2: f64, k: f64) -> Biquad {
    let k2 = k * k;
    let a0 = k2 + c1 * k + c2;
    Biquad {
        b0: (b2 * k2 + b1 * k + b0) / a0,
        b1: (-2.0 * b2 * k2 + 2.0 * b0) / a0,
        b2: (b2 * k2 - b1 * k + b0) / a0,
        a1: (-2.0 * k2 + 2.0 * c2) / a0,
        a2: (k2 - c1 * k + c2) / a0,
        section_order: 2,
    }
}

/// Bilinear transform of (b1 s + b0) / (s + c0).
fn bilinear_first(b1: f64, b0: f64, c0: f64, k: f64) -> Biquad {
    let a0 = k + c0;
    Biquad {
        b0: (b1 * k + b0) / a0,
        b1: (b0 - b1 * k) / a0,
        b2: 0.0,
        a1: (c0 - k) / a0,
        a2: 0.0,
        section_order: 1,
    }
}

/// Rescales and nudges the numerator so the section response at the
/// reference frequency is exactly 1.0 in f64 arithmetic (the analog design
/// already puts it within rounding error of 1).
fn normalize_section_gain(s: &mut Biquad, z: f64) {
    let den = |s: &Biquad| 1.0 + z * (s.a1 + z * s.a2);
    let num = |s: &Biquad| s.b0 + z * (s.b1 + z * s.b2);
    let gain = num(s) / den(s);
    s.b0 /= gain;
    s.b1 /= gain;
    s.b2 /= gain;
    for _ in 0..4 {
        let delta = den(s) - num(s);
        if delta == 0.0 {
            break;
        }
        s.b1 += z * delta;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn warped_ratio(f: f64, fc: f64, fs: f64) -> f64 {
        let w = |f: f64| (std::f64::consts::PI * f / fs).tan();
        w(f) / w(fc)
    }

    /// Analog Butterworth magnitude at the prewarped frequency.
    fn analog_oracle(f: f64, fc: f64, fs: f64, order: usize) -> f64 {
        1.0 / (1.0 + warped_ratio(f, fc, fs).powi(2 * order as i32)).sqrt()
    }

    #[test]
    fn lowpass_dc_gain_is_exactly_one() {
        for order in [1, 2, 3, 4, 5, 9] {
            let f = design_butterworth(FilterKind::Lowpass, order, &[95.0], 1000.0).unwrap();
            assert_eq!(f.magnitude_at(0.0), 1.0, "order {order}");
        }
    }

    #[test]
    fn lowpass_cutoff_gain_is_half_power() {
        let f = design_butterworth(FilterKind::Lowpass, 9, &[95.0], 1000.0).unwrap();
        let expected = 1.0 / 2.0f64.sqrt();
        assert!((f.magnitude_at(95.0) - expected).abs() < 1e-6);
    }

    #[test]
    fn lowpass_stopband_matches_analog_oracle() {
        let f = design_butterworth(FilterKind::Lowpass, 9, &[95.0], 1000.0).unwrap();
        let oracle = analog_oracle(150.0, 95.0, 1000.0, 9);
        let got = f.magnitude_at(150.0);
        assert!(
            (got - oracle).abs() <= 0.1 * oracle,
            "got {got}, oracle {oracle}"
        );
    }

    #[test]
    fn highpass_nyquist_gain_is_one_and_dc_blocked() {
        let f = design_butterworth(FilterKind::Highpass, 4, &[1.0], 250.0).unwrap();
        assert_eq!(f.magnitude_at(125.0), 1.0);
        assert!(f.magnitude_at(0.0) < 1e-12);
        assert!((f.magnitude_at(1.0) - 1.0 / 2.0f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn bandstop_notch_kills_center_and_passes_dc() {
        let f = design_butterworth(FilterKind::Bandstop, 4, &[49.0, 51.0], 250.0).unwrap();
        assert_eq!(f.sections.len(), 2);
        assert_eq!(f.magnitude_at(0.0), 1.0);
        assert!(f.magnitude_at(50.0) < 1e-3);
        assert!((f.magnitude_at(10.0) - 1.0).abs() < 1e-3);
        assert!((f.magnitude_at(49.0) - 1.0 / 2.0f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn cutoff_at_or_above_nyquist_is_rejected() {
        assert!(design_butterworth(FilterKind::Lowpass, 4, &[500.0], 1000.0).is_err());
        assert!(design_butterworth(FilterKind::Lowpass, 0, &[95.0], 1000.0).is_err());
        assert!(design_butterworth(FilterKind::Bandstop, 3, &[49.0, 51.0], 250.0).is_err());
    }

    #[test]
    fn cascade_order_matches_design_order() {
        for order in 1..=12 {
            let f = design_butterworth(FilterKind::Lowpass, order, &[30.0], 250.0).unwrap();
            let total: usize = f.sections.iter().map(|s| s.section_order).sum();
            assert_eq!(total, order);
        }
    }

    #[test]
    fn apply_is_linear() {
        let f = design_butterworth(FilterKind::Lowpass, 9, &[95.0], 1000.0).unwrap();
        let zeros = vec![0.0; 256];
        assert!(f.apply(&zeros).unwrap().iter().all(|&v| v == 0.0));

        let x: Vec<f64> = (0..256).map(|i| ((i * 37) % 17) as f64 - 8.0).collect();
        let scaled: Vec<f64> = x.iter().map(|v| 3.5 * v).collect();
        let y = f.apply(&x).unwrap();
        let ys = f.apply(&scaled).unwrap();
        for (a, b) in y.iter().zip(&ys) {
            assert!((3.5 * a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn sinusoid_steady_state_matches_response_magnitude() {
        let f = design_butterworth(FilterKind::Lowpass, 9, &[95.0], 1000.0).unwrap();
        let fs = 1000.0;
        let n = 4000;
        let x: Vec<f64> = (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * 10.0 * i as f64 / fs).sin())
            .collect();
        let y = f.apply(&x).unwrap();
        // Project the last two seconds (integer periods of 10 Hz) onto the
        // 10 Hz quadrature pair to estimate the steady-state amplitude.
        let tail = &y[2000..];
        let (mut cs, mut sn) = (0.0, 0.0);
        for (i, v) in tail.iter().enumerate() {
            let t = (2000 + i) as f64 / fs;
            let phase = 2.0 * std::f64::consts::PI * 10.0 * t;
            cs += v * phase.cos();
            sn += v * phase.sin();
        }
        let amplitude = 2.0 * (cs * cs + sn * sn).sqrt() / tail.len() as f64;
        assert!((amplitude - 1.0).abs() < 1e-3, "amplitude {amplitude}");
        assert!((amplitude - f.magnitude_at(10.0)).abs() < 1e-3);
    }

    #[test]
    fn short_signal_is_rejected() {
        let f = design_butterworth(FilterKind::Lowpass, 9, &[95.0], 1000.0).unwrap();
        assert!(f.apply(&[]).is_err());
        assert!(f.apply(&vec![0.0; 27]).is_err());
        assert!(f.apply(&vec![0.0; 28]).is_ok());
    }

    proptest! {
        #[test]
        fn designed_cascades_are_stable(
            order in 1usize..=12,
            cutoff_frac in 0.01f64..0.49,
        ) {
            let fs = 1000.0;
            let f = design_butterworth(FilterKind::Lowpass, order, &[cutoff_frac * fs], fs).unwrap();
            prop_assert!(f.max_pole_magnitude() < 1.0);
            let h = design_butterworth(FilterKind::Highpass, order, &[cutoff_frac * fs], fs).unwrap();
            prop_assert!(h.max_pole_magnitude() < 1.0);
        }

        #[test]
        fn bandstop_cascades_are_stable(
            half_order in 1usize..=6,
            lo_frac in 0.02f64..0.40,
            width_frac in 0.005f64..0.08,
        ) {
            let fs = 1000.0;
            let lo = lo_frac * fs;
            let hi = (lo_frac + width_frac).min(0.49) * fs;
            let f = design_butterworth(FilterKind::Bandstop, 2 * half_order, &[lo, hi], fs).unwrap();
            prop_assert!(f.max_pole_magnitude() < 1.0);
        }
    }
}
