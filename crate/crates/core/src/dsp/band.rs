//! Frequency band definitions.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A named frequency band. Bin ownership is half-open: `[low, high)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDefinition {
    pub name: String,
    pub low_hz: f64,
    pub high_hz: f64,
}

impl BandDefinition {
    pub fn new(name: &str, low_hz: f64, high_hz: f64) -> Result<Self> {
        if !(low_hz > 0.0 && low_hz < high_hz) {
            return Err(Error::Validation(format!(
                "band {name}: need 0 < low < high, got [{low_hz}, {high_hz})"
            )));
        }
        Ok(BandDefinition {
            name: name.to_string(),
            low_hz,
            high_hz,
        })
    }

    pub fn contains(&self, f: f64) -> bool {
        f >= self.low_hz && f < self.high_hz
    }
}

/// The six analysis bands: delta, theta, alpha, beta, low and high gamma.
/// Note beta and low gamma overlap (30-35 Hz) and 48-52 Hz is covered by
/// neither, so the six relative powers do not sum to one.
pub fn default_bands() -> Vec<BandDefinition> {
    [
        ("delta", 2.0, 4.0),
        ("theta", 4.0, 8.0),
        ("alpha", 8.0, 12.0),
        ("beta", 12.0, 35.0),
        ("gamma_low", 30.0, 48.0),
        ("gamma_high", 52.0, 86.0),
    ]
    .into_iter()
    .map(|(n, lo, hi)| BandDefinition::new(n, lo, hi).expect("static band definition"))
    .collect()
}

/// Total-power denominator range: the effective passband after the 1 Hz
/// high-pass and 95 Hz low-pass.
pub const DEFAULT_ANALYSIS_RANGE: (f64, f64) = (1.0, 95.0);

/// Mains notch stop band, excluded from the relative-power denominator when
/// the notch filter was applied.
pub const NOTCH_EXCLUSION: (f64, f64) = (49.0, 51.0);

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_bands_match_expected_edges() {
        let bands = default_bands();
        assert_eq!(bands.len(), 6);
        assert_eq!(bands[0].name, "delta");
        assert_eq!((bands[0].low_hz, bands[0].high_hz), (2.0, 4.0));
        assert_eq!((bands[3].low_hz, bands[3].high_hz), (12.0, 35.0));
        assert_eq!((bands[5].low_hz, bands[5].high_hz), (52.0, 86.0));
    }

    #[test]
    fn band_edges_are_half_open() {
        let b = BandDefinition::new("alpha", 8.0, 12.0).unwrap();
        assert!(b.contains(8.0));
        assert!(!b.contains(12.0));
    }

    #[test]
    fn invalid_edges_are_rejected() {
        assert!(BandDefinition::new("bad", 4.0, 2.0).is_err());
        assert!(BandDefinition::new("bad", 0.0, 2.0).is_err());
    }
}
