//! Signal processing: filter design, epoching and relative band power.

mod band;
mod epoch;
mod filter;
mod spectrum;

pub use band::{default_bands, BandDefinition, DEFAULT_ANALYSIS_RANGE, NOTCH_EXCLUSION};
pub use epoch::{epoch_signal, load_epochs, resample, save_epochs, EpochSet};
pub use filter::{design_butterworth, Biquad, FilterCascade, FilterKind};
pub use spectrum::{band_relative_power, mean_periodogram, Periodogram};
