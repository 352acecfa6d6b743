//! Epoch extraction, integer-ratio resampling and the epoch file format.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Equal-length epochs for a set of channels at one sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochSet {
    /// `channels × n_epochs × epoch_len`, channel-major.
    data: Vec<f64>,
    pub n_channels: usize,
    pub n_epochs: usize,
    pub epoch_len: usize,
    pub fs_hz: f64,
    pub channel_names: Vec<String>,
}

impl EpochSet {
    pub fn new(
        data: Vec<f64>,
        n_channels: usize,
        n_epochs: usize,
        epoch_len: usize,
        fs_hz: f64,
        channel_names: Vec<String>,
    ) -> Result<Self> {
        if data.len() != n_channels * n_epochs * epoch_len {
            return Err(Error::Signal(format!(
                "epoch buffer has {} samples, expected {}x{}x{}",
                data.len(),
                n_channels,
                n_epochs,
                epoch_len
            )));
        }
        if channel_names.len() != n_channels {
            return Err(Error::Signal(format!(
                "{} channel names for {} channels",
                channel_names.len(),
                n_channels
            )));
        }
        if fs_hz <= 0.0 {
            return Err(Error::Signal(format!("invalid sample rate {fs_hz}")));
        }
        Ok(EpochSet {
            data,
            n_channels,
            n_epochs,
            epoch_len,
            fs_hz,
            channel_names,
        })
    }

    pub fn epoch(&self, channel: usize, epoch: usize) -> &[f64] {
        let start = (channel * self.n_epochs + epoch) * self.epoch_len;
        &self.data[start..start + self.epoch_len]
    }

    /// Keeps epochs whose mask entry is true (e.g. an externally supplied
    /// artifact-rejection mask).
    pub fn apply_rejection_mask(&self, keep: &[bool]) -> Result<EpochSet> {
        if keep.len() != self.n_epochs {
            return Err(Error::Signal(format!(
                "mask has {} entries for {} epochs",
                keep.len(),
                self.n_epochs
            )));
        }
        let kept: Vec<usize> = (0..self.n_epochs).filter(|&e| keep[e]).collect();
        if kept.is_empty() {
            return Err(Error::Signal("rejection mask removes every epoch".into()));
        }
        let mut data = Vec::with_capacity(self.n_channels * kept.len() * self.epoch_len);
        for c in 0..self.n_channels {
            for &e in &kept {
                data.extend_from_slice(self.epoch(c, e));
            }
        }
        EpochSet::new(
            data,
            self.n_channels,
            kept.len(),
            self.epoch_len,
            self.fs_hz,
            self.channel_names.clone(),
        )
    }
}

/// Keeps every `fs_in/fs_out`-th sample starting at index 0. The caller is
/// responsible for anti-alias filtering beforehand.
pub fn resample(signal: &[f64], fs_in: f64, fs_out: f64) -> Result<Vec<f64>> {
    if fs_in <= 0.0 || fs_out <= 0.0 {
        return Err(Error::Signal("sample rates must be positive".into()));
    }
    let ratio = fs_in / fs_out;
    let step = ratio.round() as usize;
    if step == 0 || (ratio - step as f64).abs() > 1e-9 {
        return Err(Error::Signal(format!(
            "fs_in {fs_in} is not an integer multiple of fs_out {fs_out}"
        )));
    }
    Ok(signal.iter().step_by(step).copied().collect())
}

/// Splits one channel into contiguous non-overlapping epochs; the trailing
/// remainder is discarded.
pub fn epoch_signal(signal: &[f64], fs_hz: f64, epoch_seconds: f64) -> Result<EpochSet> {
    let samples = epoch_seconds * fs_hz;
    let epoch_len = samples.round() as usize;
    if epoch_len == 0 || (samples - epoch_len as f64).abs() > 1e-9 {
        return Err(Error::Signal(format!(
            "epoch_seconds x fs = {samples} is not a positive integer"
        )));
    }
    let n_epochs = signal.len() / epoch_len;
    if n_epochs == 0 {
        return Err(Error::Signal(format!(
            "signal of {} samples is shorter than one epoch ({epoch_len})",
            signal.len()
        )));
    }
    let data = signal[..n_epochs * epoch_len].to_vec();
    EpochSet::new(data, 1, n_epochs, epoch_len, fs_hz, vec!["ch0".into()])
}

#[derive(Debug, Serialize, Deserialize)]
struct EpochHeader {
    channels: usize,
    fs_hz: f64,
    epoch_len: usize,
    n_epochs: usize,
    channel_names: Vec<String>,
}

fn header_path(data_path: &Path) -> PathBuf {
    data_path.with_extension("json")
}

/// Reads the epoch file format: little-endian f32 binary, channel-major,
/// with a JSON sidecar describing the layout.
pub fn load_epochs(data_path: &Path) -> Result<EpochSet> {
    let hdr_path = header_path(data_path);
    let hdr_text = fs::read_to_string(&hdr_path).map_err(|e| Error::Io {
        path: hdr_path.display().to_string(),
        source: e,
    })?;
    let hdr: EpochHeader = serde_json::from_str(&hdr_text).map_err(|e| Error::Schema {
        path: hdr_path.display().to_string(),
        message: e.to_string(),
    })?;

    let mut file = fs::File::open(data_path).map_err(|e| Error::Io {
        path: data_path.display().to_string(),
        source: e,
    })?;
    let expected = hdr.channels * hdr.n_epochs * hdr.epoch_len;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes).map_err(|e| Error::Io {
        path: data_path.display().to_string(),
        source: e,
    })?;
    if bytes.len() != expected * 4 {
        return Err(Error::Schema {
            path: data_path.display().to_string(),
            message: format!("{} bytes, expected {}", bytes.len(), expected * 4),
        });
    }
    let data: Vec<f64> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64)
        .collect();
    EpochSet::new(
        data,
        hdr.channels,
        hdr.n_epochs,
        hdr.epoch_len,
        hdr.fs_hz,
        hdr.channel_names,
    )
}

/// Writes the binary epoch file plus its JSON sidecar.
pub fn save_epochs(epochs: &EpochSet, data_path: &Path) -> Result<()> {
    let mut bytes = Vec::with_capacity(epochs.data.len() * 4);
    for &v in &epochs.data {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    let mut file = fs::File::create(data_path).map_err(|e| Error::Io {
        path: data_path.display().to_string(),
        source: e,
    })?;
    file.write_all(&bytes).map_err(|e| Error::Io {
        path: data_path.display().to_string(),
        source: e,
    })?;

    let hdr = EpochHeader {
        channels: epochs.n_channels,
        fs_hz: epochs.fs_hz,
        epoch_len: epochs.epoch_len,
        n_epochs: epochs.n_epochs,
        channel_names: epochs.channel_names.clone(),
    };
    let hdr_path = header_path(data_path);
    fs::write(
        &hdr_path,
        serde_json::to_string_pretty(&hdr).expect("header serialization"),
    )
    .map_err(|e| Error::Io {
        path: hdr_path.display().to_string(),
        source: e,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resample_keeps_every_fourth_sample() {
        let x: Vec<f64> = (0..4000).map(|i| i as f64).collect();
        let y = resample(&x, 1000.0, 250.0).unwrap();
        assert_eq!(y.len(), 1000);
        assert_eq!(y[0], 0.0);
        assert_eq!(y[1], 4.0);
    }

    #[test]
    fn resample_identity_and_bad_ratio() {
        let x = vec![1.0, 2.0, 3.0];
        assert_eq!(resample(&x, 250.0, 250.0).unwrap(), x);
        assert!(resample(&x, 1000.0, 300.0).is_err());
    }

    #[test]
    fn five_minutes_at_250_hz_gives_300_epochs() {
        let x = vec![0.25; 300 * 250];
        let e = epoch_signal(&x, 250.0, 1.0).unwrap();
        assert_eq!(e.n_epochs, 300);
        assert_eq!(e.epoch_len, 250);
    }

    #[test]
    fn exactly_one_epoch_and_remainder_discard() {
        let e = epoch_signal(&vec![1.0; 250], 250.0, 1.0).unwrap();
        assert_eq!(e.n_epochs, 1);
        let e = epoch_signal(&vec![1.0; 617], 250.0, 1.0).unwrap();
        assert_eq!(e.n_epochs, 2);
        assert!(epoch_signal(&vec![1.0; 100], 250.0, 1.0).is_err());
    }

    #[test]
    fn rejection_mask_keeps_selected_epochs() {
        let x: Vec<f64> = (0..300 * 250).map(|i| i as f64).collect();
        let e = epoch_signal(&x, 250.0, 1.0).unwrap();
        let mask: Vec<bool> = (0..300).map(|i| i < 115).collect();
        let kept = e.apply_rejection_mask(&mask).unwrap();
        assert_eq!(kept.n_epochs, 115);
        assert_eq!(kept.epoch(0, 3), e.epoch(0, 3));
    }

    #[test]
    fn epoch_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let data: Vec<f64> = (0..2 * 3 * 4).map(|i| (i as f64) * 0.5).collect();
        let e = EpochSet::new(data, 2, 3, 4, 250.0, vec!["a".into(), "b".into()]).unwrap();
        let path = dir.path().join("p1.bin");
        save_epochs(&e, &path).unwrap();
        let back = load_epochs(&path).unwrap();
        assert_eq!(back, e);
    }
}
