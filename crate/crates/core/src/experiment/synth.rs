//! Two-site synthetic dataset generator for desk-scale verification.

use std::fs;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::data::{
    save_dataset, CovariateTable, DatasetBundle, FeatureColumn, FeatureMatrix, LabelVector,
    Modality,
};
use crate::error::{Error, Result};

/// Generator configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub n_class0: usize,
    pub n_class1: usize,
    /// Class-conditional Gaussian features with this mean shift for class 1,
    /// in units of the unit noise SD.
    pub n_informative: usize,
    pub effect_size: f64,
    /// Pure-noise features.
    pub n_noise: usize,
    /// The first `n_site_shifted` noise columns get `site_shift` added for
    /// site "2" participants.
    pub n_site_shifted: usize,
    pub site_shift: f64,
    /// The next `n_age_affected` noise columns get `age_slope x (age - mean)`.
    pub n_age_affected: usize,
    pub age_slope: f64,
    pub age_range: (f64, f64),
    /// Modality tag stamped on every generated column.
    pub modality: Modality,
}

impl Default for SynthSpec {
    fn default() -> Self {
        SynthSpec {
            n_class0: 100,
            n_class1: 100,
            n_informative: 5,
            effect_size: 1.0,
            n_noise: 20,
            n_site_shifted: 0,
            site_shift: 0.0,
            n_age_affected: 0,
            age_slope: 0.0,
            age_range: (55.0, 85.0),
            modality: Modality::Other,
        }
    }
}

/// Ground truth written alongside a generated dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthTruth {
    pub informative: Vec<String>,
    pub site_shifted: Vec<String>,
    pub age_affected: Vec<String>,
    pub effect_size: f64,
    pub site_shift: f64,
    pub age_slope: f64,
    pub seed: u64,
}

const BAND_CYCLE: [&str; 6] = ["delta", "theta", "alpha", "beta", "gamma_low", "gamma_high"];

/// Generates the bundle plus its ground truth. Participant ids are
/// zero-padded so the canonical lexicographic order equals generation order.
pub fn synth_dataset(spec: &SynthSpec, seed: u64) -> Result<(DatasetBundle, SynthTruth)> {
    let n = spec.n_class0 + spec.n_class1;
    if n == 0 {
        return Err(Error::Validation("synthetic spec generates zero rows".into()));
    }
    let n_features = spec.n_informative + spec.n_noise;
    if n_features == 0 {
        return Err(Error::Validation("synthetic spec generates zero features".into()));
    }
    if spec.n_site_shifted + spec.n_age_affected > spec.n_noise {
        return Err(Error::Validation(
            "site-shifted plus age-affected columns exceed the noise block".into(),
        ));
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let unit = Normal::new(0.0, 1.0).expect("unit normal");

    let ids: Vec<String> = (0..n).map(|i| format!("S{i:05}")).collect();
    let labels: Vec<u8> = (0..n).map(|i| (i >= spec.n_class0) as u8).collect();

    let ages: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(spec.age_range.0..spec.age_range.1))
        .collect();
    let mean_age: f64 = ages.iter().sum::<f64>() / n as f64;
    let sexes: Vec<String> = (0..n)
        .map(|_| if rng.gen_bool(0.5) { "M" } else { "F" }.to_string())
        .collect();
    let sites: Vec<String> = (0..n)
        .map(|i| if i % 2 == 0 { "1" } else { "2" }.to_string())
        .collect();
    let tivs: Vec<f64> = (0..n).map(|_| 1500.0 + 100.0 * unit.sample(&mut rng)).collect();
    let movements: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();

    let mut columns = Vec::with_capacity(n_features);
    for i in 0..spec.n_informative {
        let mut col = FeatureColumn::new(&format!("inf_{i:03}"), spec.modality);
        col.band = Some(BAND_CYCLE[i % 6].to_string());
        col.region = Some(format!("region{:02}", i / 6));
        columns.push(col);
    }
    for i in 0..spec.n_noise {
        let mut col = FeatureColumn::new(&format!("noise_{i:03}"), spec.modality);
        let j = spec.n_informative + i;
        col.band = Some(BAND_CYCLE[j % 6].to_string());
        col.region = Some(format!("region{:02}", j / 6));
        columns.push(col);
    }

    let mut values = Vec::with_capacity(n * n_features);
    for row in 0..n {
        let label = labels[row] as f64;
        let on_site2 = sites[row] == "2";
        for _ in 0..spec.n_informative {
            values.push(unit.sample(&mut rng) + spec.effect_size * label);
        }
        for j in 0..spec.n_noise {
            let mut v = unit.sample(&mut rng);
            if j < spec.n_site_shifted && on_site2 {
                v += spec.site_shift;
            }
            if j >= spec.n_site_shifted && j < spec.n_site_shifted + spec.n_age_affected {
                v += spec.age_slope * (ages[row] - mean_age);
            }
            values.push(v);
        }
    }

    let features = FeatureMatrix::new(ids.clone(), columns, values)?;
    let covariates = CovariateTable::new(
        ids,
        ages.into_iter().map(Some).collect(),
        sexes.into_iter().map(Some).collect(),
        sites.into_iter().map(Some).collect(),
        tivs.into_iter().map(Some).collect(),
        movements.into_iter().map(Some).collect(),
    )?;
    let bundle = DatasetBundle::new(features, covariates, LabelVector::new(labels)?)?;

    let name_of = |i: usize| bundle.features.columns()[i].name.clone();
    let truth = SynthTruth {
        informative: (0..spec.n_informative).map(name_of).collect(),
        site_shifted: (0..spec.n_site_shifted)
            .map(|i| name_of(spec.n_informative + i))
            .collect(),
        age_affected: (0..spec.n_age_affected)
            .map(|i| name_of(spec.n_informative + spec.n_site_shifted + i))
            .collect(),
        effect_size: spec.effect_size,
        site_shift: spec.site_shift,
        age_slope: spec.age_slope,
        seed,
    };
    Ok((bundle, truth))
}

/// Generates and writes `features.csv` (+ sidecar), `covariates.csv`,
/// `labels.csv` and `truth.json` into `dir`.
pub fn write_synth_dataset(spec: &SynthSpec, seed: u64, dir: &Path) -> Result<SynthTruth> {
    let (bundle, truth) = synth_dataset(spec, seed)?;
    save_dataset(&bundle, dir)?;
    let truth_path = dir.join("truth.json");
    fs::write(
        &truth_path,
        serde_json::to_string_pretty(&truth).expect("truth serialization"),
    )
    .map_err(|e| Error::Io {
        path: truth_path.display().to_string(),
        source: e,
    })?;
    Ok(truth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::load_dataset;

    #[test]
    fn paper_shaped_dataset() {
        let spec = SynthSpec {
            n_class0: 166,
            n_class1: 158,
            ..SynthSpec::default()
        };
        let (bundle, truth) = synth_dataset(&spec, 1).unwrap();
        assert_eq!(bundle.n(), 324);
        assert_eq!(bundle.labels.count(0), 166);
        assert_eq!(bundle.labels.count(1), 158);
        assert_eq!(truth.informative.len(), 5);
    }

    #[test]
    fn generation_is_seed_deterministic() {
        let spec = SynthSpec::default();
        let (a, _) = synth_dataset(&spec, 42).unwrap();
        let (b, _) = synth_dataset(&spec, 42).unwrap();
        assert_eq!(a, b);
        let (c, _) = synth_dataset(&spec, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn site_shift_lands_on_designated_columns() {
        let spec = SynthSpec {
            n_class0: 200,
            n_class1: 200,
            n_informative: 1,
            n_noise: 4,
            n_site_shifted: 2,
            site_shift: 3.0,
            ..SynthSpec::default()
        };
        let (bundle, truth) = synth_dataset(&spec, 7).unwrap();
        assert_eq!(truth.site_shifted.len(), 2);
        let col = bundle.features.column_index(&truth.site_shifted[0]).unwrap();
        let mut site_means = [0.0f64; 2];
        let mut counts = [0usize; 2];
        for (i, v) in bundle.features.column_values(col).enumerate() {
            let s = if bundle.covariates.site[i].as_deref() == Some("2") { 1 } else { 0 };
            site_means[s] += v;
            counts[s] += 1;
        }
        let diff = site_means[1] / counts[1] as f64 - site_means[0] / counts[0] as f64;
        assert!((diff - 3.0).abs() < 0.5, "site shift estimate {diff}");
    }

    #[test]
    fn zero_rows_is_rejected() {
        let spec = SynthSpec {
            n_class0: 0,
            n_class1: 0,
            ..SynthSpec::default()
        };
        assert!(synth_dataset(&spec, 0).is_err());
    }

    #[test]
    fn written_dataset_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SynthSpec {
            n_class0: 12,
            n_class1: 14,
            n_informative: 2,
            n_noise: 3,
            ..SynthSpec::default()
        };
        let truth = write_synth_dataset(&spec, 11, dir.path()).unwrap();
        let bundle = load_dataset(
            &dir.path().join("features.csv"),
            &dir.path().join("covariates.csv"),
            &dir.path().join("labels.csv"),
        )
        .unwrap();
        let (expected, _) = synth_dataset(&spec, 11).unwrap();
        assert_eq!(bundle, expected);
        assert_eq!(truth.informative.len(), 2);
        assert!(dir.path().join("truth.json").exists());
    }
}
