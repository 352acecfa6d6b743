//! Column-wise combination of per-modality feature bundles.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::matrix::{CovariateTable, DatasetBundle, FeatureMatrix, Modality};

/// Which modalities a combined analysis draws on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "&'static str")]
pub enum CombinationMode {
    MagOnly,
    GradOnly,
    MriOnly,
    MagMri,
    GradMri,
    MagGradMri,
}

impl CombinationMode {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "MAG_ONLY" | "MAG" => Ok(CombinationMode::MagOnly),
            "GRAD_ONLY" | "GRAD" => Ok(CombinationMode::GradOnly),
            "MRI_ONLY" | "MRI" => Ok(CombinationMode::MriOnly),
            "MAG+MRI" => Ok(CombinationMode::MagMri),
            "GRAD+MRI" => Ok(CombinationMode::GradMri),
            "MAG+GRAD+MRI" => Ok(CombinationMode::MagGradMri),
            other => Err(Error::Validation(format!(
                "unknown combination mode {other:?}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            CombinationMode::MagOnly => "MAG_ONLY",
            CombinationMode::GradOnly => "GRAD_ONLY",
            CombinationMode::MriOnly => "MRI_ONLY",
            CombinationMode::MagMri => "MAG+MRI",
            CombinationMode::GradMri => "GRAD+MRI",
            CombinationMode::MagGradMri => "MAG+GRAD+MRI",
        }
    }

    pub fn modalities(&self) -> &'static [Modality] {
        match self {
            CombinationMode::MagOnly => &[Modality::Mag],
            CombinationMode::GradOnly => &[Modality::Grad],
            CombinationMode::MriOnly => &[Modality::Mri],
            CombinationMode::MagMri => &[Modality::Mag, Modality::Mri],
            CombinationMode::GradMri => &[Modality::Grad, Modality::Mri],
            CombinationMode::MagGradMri => &[Modality::Mag, Modality::Grad, Modality::Mri],
        }
    }

    pub fn uses(&self, modality: Modality) -> bool {
        self.modalities().contains(&modality)
    }

    pub const ALL: [CombinationMode; 6] = [
        CombinationMode::MagOnly,
        CombinationMode::GradOnly,
        CombinationMode::MriOnly,
        CombinationMode::MagMri,
        CombinationMode::GradMri,
        CombinationMode::MagGradMri,
    ];
}

impl std::fmt::Display for CombinationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl TryFrom<String> for CombinationMode {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        CombinationMode::parse(&value)
    }
}

impl From<CombinationMode> for &'static str {
    fn from(mode: CombinationMode) -> Self {
        mode.as_str()
    }
}

/// Concatenates the columns of the selected modalities across bundles.
///
/// Bundles must share an identical ordered participant list and identical
/// labels; covariate tables are merged field-wise and must agree wherever
/// both sides define a value.
pub fn combine_features(bundles: &[DatasetBundle], mode: CombinationMode) -> Result<DatasetBundle> {
    if bundles.is_empty() {
        return Err(Error::Validation("no bundles to combine".into()));
    }
    let first = &bundles[0];
    for b in &bundles[1..] {
        if b.ids() != first.ids() {
            return Err(Error::ParticipantMismatch(
                "bundles have different participant id lists".into(),
            ));
        }
        if b.labels != first.labels {
            return Err(Error::Validation(
                "bundles disagree on participant labels".into(),
            ));
        }
    }

    let mut columns = Vec::new();
    let mut col_sources = Vec::new(); // (bundle index, column index)
    let mut seen = HashSet::new();
    for &modality in mode.modalities() {
        for (bi, bundle) in bundles.iter().enumerate() {
            for (ci, col) in bundle.features.columns().iter().enumerate() {
                if col.modality != modality {
                    continue;
                }
                if !seen.insert(col.name.clone()) {
                    return Err(Error::Validation(format!(
                        "duplicate column {:?} across combined bundles",
                        col.name
                    )));
                }
                columns.push(col.clone());
                col_sources.push((bi, ci));
            }
        }
    }
    if columns.is_empty() {
        return Err(Error::Validation(format!(
            "no columns with modality in {mode} among the given bundles"
        )));
    }

    let n = first.n();
    let mut values = Vec::with_capacity(n * columns.len());
    for r in 0..n {
        for &(bi, ci) in &col_sources {
            values.push(bundles[bi].features.get(r, ci));
        }
    }
    let features = FeatureMatrix::new(first.ids().to_vec(), columns, values)?;
    let covariates = merge_covariates(bundles)?;
    DatasetBundle::new(features, covariates, first.labels.clone())
}

fn merge_covariates(bundles: &[DatasetBundle]) -> Result<CovariateTable> {
    let mut merged = bundles[0].covariates.clone();
    for b in &bundles[1..] {
        merge_numeric("age", &mut merged.age, &b.covariates.age)?;
        merge_numeric("tiv", &mut merged.tiv, &b.covariates.tiv)?;
        merge_numeric("movement", &mut merged.movement, &b.covariates.movement)?;
        merge_string("sex", &mut merged.sex, &b.covariates.sex)?;
        merge_string("site", &mut merged.site, &b.covariates.site)?;
    }
    Ok(merged)
}

fn merge_numeric(name: &str, into: &mut [Option<f64>], from: &[Option<f64>]) -> Result<()> {
    for (i, (a, b)) in into.iter_mut().zip(from).enumerate() {
        match (&a, b) {
            (None, Some(v)) => *a = Some(*v),
            (Some(x), Some(y)) if x != y => {
                return Err(Error::Validation(format!(
                    "covariate {name} disagrees across bundles at row {} ({x} vs {y})",
                    i + 1
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

fn merge_string(name: &str, into: &mut [Option<String>], from: &[Option<String>]) -> Result<()> {
    for (i, (a, b)) in into.iter_mut().zip(from).enumerate() {
        match (&a, b) {
            (None, Some(v)) => *a = Some(v.clone()),
            (Some(x), Some(y)) if x != y => {
                return Err(Error::Validation(format!(
                    "covariate {name} disagrees across bundles at row {} ({x:?} vs {y:?})",
                    i + 1
                )))
            }
            _ => {}
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::matrix::{FeatureColumn, LabelVector};

    fn bundle(modality: Modality, stems: &[&str], base: f64) -> DatasetBundle {
        let ids = vec!["a".to_string(), "b".to_string()];
        let columns: Vec<_> = stems
            .iter()
            .map(|s| FeatureColumn::new(s, modality))
            .collect();
        let values: Vec<f64> = (0..ids.len() * stems.len())
            .map(|i| base + i as f64)
            .collect();
        let features = FeatureMatrix::new(ids.clone(), columns, values).unwrap();
        DatasetBundle::new(
            features,
            CovariateTable::empty(ids),
            LabelVector::new(vec![0, 1]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn column_counts_add_up() {
        let mag = bundle(Modality::Mag, &["s1", "s2"], 0.0);
        let grad = bundle(Modality::Grad, &["s1", "s2", "s3"], 10.0);
        let mri = bundle(Modality::Mri, &["v1"], 100.0);
        let all = combine_features(
            &[mag.clone(), grad.clone(), mri.clone()],
            CombinationMode::MagGradMri,
        )
        .unwrap();
        assert_eq!(all.features.n_cols(), 6);
        // MAG and GRAD share stems but modality prefixes keep them distinct.
        assert!(all.features.column_index("MAG/s1").is_some());
        assert!(all.features.column_index("GRAD/s1").is_some());
    }

    #[test]
    fn single_modality_is_identity() {
        let mag = bundle(Modality::Mag, &["s1", "s2"], 0.0);
        let same = combine_features(std::slice::from_ref(&mag), CombinationMode::MagOnly).unwrap();
        assert_eq!(same, mag);
    }

    #[test]
    fn combine_then_project_back_is_exact() {
        let mag = bundle(Modality::Mag, &["s1", "s2"], 0.0);
        let mri = bundle(Modality::Mri, &["v1"], 100.0);
        let both = combine_features(&[mag.clone(), mri], CombinationMode::MagMri).unwrap();
        let mag_cols: Vec<usize> = both
            .features
            .columns()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.modality == Modality::Mag)
            .map(|(i, _)| i)
            .collect();
        let projected = both.features.select_columns(&mag_cols);
        assert_eq!(projected, mag.features);
    }

    #[test]
    fn duplicate_column_after_prefixing_is_rejected() {
        let a = bundle(Modality::Mag, &["s1"], 0.0);
        let b = bundle(Modality::Mag, &["s1"], 5.0);
        let err = combine_features(&[a, b], CombinationMode::MagOnly).unwrap_err();
        assert!(err.to_string().contains("duplicate column"));
    }

    #[test]
    fn participant_mismatch_is_rejected() {
        let a = bundle(Modality::Mag, &["s1"], 0.0);
        let mut b = bundle(Modality::Mri, &["v1"], 0.0);
        b = b.select_rows(&[1, 0]);
        let err = combine_features(&[a, b], CombinationMode::MagMri).unwrap_err();
        assert!(matches!(err, Error::ParticipantMismatch(_)));
    }
}
