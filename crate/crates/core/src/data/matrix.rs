//! Core domain types for participant-level tabular data.

use std::collections::HashSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Signal modality a feature column was derived from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modality {
    #[serde(rename = "MAG")]
    Mag,
    #[serde(rename = "GRAD")]
    Grad,
    #[serde(rename = "MRI")]
    Mri,
    #[serde(rename = "OTHER")]
    Other,
}

impl Modality {
    pub fn as_str(&self) -> &'static str {
        match self {
            Modality::Mag => "MAG",
            Modality::Grad => "GRAD",
            Modality::Mri => "MRI",
            Modality::Other => "OTHER",
        }
    }

    pub fn parse(s: &str) -> Result<Modality> {
        match s {
            "MAG" => Ok(Modality::Mag),
            "GRAD" => Ok(Modality::Grad),
            "MRI" => Ok(Modality::Mri),
            "OTHER" => Ok(Modality::Other),
            other => Err(Error::Validation(format!("unknown modality {other:?}"))),
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Descriptor of one feature column.
///
/// Column names are stored as `modality/stem` internally so that MAG and GRAD
/// columns sharing a sensor-name stem stay distinct after combination.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub modality: Modality,
    pub band: Option<String>,
    pub region: Option<String>,
}

impl FeatureColumn {
    pub fn new(stem: &str, modality: Modality) -> Self {
        FeatureColumn {
            name: format!("{}/{}", modality.as_str(), stem),
            modality,
            band: None,
            region: None,
        }
    }

    /// Column name without the modality prefix (as written to CSV headers).
    pub fn stem(&self) -> &str {
        let prefix_len = self.modality.as_str().len() + 1;
        &self.name[prefix_len..]
    }
}

/// Participants × features matrix with per-column metadata.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    ids: Vec<String>,
    columns: Vec<FeatureColumn>,
    /// Row-major, `ids.len() × columns.len()`.
    values: Vec<f64>,
}

impl FeatureMatrix {
    /// Builds a matrix, validating uniqueness and finiteness invariants.
    pub fn new(ids: Vec<String>, columns: Vec<FeatureColumn>, values: Vec<f64>) -> Result<Self> {
        if values.len() != ids.len() * columns.len() {
            return Err(Error::Validation(format!(
                "value buffer has {} entries, expected {}x{}",
                values.len(),
                ids.len(),
                columns.len()
            )));
        }
        let mut seen = HashSet::new();
        for id in &ids {
            if !seen.insert(id.as_str()) {
                return Err(Error::Validation(format!("duplicate participant id {id:?}")));
            }
        }
        let mut seen = HashSet::new();
        for col in &columns {
            if !seen.insert(col.name.as_str()) {
                return Err(Error::Validation(format!(
                    "duplicate feature column {:?}",
                    col.name
                )));
            }
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                let row = i / columns.len();
                let col = i % columns.len();
                return Err(Error::Cell {
                    row: row + 1,
                    column: columns[col].name.clone(),
                    message: format!("non-finite value {v}"),
                });
            }
        }
        Ok(FeatureMatrix {
            ids,
            columns,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.columns.len() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let w = self.columns.len();
        &self.values[row * w..(row + 1) * w]
    }

    pub fn column_values(&self, col: usize) -> impl Iterator<Item = f64> + '_ {
        let w = self.columns.len();
        self.values[col..].iter().step_by(w).copied()
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    /// New matrix keeping `indices` columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> FeatureMatrix {
        let columns: Vec<_> = indices.iter().map(|&i| self.columns[i].clone()).collect();
        let mut values = Vec::with_capacity(self.ids.len() * indices.len());
        for r in 0..self.ids.len() {
            let row = self.row(r);
            values.extend(indices.iter().map(|&i| row[i]));
        }
        FeatureMatrix {
            ids: self.ids.clone(),
            columns,
            values,
        }
    }

    /// New matrix keeping `indices` rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> FeatureMatrix {
        let ids: Vec<_> = indices.iter().map(|&i| self.ids[i].clone()).collect();
        let mut values = Vec::with_capacity(indices.len() * self.columns.len());
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix {
            ids,
            columns: self.columns.clone(),
            values,
        }
    }

    /// Replaces the value buffer, keeping ids and columns.
    pub fn with_values(&self, values: Vec<f64>) -> Result<FeatureMatrix> {
        FeatureMatrix::new(self.ids.clone(), self.columns.clone(), values)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

/// Per-participant nuisance covariates. Optional cells are `None`.
#[derive(Debug, Clone, PartialEq)]
pub struct CovariateTable {
    ids: Vec<String>,
    pub age: Vec<Option<f64>>,
    pub sex: Vec<Option<String>>,
    pub site: Vec<Option<String>>,
    pub tiv: Vec<Option<f64>>,
    pub movement: Vec<Option<f64>>,
}

/// Names of the continuous covariates, in schema order.
pub const CONTINUOUS_COVARIATES: [&str; 3] = ["age", "tiv", "movement"];
/// Names of the categorical covariates, in schema order.
pub const CATEGORICAL_COVARIATES: [&str; 2] = ["sex", "site"];

impl CovariateTable {
    pub fn new(
        ids: Vec<String>,
        age: Vec<Option<f64>>,
        sex: Vec<Option<String>>,
        site: Vec<Option<String>>,
        tiv: Vec<Option<f64>>,
        movement: Vec<Option<f64>>,
    ) -> Result<Self> {
        let n = ids.len();
        for (name, len) in [
            ("age", age.len()),
            ("sex", sex.len()),
            ("site", site.len()),
            ("tiv", tiv.len()),
            ("movement", movement.len()),
        ] {
            if len != n {
                return Err(Error::Validation(format!(
                    "covariate column {name} has {len} rows, expected {n}"
                )));
            }
        }
        Ok(CovariateTable {
            ids,
            age,
            sex,
            site,
            tiv,
            movement,
        })
    }

    pub fn empty(ids: Vec<String>) -> Self {
        let n = ids.len();
        CovariateTable {
            ids,
            age: vec![None; n],
            sex: vec![None; n],
            site: vec![None; n],
            tiv: vec![None; n],
            movement: vec![None; n],
        }
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn n_rows(&self) -> usize {
        self.ids.len()
    }

    pub fn is_categorical(name: &str) -> bool {
        CATEGORICAL_COVARIATES.contains(&name)
    }

    pub fn is_known(name: &str) -> bool {
        CONTINUOUS_COVARIATES.contains(&name) || CATEGORICAL_COVARIATES.contains(&name)
    }

    pub fn continuous(&self, name: &str) -> Result<&[Option<f64>]> {
        match name {
            "age" => Ok(&self.age),
            "tiv" => Ok(&self.tiv),
            "movement" => Ok(&self.movement),
            other => Err(Error::Validation(format!(
                "unknown continuous covariate {other:?}"
            ))),
        }
    }

    pub fn categorical(&self, name: &str) -> Result<&[Option<String>]> {
        match name {
            "sex" => Ok(&self.sex),
            "site" => Ok(&self.site),
            other => Err(Error::Validation(format!(
                "unknown categorical covariate {other:?}"
            ))),
        }
    }

    pub fn select_rows(&self, indices: &[usize]) -> CovariateTable {
        CovariateTable {
            ids: indices.iter().map(|&i| self.ids[i].clone()).collect(),
            age: indices.iter().map(|&i| self.age[i]).collect(),
            sex: indices.iter().map(|&i| self.sex[i].clone()).collect(),
            site: indices.iter().map(|&i| self.site[i].clone()).collect(),
            tiv: indices.iter().map(|&i| self.tiv[i]).collect(),
            movement: indices.iter().map(|&i| self.movement[i]).collect(),
        }
    }
}

/// Binary class labels: 0 = HC, 1 = MCI (the positive class).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector(Vec<u8>);

impl LabelVector {
    pub fn new(labels: Vec<u8>) -> Result<Self> {
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Validation(format!(
                "label {bad} outside {{0, 1}}"
            )));
        }
        Ok(LabelVector(labels))
    }

    pub fn as_slice(&self) -> &[u8] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn count(&self, class: u8) -> usize {
        self.0.iter().filter(|&&l| l == class).count()
    }

    pub fn both_classes_present(&self) -> bool {
        self.count(0) > 0 && self.count(1) > 0
    }

    pub fn select(&self, indices: &[usize]) -> LabelVector {
        LabelVector(indices.iter().map(|&i| self.0[i]).collect())
    }
}

/// Features, covariates and labels sharing one ordered participant list.
///
/// Immutable after construction; safe to share across replication workers.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub features: FeatureMatrix,
    pub covariates: CovariateTable,
    pub labels: LabelVector,
}

impl DatasetBundle {
    pub fn new(
        features: FeatureMatrix,
        covariates: CovariateTable,
        labels: LabelVector,
    ) -> Result<Self> {
        if features.ids() != covariates.ids() {
            return Err(Error::ParticipantMismatch(
                "feature and covariate id lists differ".into(),
            ));
        }
        if features.n_rows() != labels.len() {
            return Err(Error::ParticipantMismatch(format!(
                "{} feature rows but {} labels",
                features.n_rows(),
                labels.len()
            )));
        }
        Ok(DatasetBundle {
            features,
            covariates,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.features.n_rows()
    }

    pub fn ids(&self) -> &[String] {
        self.features.ids()
    }

    pub fn select_rows(&self, indices: &[usize]) -> DatasetBundle {
        DatasetBundle {
            features: self.features.select_rows(indices),
            covariates: self.covariates.select_rows(indices),
            labels: self.labels.select(indices),
        }
    }

    /// Same participants, different feature matrix (e.g. after correction).
    pub fn with_features(&self, features: FeatureMatrix) -> Result<DatasetBundle> {
        DatasetBundle::new(features, self.covariates.clone(), self.labels.clone())
    }
}
