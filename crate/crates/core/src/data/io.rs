//! CSV ingestion and emission for dataset bundles.
//!
//! All files are UTF-8 CSV with a header row. Participant rows are reordered
//! into lexicographic id order on load, which fixes the canonical row order
//! every seeded downstream operation depends on.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::matrix::{
    CovariateTable, DatasetBundle, FeatureColumn, FeatureMatrix, LabelVector, Modality,
};

/// Per-column metadata carried by the JSON sidecar.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct ColumnMeta {
    pub modality: Option<Modality>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub region: Option<String>,
}

/// Sidecar document: raw column name -> metadata. Columns absent from the
/// sidecar (or an absent sidecar file) default to modality OTHER.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct Sidecar {
    pub columns: BTreeMap<String, ColumnMeta>,
}

/// Sidecar path convention: `features.csv` -> `features.meta.json`.
pub fn sidecar_path(features_path: &Path) -> PathBuf {
    features_path.with_extension("meta.json")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn schema_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Schema {
        path: path.display().to_string(),
        message: message.into(),
    }
}

/// Accepted levels for the `sex` covariate.
const SEX_LEVELS: [&str; 2] = ["M", "F"];

/// Loads a feature matrix plus its optional metadata sidecar.
pub fn load_feature_matrix(path: &Path) -> Result<FeatureMatrix> {
    let sidecar = read_sidecar(path)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| schema_err(path, e.to_string()))?;

    let headers = reader
        .headers()
        .map_err(|e| schema_err(path, e.to_string()))?
        .clone();
    if headers.is_empty() || headers.get(0) != Some("participant_id") {
        return Err(schema_err(path, "first column must be participant_id"));
    }
    if headers.len() < 2 {
        return Err(schema_err(path, "no feature columns"));
    }

    let columns: Vec<FeatureColumn> = headers
        .iter()
        .skip(1)
        .map(|raw| {
            let meta = sidecar.columns.get(raw).cloned().unwrap_or_default();
            let modality = meta.modality.unwrap_or(Modality::Other);
            let mut col = FeatureColumn::new(raw, modality);
            col.band = meta.band;
            col.region = meta.region;
            col
        })
        .collect();

    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| schema_err(path, e.to_string()))?;
        if record.len() != headers.len() {
            return Err(schema_err(
                path,
                format!("row {} has {} cells, expected {}", row_idx + 1, record.len(), headers.len()),
            ));
        }
        ids.push(record[0].to_string());
        for (c, cell) in record.iter().skip(1).enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| Error::Cell {
                row: row_idx + 1,
                column: columns[c].name.clone(),
                message: format!("non-numeric feature cell {cell:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Cell {
                    row: row_idx + 1,
                    column: columns[c].name.clone(),
                    message: format!("non-finite value {cell:?}"),
                });
            }
            values.push(v);
        }
    }

    FeatureMatrix::new(ids, columns, values)
}

fn read_sidecar(features_path: &Path) -> Result<Sidecar> {
    let path = sidecar_path(features_path);
    if !path.exists() {
        return Ok(Sidecar::default());
    }
    let text = fs::read_to_string(&path).map_err(|e| io_err(&path, e))?;
    serde_json::from_str(&text).map_err(|e| schema_err(&path, e.to_string()))
}

fn load_covariates(path: &Path) -> Result<CovariateTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| schema_err(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| schema_err(path, e.to_string()))?
        .clone();
    let expected = ["participant_id", "age", "sex", "site", "tiv", "movement"];
    let actual: Vec<&str> = headers.iter().collect();
    if actual != expected {
        return Err(schema_err(
            path,
            format!("expected header {expected:?}, found {actual:?}"),
        ));
    }

    let mut ids = Vec::new();
    let (mut age, mut sex, mut site, mut tiv, mut movement) =
        (Vec::new(), Vec::new(), Vec::new(), Vec::new(), Vec::new());
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| schema_err(path, e.to_string()))?;
        if record.len() != expected.len() {
            return Err(schema_err(
                path,
                format!("row {} has {} cells, expected {}", row_idx + 1, record.len(), expected.len()),
            ));
        }
        ids.push(record[0].to_string());
        age.push(parse_optional_number(&record[1], row_idx, "age")?);
        sex.push(parse_sex(&record[2], row_idx)?);
        site.push(parse_optional_string(&record[3]));
        tiv.push(parse_optional_number(&record[4], row_idx, "tiv")?);
        movement.push(parse_optional_number(&record[5], row_idx, "movement")?);
    }
    CovariateTable::new(ids, age, sex, site, tiv, movement)
}

fn parse_optional_number(cell: &str, row_idx: usize, column: &str) -> Result<Option<f64>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let v: f64 = cell.parse().map_err(|_| Error::Cell {
        row: row_idx + 1,
        column: column.to_string(),
        message: format!("non-numeric cell {cell:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Cell {
            row: row_idx + 1,
            column: column.to_string(),
            message: format!("non-finite value {cell:?}"),
        });
    }
    Ok(Some(v))
}

fn parse_optional_string(cell: &str) -> Option<String> {
    let cell = cell.trim();
    if cell.is_empty() {
        None
    } else {
        Some(cell.to_string())
    }
}

fn parse_sex(cell: &str, row_idx: usize) -> Result<Option<String>> {
    let cell = cell.trim();
    if cell.is_empty() {
        return Ok(None);
    }
    let upper = cell.to_ascii_uppercase();
    if SEX_LEVELS.contains(&upper.as_str()) {
        Ok(Some(upper))
    } else {
        Err(Error::Cell {
            row: row_idx + 1,
            column: "sex".to_string(),
            message: format!("unknown categorical level {cell:?} (expected one of {SEX_LEVELS:?})"),
        })
    }
}

fn load_labels(path: &Path) -> Result<Vec<(String, u8)>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| schema_err(path, e.to_string()))?;
    let headers = reader
        .headers()
        .map_err(|e| schema_err(path, e.to_string()))?
        .clone();
    let actual: Vec<&str> = headers.iter().collect();
    if actual != ["participant_id", "label"] {
        return Err(schema_err(
            path,
            format!("expected header [participant_id, label], found {actual:?}"),
        ));
    }
    let mut out = Vec::new();
    for (row_idx, record) in reader.records().enumerate() {
        let record = record.map_err(|e| schema_err(path, e.to_string()))?;
        let label: u8 = match record[1].trim() {
            "0" => 0,
            "1" => 1,
            other => {
                return Err(Error::Cell {
                    row: row_idx + 1,
                    column: "label".to_string(),
                    message: format!("label must be 0 or 1, found {other:?}"),
                })
            }
        };
        out.push((record[0].to_string(), label));
    }
    Ok(out)
}

/// Loads and cross-validates the three files of a dataset bundle.
///
/// Participants missing from any file are rejected with an explicit listing,
/// never silently dropped. Rows come out in lexicographic id order.
pub fn load_dataset(
    features_path: &Path,
    covariates_path: &Path,
    labels_path: &Path,
) -> Result<DatasetBundle> {
    let features = load_feature_matrix(features_path)?;
    let covariates = load_covariates(covariates_path)?;
    let labels = load_labels(labels_path)?;

    let feature_ids: HashSet<&str> = features.ids().iter().map(|s| s.as_str()).collect();
    let covariate_ids: HashSet<&str> = covariates.ids().iter().map(|s| s.as_str()).collect();
    let label_ids: HashSet<&str> = labels.iter().map(|(id, _)| id.as_str()).collect();
    if covariate_ids.len() != covariates.ids().len() {
        return Err(schema_err(covariates_path, "duplicate participant id"));
    }
    if label_ids.len() != labels.len() {
        return Err(schema_err(labels_path, "duplicate participant id"));
    }

    let mut missing = Vec::new();
    for (set_name, ids) in [("covariates", &covariate_ids), ("labels", &label_ids)] {
        for id in feature_ids.difference(ids) {
            missing.push(format!("{id} absent from {set_name}"));
        }
        for id in ids.difference(&feature_ids) {
            missing.push(format!("{id} absent from features"));
        }
    }
    if !missing.is_empty() {
        missing.sort();
        return Err(Error::ParticipantMismatch(missing.join("; ")));
    }

    // Canonical ordering: lexicographic by participant id.
    let mut order: Vec<usize> = (0..features.n_rows()).collect();
    order.sort_by(|&a, &b| features.ids()[a].cmp(&features.ids()[b]));
    let features = features.select_rows(&order);

    let cov_index: HashMap<&str, usize> = covariates
        .ids()
        .iter()
        .enumerate()
        .map(|(i, id)| (id.as_str(), i))
        .collect();
    let cov_order: Vec<usize> = features
        .ids()
        .iter()
        .map(|id| cov_index[id.as_str()])
        .collect();
    let covariates = covariates.select_rows(&cov_order);

    let label_map: HashMap<&str, u8> = labels.iter().map(|(id, l)| (id.as_str(), *l)).collect();
    let labels = LabelVector::new(
        features
            .ids()
            .iter()
            .map(|id| label_map[id.as_str()])
            .collect(),
    )?;

    DatasetBundle::new(features, covariates, labels)
}

/// Writes `features.csv` (+ sidecar), `covariates.csv` and `labels.csv`.
pub fn save_dataset(bundle: &DatasetBundle, dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let features_path = dir.join("features.csv");
    save_features(&bundle.features, &features_path)?;
    save_covariates(&bundle.covariates, &dir.join("covariates.csv"))?;
    save_labels(bundle, &dir.join("labels.csv"))?;
    Ok(())
}

/// Writes a standalone feature CSV plus its metadata sidecar.
pub fn save_features(features: &FeatureMatrix, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| schema_err(path, e.to_string()))?;
    let mut header = vec!["participant_id".to_string()];
    header.extend(features.columns().iter().map(|c| c.stem().to_string()));
    writer
        .write_record(&header)
        .map_err(|e| schema_err(path, e.to_string()))?;
    for r in 0..features.n_rows() {
        let mut record = vec![features.ids()[r].clone()];
        record.extend(features.row(r).iter().map(|v| format!("{v}")));
        writer
            .write_record(&record)
            .map_err(|e| schema_err(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| io_err(path, e))?;

    let mut sidecar = Sidecar::default();
    for col in features.columns() {
        sidecar.columns.insert(
            col.stem().to_string(),
            ColumnMeta {
                modality: Some(col.modality),
                band: col.band.clone(),
                region: col.region.clone(),
            },
        );
    }
    let sidecar_file = sidecar_path(path);
    let text = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| schema_err(&sidecar_file, e.to_string()))?;
    fs::write(&sidecar_file, text).map_err(|e| io_err(&sidecar_file, e))?;
    Ok(())
}

fn save_covariates(covariates: &CovariateTable, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| schema_err(path, e.to_string()))?;
    writer
        .write_record(["participant_id", "age", "sex", "site", "tiv", "movement"])
        .map_err(|e| schema_err(path, e.to_string()))?;
    let fmt_num = |v: &Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let fmt_str = |v: &Option<String>| v.clone().unwrap_or_default();
    for i in 0..covariates.n_rows() {
        writer
            .write_record([
                covariates.ids()[i].clone(),
                fmt_num(&covariates.age[i]),
                fmt_str(&covariates.sex[i]),
                fmt_str(&covariates.site[i]),
                fmt_num(&covariates.tiv[i]),
                fmt_num(&covariates.movement[i]),
            ])
            .map_err(|e| schema_err(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}

fn save_labels(bundle: &DatasetBundle, path: &Path) -> Result<()> {
    let mut writer = csv::Writer::from_path(path).map_err(|e| schema_err(path, e.to_string()))?;
    writer
        .write_record(["participant_id", "label"])
        .map_err(|e| schema_err(path, e.to_string()))?;
    for (id, label) in bundle.ids().iter().zip(bundle.labels.as_slice()) {
        writer
            .write_record([id.clone(), label.to_string()])
            .map_err(|e| schema_err(path, e.to_string()))?;
    }
    writer.flush().map_err(|e| io_err(path, e))
}
