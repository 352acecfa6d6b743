//! Covariate harmonization: multivariate polynomial regression of features
//! on nuisance covariates, with residuals or z-score correction, plus the
//! plain per-feature z-score used when harmonization is off.
//!
//! Models are fit on training data only and applied to holdout data without
//! any refitting, so corrected holdout values are a deterministic function
//! of the raw values and the train-fit parameters.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::data::{CovariateTable, DatasetBundle, FeatureMatrix};
use crate::error::{Error, Result};

/// Correction flavor: keep the regression residual, or additionally divide
/// by a covariate-predicted standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum HarmonizationKind {
    #[serde(rename = "residuals")]
    Residuals,
    #[serde(rename = "zscore")]
    ZScore,
}

/// Fit-time options.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonizationConfig {
    pub kind: HarmonizationKind,
    /// Covariate roster, e.g. `["age", "sex", "tiv"]` for MRI features or
    /// `["age", "site", "movement"]` for MEG features.
    pub covariates: Vec<String>,
    /// Polynomial degree for continuous covariates.
    pub degree: usize,
    /// Dummy x continuous interaction terms (degree 1). Off by default:
    /// categorical covariates enter as main effects only.
    pub include_interactions: bool,
}

impl HarmonizationConfig {
    pub fn new(kind: HarmonizationKind, covariates: &[&str], degree: usize) -> Self {
        HarmonizationConfig {
            kind,
            covariates: covariates.iter().map(|s| s.to_string()).collect(),
            degree,
            include_interactions: false,
        }
    }
}

/// How one covariate enters the design.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum CovariateEncoding {
    Continuous { name: String },
    /// Levels observed at fit time, sorted; the first is the dropped
    /// reference level.
    Categorical { name: String, levels: Vec<String> },
}

/// Trained harmonization transform. Serializable for audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HarmonizationModel {
    pub config: HarmonizationConfig,
    encodings: Vec<CovariateEncoding>,
    pub feature_names: Vec<String>,
    /// Per feature: coefficients over the expanded design (intercept first).
    pub mean_coeffs: Vec<Vec<f64>>,
    /// Per feature: variance-model coefficients (z-score kind only).
    pub var_coeffs: Option<Vec<Vec<f64>>>,
    /// Per feature: lower bound applied to predicted variances.
    pub var_floor: Vec<f64>,
}

/// Column means and sample standard deviations for the plain z-score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlainZscore {
    pub feature_names: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

const STD_FLOOR: f64 = 1e-12;

/// Fits the polynomial regression of every feature on the covariate design.
pub fn fit_harmonization(
    train: &DatasetBundle,
    config: &HarmonizationConfig,
) -> Result<HarmonizationModel> {
    if config.degree < 1 {
        return Err(Error::Harmonize("degree must be >= 1".into()));
    }
    if config.covariates.is_empty() {
        return Err(Error::Harmonize("empty covariate roster".into()));
    }
    let encodings = build_encodings(&train.covariates, config)?;
    let design = build_design(&train.covariates, &encodings, config)?;
    let n = design.nrows();
    let p = design.ncols();
    if n < p {
        return Err(Error::Harmonize(format!(
            "{n} training rows for {p} design columns"
        )));
    }

    let svd = design.clone().svd(true, true);
    let max_sv = svd.singular_values.max();
    if max_sv <= 0.0 || svd.singular_values.iter().any(|&s| s < max_sv * 1e-10) {
        return Err(Error::Harmonize(
            "rank-deficient covariate design (collinear or constant terms)".into(),
        ));
    }

    let m = train.features.n_cols();
    let mut targets = DMatrix::zeros(n, m);
    for r in 0..n {
        for c in 0..m {
            targets[(r, c)] = train.features.get(r, c);
        }
    }
    let coeffs = svd
        .solve(&targets, 0.0)
        .map_err(|e| Error::Harmonize(format!("least-squares solve failed: {e}")))?;

    let residuals = &targets - &design * &coeffs;

    let (var_coeffs, var_floor) = if config.kind == HarmonizationKind::ZScore {
        let mut sq = residuals.clone();
        sq.apply(|v| *v *= *v);
        let vc = svd
            .solve(&sq, 0.0)
            .map_err(|e| Error::Harmonize(format!("variance fit failed: {e}")))?;
        let floors: Vec<f64> = (0..m)
            .map(|c| {
                let global_var = sq.column(c).sum() / n as f64;
                (0.05 * global_var).max(STD_FLOOR)
            })
            .collect();
        let cols: Vec<Vec<f64>> = (0..m).map(|c| vc.column(c).iter().copied().collect()).collect();
        (Some(cols), floors)
    } else {
        (None, vec![STD_FLOOR; m])
    };

    let mean_coeffs: Vec<Vec<f64>> = (0..m)
        .map(|c| coeffs.column(c).iter().copied().collect())
        .collect();

    Ok(HarmonizationModel {
        config: config.clone(),
        encodings,
        feature_names: train
            .features
            .columns()
            .iter()
            .map(|c| c.name.clone())
            .collect(),
        mean_coeffs,
        var_coeffs,
        var_floor,
    })
}

/// Applies a fitted model to new data. Never refits: only the stored
/// coefficients and the incoming raw values enter the result.
pub fn apply_harmonization(
    data: &DatasetBundle,
    model: &HarmonizationModel,
) -> Result<FeatureMatrix> {
    let col_indices: Vec<usize> = model
        .feature_names
        .iter()
        .map(|name| {
            data.features
                .column_index(name)
                .ok_or_else(|| Error::Harmonize(format!("feature {name:?} missing from data")))
        })
        .collect::<Result<_>>()?;
    let design = build_design(&data.covariates, &model.encodings, &model.config)?;
    let n = data.n();

    let selected = data.features.select_columns(&col_indices);
    let mut values = Vec::with_capacity(n * col_indices.len());
    for r in 0..n {
        let design_row: Vec<f64> = (0..design.ncols()).map(|c| design[(r, c)]).collect();
        for (out_c, _) in col_indices.iter().enumerate() {
            let raw = selected.get(r, out_c);
            let predicted: f64 = model.mean_coeffs[out_c]
                .iter()
                .zip(&design_row)
                .map(|(b, x)| b * x)
                .sum();
            let residual = raw - predicted;
            let corrected = match model.config.kind {
                HarmonizationKind::Residuals => residual,
                HarmonizationKind::ZScore => {
                    let var_model = model.var_coeffs.as_ref().expect("zscore kind has var model");
                    let predicted_var: f64 = var_model[out_c]
                        .iter()
                        .zip(&design_row)
                        .map(|(b, x)| b * x)
                        .sum();
                    residual / predicted_var.max(model.var_floor[out_c]).sqrt()
                }
            };
            values.push(corrected);
        }
    }
    selected.with_values(values)
}

/// Column means and sample standard deviations (n-1), std floored so
/// constant columns map to zero instead of aborting.
pub fn fit_plain_zscore(train: &FeatureMatrix) -> Result<PlainZscore> {
    let n = train.n_rows();
    if n < 2 {
        return Err(Error::Harmonize("plain z-score needs >= 2 rows".into()));
    }
    let mut means = Vec::with_capacity(train.n_cols());
    let mut stds = Vec::with_capacity(train.n_cols());
    for c in 0..train.n_cols() {
        let mean = train.column_values(c).sum::<f64>() / n as f64;
        let ss: f64 = train.column_values(c).map(|v| (v - mean) * (v - mean)).sum();
        means.push(mean);
        stds.push((ss / (n - 1) as f64).sqrt().max(STD_FLOOR));
    }
    Ok(PlainZscore {
        feature_names: train.columns().iter().map(|c| c.name.clone()).collect(),
        means,
        stds,
    })
}

/// `(x - mean) / std` using fit-time parameters only.
pub fn apply_plain_zscore(data: &FeatureMatrix, params: &PlainZscore) -> Result<FeatureMatrix> {
    let col_indices: Vec<usize> = params
        .feature_names
        .iter()
        .map(|name| {
            data.column_index(name)
                .ok_or_else(|| Error::Harmonize(format!("feature {name:?} missing from data")))
        })
        .collect::<Result<_>>()?;
    let selected = data.select_columns(&col_indices);
    let mut values = Vec::with_capacity(selected.n_rows() * selected.n_cols());
    for r in 0..selected.n_rows() {
        for c in 0..selected.n_cols() {
            values.push((selected.get(r, c) - params.means[c]) / params.stds[c]);
        }
    }
    selected.with_values(values)
}

fn build_encodings(
    covariates: &CovariateTable,
    config: &HarmonizationConfig,
) -> Result<Vec<CovariateEncoding>> {
    config
        .covariates
        .iter()
        .map(|name| {
            if CovariateTable::is_categorical(name) {
                let column = covariates.categorical(name)?;
                let mut levels: Vec<String> = Vec::new();
                for (i, v) in column.iter().enumerate() {
                    match v {
                        Some(level) => {
                            if !levels.contains(level) {
                                levels.push(level.clone());
                            }
                        }
                        None => {
                            return Err(Error::Harmonize(format!(
                                "covariate {name} missing for participant {}",
                                covariates.ids()[i]
                            )))
                        }
                    }
                }
                levels.sort();
                if levels.len() < 2 {
                    return Err(Error::Harmonize(format!(
                        "covariate {name} is constant on the training data"
                    )));
                }
                Ok(CovariateEncoding::Categorical {
                    name: name.clone(),
                    levels,
                })
            } else if CovariateTable::is_known(name) {
                let column = covariates.continuous(name)?;
                for (i, v) in column.iter().enumerate() {
                    if v.is_none() {
                        return Err(Error::Harmonize(format!(
                            "covariate {name} missing for participant {}",
                            covariates.ids()[i]
                        )));
                    }
                }
                let first = column[0].unwrap();
                if column.iter().all(|v| v.unwrap() == first) {
                    return Err(Error::Harmonize(format!(
                        "covariate {name} is constant on the training data"
                    )));
                }
                Ok(CovariateEncoding::Continuous { name: name.clone() })
            } else {
                Err(Error::Harmonize(format!("unknown covariate {name:?}")))
            }
        })
        .collect()
}

/// Expands covariates into the design matrix: intercept, monomials of each
/// continuous covariate up to `degree`, one-hot categorical terms (reference
/// level dropped) and, when enabled, dummy x continuous interactions.
fn build_design(
    covariates: &CovariateTable,
    encodings: &[CovariateEncoding],
    config: &HarmonizationConfig,
) -> Result<DMatrix<f64>> {
    let n = covariates.n_rows();
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];

    let mut continuous_cols: Vec<Vec<f64>> = Vec::new();
    let mut dummy_cols: Vec<Vec<f64>> = Vec::new();

    for enc in encodings {
        match enc {
            CovariateEncoding::Continuous { name } => {
                let raw = covariates.continuous(name)?;
                let base: Vec<f64> = raw
                    .iter()
                    .enumerate()
                    .map(|(i, v)| {
                        v.ok_or_else(|| Error::Harmonize(format!(
                            "covariate {name} missing for participant {}",
                            covariates.ids()[i]
                        )))
                    })
                    .collect::<Result<_>>()?;
                for d in 1..=config.degree {
                    columns.push(base.iter().map(|v| v.powi(d as i32)).collect());
                }
                continuous_cols.push(base);
            }
            CovariateEncoding::Categorical { name, levels } => {
                let raw = covariates.categorical(name)?;
                let assigned: Vec<usize> = raw
                    .iter()
                    .enumerate()
                    .map(|(i, v)| match v {
                        Some(level) => levels.iter().position(|l| l == level).ok_or_else(|| {
                            Error::UnseenLevel {
                                covariate: name.clone(),
                                level: level.clone(),
                            }
                        }),
                        None => Err(Error::Harmonize(format!(
                            "covariate {name} missing for participant {}",
                            covariates.ids()[i]
                        ))),
                    })
                    .collect::<Result<_>>()?;
                for li in 1..levels.len() {
                    let dummy: Vec<f64> = assigned
                        .iter()
                        .map(|&a| if a == li { 1.0 } else { 0.0 })
                        .collect();
                    columns.push(dummy.clone());
                    dummy_cols.push(dummy);
                }
            }
        }
    }

    if config.include_interactions {
        for dummy in &dummy_cols {
            for cont in &continuous_cols {
                columns.push(dummy.iter().zip(cont).map(|(d, x)| d * x).collect());
            }
        }
    }

    let p = columns.len();
    let mut design = DMatrix::zeros(n, p);
    for (c, col) in columns.iter().enumerate() {
        for (r, &v) in col.iter().enumerate() {
            design[(r, c)] = v;
        }
    }
    Ok(design)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{FeatureColumn, LabelVector, Modality};

    fn covariates(ids: &[String], ages: &[f64], sites: &[&str]) -> CovariateTable {
        CovariateTable::new(
            ids.to_vec(),
            ages.iter().map(|&a| Some(a)).collect(),
            vec![None; ids.len()],
            sites.iter().map(|s| Some(s.to_string())).collect(),
            vec![None; ids.len()],
            vec![None; ids.len()],
        )
        .unwrap()
    }

    fn bundle(features: Vec<(String, Vec<f64>)>, ages: &[f64], sites: &[&str]) -> DatasetBundle {
        let n = ages.len();
        let ids: Vec<String> = (0..n).map(|i| format!("p{i:02}")).collect();
        let columns: Vec<FeatureColumn> = features
            .iter()
            .map(|(name, _)| FeatureColumn::new(name, Modality::Other))
            .collect();
        let mut values = Vec::new();
        for r in 0..n {
            for (_, col) in &features {
                values.push(col[r]);
            }
        }
        let fm = FeatureMatrix::new(ids.clone(), columns, values).unwrap();
        let labels = LabelVector::new((0..n).map(|i| (i % 2) as u8).collect()).unwrap();
        DatasetBundle::new(fm, covariates(&ids, ages, sites), labels).unwrap()
    }

    #[test]
    fn exact_linear_feature_leaves_zero_residuals() {
        let ages = [60.0, 65.0, 70.0, 75.0, 80.0, 72.0];
        let feature: Vec<f64> = ages.iter().map(|a| 2.0 * a).collect();
        let sites = ["1"; 6];
        let b = bundle(vec![("f".into(), feature)], &ages, &sites);
        let config = HarmonizationConfig::new(HarmonizationKind::Residuals, &["age"], 1);
        let model = fit_harmonization(&b, &config).unwrap();
        let corrected = apply_harmonization(&b, &model).unwrap();
        for v in corrected.values() {
            assert!(v.abs() < 1e-9, "residual {v}");
        }
    }

    #[test]
    fn independent_feature_matches_normal_equations_oracle() {
        // 10-row instance: fit y on [1, age] by hand via the normal equations
        // and compare slope/intercept and residuals.
        let ages = [61.0, 62.0, 64.0, 65.0, 67.0, 70.0, 71.0, 74.0, 76.0, 79.0];
        let y = [0.3, -0.52, 0.11, 0.9, -0.34, 0.72, -0.15, 0.4, -0.8, 0.05];
        let sites = ["1"; 10];
        let b = bundle(vec![("f".into(), y.to_vec())], &ages, &sites);
        let config = HarmonizationConfig::new(HarmonizationKind::Residuals, &["age"], 1);
        let model = fit_harmonization(&b, &config).unwrap();

        let n = ages.len() as f64;
        let sx: f64 = ages.iter().sum();
        let sy: f64 = y.iter().sum();
        let sxx: f64 = ages.iter().map(|a| a * a).sum();
        let sxy: f64 = ages.iter().zip(&y).map(|(a, v)| a * v).sum();
        let slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        let intercept = (sy - slope * sx) / n;

        assert!((model.mean_coeffs[0][0] - intercept).abs() < 1e-9);
        assert!((model.mean_coeffs[0][1] - slope).abs() < 1e-9);
        // Slope of a covariate-independent feature is near zero.
        assert!(slope.abs() < 0.05);

        let corrected = apply_harmonization(&b, &model).unwrap();
        for (i, v) in corrected.column_values(0).enumerate() {
            let expected = y[i] - intercept - slope * ages[i];
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn training_residuals_are_orthogonal_to_design() {
        let ages = [61.0, 66.0, 64.5, 70.0, 67.2, 72.8, 71.0, 74.4, 77.0, 79.9, 63.3, 68.8];
        let sites = ["1", "2", "1", "2", "1", "2", "1", "2", "1", "2", "1", "2"];
        let y: Vec<f64> = ages
            .iter()
            .zip(&sites)
            .enumerate()
            .map(|(i, (a, s))| 0.4 * a + if *s == "2" { 1.5 } else { 0.0 } + (i as f64 * 0.37).sin())
            .collect();
        let b = bundle(vec![("f".into(), y)], &ages, &sites);
        let config = HarmonizationConfig::new(HarmonizationKind::Residuals, &["age", "site"], 2);
        let model = fit_harmonization(&b, &config).unwrap();
        let corrected = apply_harmonization(&b, &model).unwrap();
        let residuals: Vec<f64> = corrected.column_values(0).collect();

        let encodings = build_encodings(&b.covariates, &config).unwrap();
        let design = build_design(&b.covariates, &encodings, &config).unwrap();
        let r_norm: f64 = residuals.iter().map(|v| v * v).sum::<f64>().sqrt();
        for c in 0..design.ncols() {
            let col: Vec<f64> = (0..design.nrows()).map(|r| design[(r, c)]).collect();
            let dot: f64 = col.iter().zip(&residuals).map(|(x, r)| x * r).sum();
            let x_norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(
                dot.abs() <= 1e-8 * x_norm * r_norm.max(1e-30),
                "column {c} not orthogonal: {dot}"
            );
        }
    }

    #[test]
    fn zscore_kind_is_scaled_residuals_with_matching_signs() {
        let ages = [61.0, 66.0, 64.5, 70.0, 67.2, 72.8, 71.0, 74.4, 77.0, 79.9];
        let sites = ["1"; 10];
        let y: Vec<f64> = ages.iter().enumerate().map(|(i, a)| a * 0.1 + (i as f64).sin()).collect();
        let b = bundle(vec![("f".into(), y)], &ages, &sites);
        let res_model = fit_harmonization(
            &b,
            &HarmonizationConfig::new(HarmonizationKind::Residuals, &["age"], 2),
        )
        .unwrap();
        let z_model = fit_harmonization(
            &b,
            &HarmonizationConfig::new(HarmonizationKind::ZScore, &["age"], 2),
        )
        .unwrap();
        let res = apply_harmonization(&b, &res_model).unwrap();
        let z = apply_harmonization(&b, &z_model).unwrap();
        let mut mean_z = 0.0;
        for (r, zv) in res.column_values(0).zip(z.column_values(0)) {
            let scale = r / zv;
            assert!(zv == 0.0 && r == 0.0 || scale > 0.0, "sign flip: {r} vs {zv}");
            mean_z += zv;
        }
        mean_z /= 10.0;
        // Residuals sum to zero exactly; dividing by a row-varying predicted
        // sigma perturbs the mean slightly, so "about zero" not "zero".
        assert!(mean_z.abs() < 0.05, "z-corrected train mean {mean_z}");
    }

    #[test]
    fn unseen_site_level_is_rejected_by_name() {
        let ages = [61.0, 66.0, 64.5, 70.0, 67.2, 72.8];
        let sites = ["1", "2", "1", "2", "1", "2"];
        let y = vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0];
        let b = bundle(vec![("f".into(), y)], &ages, &sites);
        let config = HarmonizationConfig::new(HarmonizationKind::Residuals, &["age", "site"], 1);
        let model = fit_harmonization(&b, &config).unwrap();

        let holdout = bundle(
            vec![("f".into(), vec![1.0, 2.0])],
            &[65.0, 70.0],
            &["1", "3"],
        );
        let err = apply_harmonization(&holdout, &model).unwrap_err();
        match err {
            Error::UnseenLevel { covariate, level } => {
                assert_eq!(covariate, "site");
                assert_eq!(level, "3");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn rank_deficient_design_is_rejected() {
        // age and movement identical -> collinear design.
        let ages = [61.0, 66.0, 64.5, 70.0, 67.2, 72.8];
        let ids: Vec<String> = (0..6).map(|i| format!("p{i}")).collect();
        let cov = CovariateTable::new(
            ids.clone(),
            ages.iter().map(|&a| Some(a)).collect(),
            vec![None; 6],
            vec![None; 6],
            vec![None; 6],
            ages.iter().map(|&a| Some(a)).collect(),
        )
        .unwrap();
        let fm = FeatureMatrix::new(
            ids,
            vec![FeatureColumn::new("f", Modality::Other)],
            vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0],
        )
        .unwrap();
        let b = DatasetBundle::new(fm, cov, LabelVector::new(vec![0, 1, 0, 1, 0, 1]).unwrap()).unwrap();
        let config = HarmonizationConfig::new(HarmonizationKind::Residuals, &["age", "movement"], 1);
        let err = fit_harmonization(&b, &config).unwrap_err();
        assert!(err.to_string().contains("rank-deficient"));
    }

    #[test]
    fn plain_zscore_hand_values() {
        let fm = FeatureMatrix::new(
            vec!["a".into(), "b".into()],
            vec![FeatureColumn::new("f", Modality::Other)],
            vec![1.0, 3.0],
        )
        .unwrap();
        let p = fit_plain_zscore(&fm).unwrap();
        assert_eq!(p.means[0], 2.0);
        assert!((p.stds[0] - 2.0f64.sqrt()).abs() < 1e-12);

        let z = apply_plain_zscore(&fm, &p).unwrap();
        let vals: Vec<f64> = z.column_values(0).collect();
        assert!((vals[0] + 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
        assert!((vals[1] - 1.0 / 2.0f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn plain_zscore_constant_column_maps_to_zero() {
        let fm = FeatureMatrix::new(
            vec!["a".into(), "b".into(), "c".into()],
            vec![FeatureColumn::new("f", Modality::Other)],
            vec![5.0, 5.0, 5.0],
        )
        .unwrap();
        let p = fit_plain_zscore(&fm).unwrap();
        assert_eq!(p.stds[0], STD_FLOOR);
        let z = apply_plain_zscore(&fm, &p).unwrap();
        assert!(z.values().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn plain_zscore_applied_to_itself_standardizes() {
        let vals: Vec<f64> = (0..12).map(|i| (i as f64 * 1.7).cos() * 3.0 + 1.0).collect();
        let fm = FeatureMatrix::new(
            (0..12).map(|i| format!("p{i}")).collect(),
            vec![FeatureColumn::new("f", Modality::Other)],
            vals,
        )
        .unwrap();
        let p = fit_plain_zscore(&fm).unwrap();
        let z = apply_plain_zscore(&fm, &p).unwrap();
        let n = 12.0;
        let mean: f64 = z.column_values(0).sum::<f64>() / n;
        let var: f64 = z.column_values(0).map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
        assert!(mean.abs() < 1e-12);
        assert!((var.sqrt() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn holdout_transform_reuses_train_parameters() {
        // Affine shift between train and holdout distributions: the holdout
        // z-scores must follow the train-parameter formula, not re-center.
        let train_vals = vec![1.0, 2.0, 3.0, 4.0];
        let holdout_vals = vec![11.0, 12.0];
        let train = FeatureMatrix::new(
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![FeatureColumn::new("f", Modality::Other)],
            train_vals,
        )
        .unwrap();
        let holdout = FeatureMatrix::new(
            vec!["x".into(), "y".into()],
            vec![FeatureColumn::new("f", Modality::Other)],
            holdout_vals.clone(),
        )
        .unwrap();
        let p = fit_plain_zscore(&train).unwrap();
        let before = serde_json::to_string(&p).unwrap();
        let z = apply_plain_zscore(&holdout, &p).unwrap();
        assert_eq!(serde_json::to_string(&p).unwrap(), before);
        for (v, raw) in z.column_values(0).zip(&holdout_vals) {
            let expected = (raw - p.means[0]) / p.stds[0];
            assert_eq!(v, expected);
        }
        // Holdout mean is far from zero: no refit happened.
        let mean: f64 = z.column_values(0).sum::<f64>() / 2.0;
        assert!(mean > 5.0);
    }
}
