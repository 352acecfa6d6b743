//! The nested K-fold procedure: an outer holdout rotation wrapping an inner
//! cross-validation that selects hyperparameters, with per-fold correction
//! and optional a-priori feature selection fitted on the training side only.

use serde::{Deserialize, Serialize};

use crate::classifier::{
    glmnet_fit_path_with_grid, glmnet_lambda_max, gnb_fit, ksvm_fit, lambda_grid,
    path_validation_scores, pick_best_index, predict_scores, ClassifierKind, ClassifierSpec,
    SelectionCriterion, SvmParams, TrainedModel,
};
use crate::data::{CombinationMode, DatasetBundle};
use crate::error::{Error, Result};
use crate::harmonize::{
    apply_harmonization, apply_plain_zscore, fit_harmonization, fit_plain_zscore,
    HarmonizationConfig,
};
use crate::relieff::{relieff_rank, select_positive, ReliefFConfig};

use super::folds::partition;
use super::metrics::{compute_metrics, StatBlock};

/// Correction mode. `None` still applies the plain per-feature z-score, as
/// the pipeline always standardizes the training side and transfers those
/// parameters to the holdout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Correction {
    None,
    Harmonize(HarmonizationConfig),
}

impl Correction {
    pub fn tag(&self) -> &'static str {
        match self {
            Correction::None => "none",
            Correction::Harmonize(cfg) => match cfg.kind {
                crate::harmonize::HarmonizationKind::Residuals => "residuals",
                crate::harmonize::HarmonizationKind::ZScore => "zscore",
            },
        }
    }
}

/// A-priori ReliefF selection settings (Table 2's ffsel flag).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub enabled: bool,
    /// Neighbor count J.
    pub neighbors: usize,
    /// Optional subsampled instance count L (exhaustive when absent).
    pub sample_count: Option<usize>,
}

impl Default for SelectionConfig {
    fn default() -> Self {
        SelectionConfig {
            enabled: false,
            neighbors: 10,
            sample_count: None,
        }
    }
}

/// Everything one condition cell needs to run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub classifier: ClassifierSpec,
    pub combination: CombinationMode,
    pub correction: Correction,
    pub selection: SelectionConfig,
    /// Opaque condition tags carried through to the results table.
    pub sensor_tag: String,
    pub localization_tag: String,
    pub k: usize,
    pub replications: usize,
    pub master_seed: u64,
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k < 3 {
            return Err(Error::CrossValidation(format!(
                "K must be >= 3 (the inner loop needs K-2 training folds), got {}",
                self.k
            )));
        }
        if self.replications < 1 {
            return Err(Error::CrossValidation("need at least one replication".into()));
        }
        self.classifier.validate()
    }

    pub fn config_id(&self) -> String {
        format!(
            "{}_{}_{}_{}",
            self.classifier.kind,
            self.combination,
            self.correction.tag(),
            self.localization_tag
        )
    }
}

/// One replica's outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedCvOutcome {
    pub crossval: StatBlock,
    pub holdout: StatBlock,
    /// GLMNET only: final refit coefficients aligned to the full feature
    /// roster, averaged over the outer folds.
    pub coef_trace: Option<Vec<f64>>,
}

fn fold_context(k: usize, e: Error) -> Error {
    Error::CrossValidation(format!("outer fold {k}: {e}"))
}

/// Runs the full nested procedure once for a given partition seed.
pub fn nested_cv_run(
    config: &RunConfig,
    data: &DatasetBundle,
    replica_seed: u64,
) -> Result<NestedCvOutcome> {
    config.validate()?;
    let n = data.n();
    let k_folds = config.k;
    let plan = partition(n, k_folds, replica_seed, &data.labels)?;

    let total_features = data.features.n_cols();
    let wants_trace = config.classifier.kind == ClassifierKind::Glmnet;
    let mut coef_sum = vec![0.0f64; total_features];
    let mut crossval_blocks = Vec::with_capacity(k_folds);
    let mut holdout_blocks = Vec::with_capacity(k_folds);

    for k in 0..k_folds {
        let holdout_rows = plan.fold_rows(k);
        let bus_rows = plan.complement_rows(&[k]);
        let bus_raw = data.select_rows(&bus_rows);
        let holdout_raw = data.select_rows(&holdout_rows);

        // Correction is fitted on the training side (bus) only.
        let (bus_x, holdout_x) = match &config.correction {
            Correction::None => {
                let params = fit_plain_zscore(&bus_raw.features).map_err(|e| fold_context(k, e))?;
                (
                    apply_plain_zscore(&bus_raw.features, &params)
                        .map_err(|e| fold_context(k, e))?,
                    apply_plain_zscore(&holdout_raw.features, &params)
                        .map_err(|e| fold_context(k, e))?,
                )
            }
            Correction::Harmonize(cfg) => {
                let model = fit_harmonization(&bus_raw, cfg).map_err(|e| fold_context(k, e))?;
                (
                    apply_harmonization(&bus_raw, &model).map_err(|e| fold_context(k, e))?,
                    apply_harmonization(&holdout_raw, &model).map_err(|e| fold_context(k, e))?,
                )
            }
        };
        let mut bus = bus_raw.with_features(bus_x)?;
        let mut holdout = holdout_raw.with_features(holdout_x)?;

        // A-priori selection on bus only; holdout gets the same columns.
        let mut kept_columns: Vec<usize> = (0..total_features).collect();
        if config.selection.enabled {
            let relieff_cfg = ReliefFConfig {
                neighbors: config.selection.neighbors,
                sample_count: config.selection.sample_count,
                seed: crate::seed::derive_seed(replica_seed, 1000 + k as u64),
                ..ReliefFConfig::default()
            };
            let ranking =
                relieff_rank(&bus.features, &bus.labels, &relieff_cfg).map_err(|e| fold_context(k, e))?;
            let positive = select_positive(&ranking);
            if positive.is_empty() {
                log::warn!(
                    "outer fold {k}: ReliefF selected zero features; falling back to all features"
                );
            } else {
                kept_columns = positive;
                bus = bus.with_features(bus.features.select_columns(&kept_columns))?;
                holdout = holdout.with_features(holdout.features.select_columns(&kept_columns))?;
            }
        }

        // Bus-relative indices per fold for the inner loop.
        let bus_fold_of: Vec<usize> = bus_rows.iter().map(|&r| plan.assignment[r]).collect();
        let inner_folds: Vec<usize> = (0..k_folds).filter(|&l| l != k).collect();

        let model = train_with_inner_selection(config, &bus, &bus_fold_of, &inner_folds)
            .map_err(|e| fold_context(k, e))?;

        let bus_scores = predict_scores(&model, &bus.features).map_err(|e| fold_context(k, e))?;
        let holdout_scores =
            predict_scores(&model, &holdout.features).map_err(|e| fold_context(k, e))?;
        crossval_blocks.push(
            compute_metrics(bus.labels.as_slice(), &bus_scores, 0.5)
                .map_err(|e| fold_context(k, e))?,
        );
        holdout_blocks.push(
            compute_metrics(holdout.labels.as_slice(), &holdout_scores, 0.5)
                .map_err(|e| fold_context(k, e))?,
        );

        if wants_trace {
            if let TrainedModel::Glmnet(m) = &model {
                let point = m.chosen_point();
                for (local, &global) in kept_columns.iter().enumerate() {
                    coef_sum[global] += point.coefficients[local];
                }
            }
        }
    }

    Ok(NestedCvOutcome {
        crossval: StatBlock::mean(&crossval_blocks),
        holdout: StatBlock::mean(&holdout_blocks),
        coef_trace: wants_trace.then(|| {
            coef_sum
                .iter()
                .map(|s| s / k_folds as f64)
                .collect::<Vec<f64>>()
        }),
    })
}

/// Inner loop: for every hyperparameter candidate, train on the folds that
/// are neither the outer holdout nor the validation fold, evaluate on the
/// validation fold, average, then refit on all of bus at the winner.
fn train_with_inner_selection(
    config: &RunConfig,
    bus: &DatasetBundle,
    bus_fold_of: &[usize],
    inner_folds: &[usize],
) -> Result<TrainedModel> {
    let rows_for = |predicate: &dyn Fn(usize) -> bool| -> Vec<usize> {
        (0..bus.n()).filter(|&i| predicate(bus_fold_of[i])).collect()
    };

    match config.classifier.kind {
        ClassifierKind::Gnb => {
            // Hyperparameter-free: the inner stats are computed for shape
            // fidelity but select_best reduces to a plain refit on bus.
            let mut inner_stats = Vec::new();
            for &l in inner_folds {
                let train_rows = rows_for(&|f| f != l);
                let val_rows = rows_for(&|f| f == l);
                let train = bus.select_rows(&train_rows);
                let val = bus.select_rows(&val_rows);
                let model = gnb_fit(&train.features, &train.labels)?;
                let scores = predict_scores(&TrainedModel::Gnb(model), &val.features)?;
                inner_stats.push(compute_metrics(val.labels.as_slice(), &scores, 0.5)?);
            }
            let _ = StatBlock::mean(&inner_stats);
            Ok(TrainedModel::Gnb(gnb_fit(&bus.features, &bus.labels)?))
        }
        ClassifierKind::Ksvm => {
            let mut best: Option<(f64, f64, f64)> = None; // (mean auc, gamma, c)
            for &gamma in &config.classifier.ksvm_gamma_grid {
                for &c in &config.classifier.ksvm_c_grid {
                    let params = SvmParams::new(gamma, c);
                    let mut aucs = Vec::with_capacity(inner_folds.len());
                    for &l in inner_folds {
                        let train_rows = rows_for(&|f| f != l);
                        let val_rows = rows_for(&|f| f == l);
                        let train = bus.select_rows(&train_rows);
                        let val = bus.select_rows(&val_rows);
                        let model = ksvm_fit(&train.features, &train.labels, &params)?;
                        let scores = predict_scores(&TrainedModel::Ksvm(model), &val.features)?;
                        aucs.push(compute_metrics(val.labels.as_slice(), &scores, 0.5)?.auc);
                    }
                    let mean_auc = aucs.iter().sum::<f64>() / aucs.len() as f64;
                    if best.map_or(true, |(b, _, _)| mean_auc > b) {
                        best = Some((mean_auc, gamma, c));
                    }
                }
            }
            let (_, gamma, c) = best.expect("non-empty grid enforced by validate");
            Ok(TrainedModel::Ksvm(ksvm_fit(
                &bus.features,
                &bus.labels,
                &SvmParams::new(gamma, c),
            )?))
        }
        ClassifierKind::Glmnet => {
            let settings = &config.classifier.glmnet;
            // One lambda grid from all of bus keeps the inner paths aligned.
            let standardized = {
                let params = fit_plain_zscore(&bus.features)?;
                apply_plain_zscore(&bus.features, &params)?
            };
            let lm = glmnet_lambda_max(&standardized, &bus.labels, None, settings.alpha)?;
            if lm.degenerate {
                return Err(Error::Classifier("degenerate response: lambda_max = 0".into()));
            }
            let grid = lambda_grid(lm.value, settings.lambda_count, settings.lambda_min_ratio);

            let mut score_sums = vec![0.0f64; grid.len()];
            for &l in inner_folds {
                let train_rows = rows_for(&|f| f != l);
                let val_rows = rows_for(&|f| f == l);
                let train = bus.select_rows(&train_rows);
                let val = bus.select_rows(&val_rows);
                let path = glmnet_fit_path_with_grid(&train.features, &train.labels, settings, &grid)?;
                let scores =
                    path_validation_scores(&path, &val.features, &val.labels, SelectionCriterion::Auc)?;
                for (sum, s) in score_sums.iter_mut().zip(&scores) {
                    *sum += s;
                }
            }
            let chosen = pick_best_index(&score_sums);
            let mut model = glmnet_fit_path_with_grid(&bus.features, &bus.labels, settings, &grid)?;
            model.chosen = chosen;
            Ok(TrainedModel::Glmnet(model))
        }
    }
}
