//! The three classifiers behind one scoring interface.

mod gnb;
mod glmnet;
mod svm;

pub use glmnet::{
    glmnet_fit_path, glmnet_fit_path_with_grid, glmnet_lambda_max, glmnet_pick_lambda,
    lambda_grid, path_validation_scores, pick_best_index, GlmnetModel, GlmnetSettings,
    LambdaMax, PathPoint, SelectionCriterion,
};
pub use gnb::{gnb_fit, GnbModel};
pub use svm::{ksvm_fit, SvmModel, SvmParams};

use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelVector};
use crate::error::{Error, Result};

/// Classifier selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ClassifierKind {
    #[serde(rename = "GNB")]
    Gnb,
    #[serde(rename = "KSVM")]
    Ksvm,
    #[serde(rename = "GLMNET")]
    Glmnet,
}

impl ClassifierKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            ClassifierKind::Gnb => "GNB",
            ClassifierKind::Ksvm => "KSVM",
            ClassifierKind::Glmnet => "GLMNET",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "GNB" => Ok(ClassifierKind::Gnb),
            "KSVM" => Ok(ClassifierKind::Ksvm),
            "GLMNET" => Ok(ClassifierKind::Glmnet),
            other => Err(Error::Classifier(format!("unknown classifier {other:?}"))),
        }
    }
}

impl std::fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classifier kind plus its hyperparameter search space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierSpec {
    pub kind: ClassifierKind,
    /// RBF kernel width grid for KSVM.
    pub ksvm_gamma_grid: Vec<f64>,
    /// Box constraint grid for KSVM.
    pub ksvm_c_grid: Vec<f64>,
    pub glmnet: GlmnetSettings,
    pub seed: u64,
}

impl ClassifierSpec {
    pub fn new(kind: ClassifierKind) -> Self {
        ClassifierSpec {
            kind,
            ksvm_gamma_grid: log2_grid(-9, 3),
            ksvm_c_grid: log2_grid(-5, 7),
            glmnet: GlmnetSettings::default(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == ClassifierKind::Ksvm
            && (self.ksvm_gamma_grid.is_empty() || self.ksvm_c_grid.is_empty())
        {
            return Err(Error::Classifier("empty KSVM hyperparameter grid".into()));
        }
        self.glmnet.validate()
    }
}

/// Powers of two from `lo` to `hi` inclusive.
pub fn log2_grid(lo: i32, hi: i32) -> Vec<f64> {
    (lo..=hi).map(|e| 2.0f64.powi(e)).collect()
}

/// A fitted model of any kind. Immutable and shareable across workers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Gnb(GnbModel),
    Ksvm(SvmModel),
    Glmnet(GlmnetModel),
}

impl TrainedModel {
    pub fn kind(&self) -> ClassifierKind {
        match self {
            TrainedModel::Gnb(_) => ClassifierKind::Gnb,
            TrainedModel::Ksvm(_) => ClassifierKind::Ksvm,
            TrainedModel::Glmnet(_) => ClassifierKind::Glmnet,
        }
    }

    pub fn feature_names(&self) -> &[String] {
        match self {
            TrainedModel::Gnb(m) => &m.feature_names,
            TrainedModel::Ksvm(m) => &m.feature_names,
            TrainedModel::Glmnet(m) => &m.feature_names,
        }
    }
}

pub(crate) fn logistic(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

fn check_columns(model_features: &[String], data: &FeatureMatrix) -> Result<()> {
    let data_names: Vec<&str> = data.columns().iter().map(|c| c.name.as_str()).collect();
    if data_names.len() != model_features.len()
        || !data_names
            .iter()
            .zip(model_features)
            .all(|(a, b)| *a == b.as_str())
    {
        return Err(Error::Classifier(
            "feature columns do not match training columns (names and order)".into(),
        ));
    }
    Ok(())
}

/// Per-row score in [0, 1]: posterior for GNB, logistic of the linear
/// predictor for GLMNET, logistic of the decision value for KSVM.
/// Threshold 0.5 yields hard labels.
pub fn predict_scores(model: &TrainedModel, features: &FeatureMatrix) -> Result<Vec<f64>> {
    check_columns(model.feature_names(), features)?;
    let scores = match model {
        TrainedModel::Gnb(m) => (0..features.n_rows())
            .map(|r| m.posterior(features.row(r)))
            .collect(),
        TrainedModel::Ksvm(m) => (0..features.n_rows())
            .map(|r| logistic(m.decision_value(features.row(r))))
            .collect(),
        TrainedModel::Glmnet(m) => {
            let point = m.chosen_point();
            (0..features.n_rows())
                .map(|r| {
                    let x = features.row(r);
                    let eta = point.intercept
                        + point
                            .coefficients
                            .iter()
                            .zip(x)
                            .map(|(b, v)| b * v)
                            .sum::<f64>();
                    logistic(eta)
                })
                .collect()
        }
    };
    Ok(scores)
}

pub(crate) fn check_two_classes(labels: &LabelVector) -> Result<()> {
    if !labels.both_classes_present() {
        return Err(Error::Classifier(
            "training labels contain a single class".into(),
        ));
    }
    Ok(())
}
