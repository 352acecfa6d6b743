//! Tabular data model: feature matrices, covariates, labels and bundles.

mod combine;
mod io;
mod matrix;

pub use combine::{combine_features, CombinationMode};
pub use io::{load_dataset, load_feature_matrix, save_dataset, save_features, sidecar_path, ColumnMeta, Sidecar};
pub use matrix::{
    CovariateTable, DatasetBundle, FeatureColumn, FeatureMatrix, LabelVector, Modality,
};
