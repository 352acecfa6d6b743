//! Nested K-fold cross-validation under Monte-Carlo replication.

mod folds;
pub mod metrics;
mod monte_carlo;
mod nested;

pub use folds::{partition, FoldPlan};
pub use metrics::{auc, compute_metrics, StatBlock};
pub use monte_carlo::{long_csv_rows, monte_carlo_run, ReplicaResult, RunResultSet, LONG_CSV_HEADER};
pub use nested::{nested_cv_run, Correction, NestedCvOutcome, RunConfig, SelectionConfig};
