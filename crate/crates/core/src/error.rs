//! Error type shared across the pipeline.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("schema error in {path}: {message}")]
    Schema { path: String, message: String },

    #[error("validation error: {0}")]
    Validation(String),

    #[error("data error at row {row}, column {column}: {message}")]
    Cell {
        row: usize,
        column: String,
        message: String,
    },

    #[error("participant sets differ: {0}")]
    ParticipantMismatch(String),

    #[error("filter design error: {0}")]
    FilterDesign(String),

    #[error("signal error: {0}")]
    Signal(String),

    #[error("degenerate spectrum: total power in the analysis range is zero")]
    DegenerateSpectrum,

    #[error("harmonization error: {0}")]
    Harmonize(String),

    #[error("covariate level unseen at fit time: {covariate}={level}")]
    UnseenLevel { covariate: String, level: String },

    #[error("feature ranking error: {0}")]
    Ranking(String),

    #[error("classifier error: {0}")]
    Classifier(String),

    #[error("solver did not converge: {0}")]
    NonConvergence(String),

    #[error("cross-validation error: {0}")]
    CrossValidation(String),

    #[error("replica {replica} failed: {source}")]
    Replica {
        replica: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("ANOVA error: {0}")]
    Anova(String),

    #[error("manifest error: {0}")]
    Manifest(String),

    #[error("experiment cell {cell} failed: {source}")]
    GridCell {
        cell: String,
        #[source]
        source: Box<Error>,
    },

    #[error("report error: {0}")]
    Report(String),
}

pub type Result<T> = std::result::Result<T, Error>;
