//! Biomarker-classification pipeline for band-power feature tables.
//!
//! The crate covers the full analysis chain: epoch-level spectral feature
//! extraction, covariate harmonization, ReliefF feature ranking, three
//! classifiers (Gaussian naive Bayes, RBF-kernel SVM, lasso/elastic-net
//! logistic regression with a regularization path), nested K-fold
//! cross-validation under Monte-Carlo replication, and N-way ANOVA with
//! Bonferroni and Tukey-HSD post-hoc contrasts over the replication results.

pub mod anova;
pub mod classifier;
pub mod cv;
pub mod data;
pub mod dsp;
pub mod error;
pub mod experiment;
pub mod harmonize;
pub mod relieff;
pub mod seed;

pub use error::{Error, Result};
