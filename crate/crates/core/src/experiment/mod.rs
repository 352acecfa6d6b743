//! Manifest-driven experiment runner: synthetic data, the condition grid,
//! coefficient aggregation and report emission.

mod coeffs;
mod grid;
mod manifest;
mod report;
mod synth;

pub use coeffs::{aggregate_coefficients, CoefficientSummary};
pub use grid::{run_experiment_grid, CellOutcome, GridOptions, GridReport};
pub use manifest::{parse_manifest, CellPlan, ExperimentManifest};
pub use report::{coefficient_svg, emit_report, ReportFormat};
pub use synth::{synth_dataset, write_synth_dataset, SynthSpec, SynthTruth};
