//! N-way fixed-effects ANOVA over Monte-Carlo replication outcomes, with
//! Bonferroni and Tukey-HSD pairwise contrasts.

mod nway;
mod posthoc;
mod srange;
mod table;

pub use nway::{nway_anova, AnovaEffect, AnovaTable};
pub use posthoc::{bonferroni_pairwise, tukey_hsd, ContrastMethod, PairwiseContrast};
pub use srange::{studentized_range_cdf, studentized_range_critical};
pub use table::LongTable;

/// p-values below this floor are printed as "<1e-12" in reports.
pub const P_VALUE_FLOOR: f64 = 1e-12;

/// Report formatting for p-values.
pub fn format_p(p: f64) -> String {
    if p < P_VALUE_FLOOR {
        "<1e-12".to_string()
    } else {
        format!("{p}")
    }
}
