//! Monte-Carlo replication of the nested procedure.

use rayon::prelude::*;

use crate::data::DatasetBundle;
use crate::error::{Error, Result};
use crate::seed::derive_seed;

use super::metrics::StatBlock;
use super::nested::{nested_cv_run, RunConfig};

/// One replica's statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaResult {
    /// 1-based replica index.
    pub replica: usize,
    pub crossval: StatBlock,
    pub holdout: StatBlock,
    pub coef_trace: Option<Vec<f64>>,
}

/// All replicas of one condition cell, ordered by replica index.
#[derive(Debug, Clone, PartialEq)]
pub struct RunResultSet {
    pub replicas: Vec<ReplicaResult>,
}

impl RunResultSet {
    pub fn mean_holdout(&self) -> StatBlock {
        let blocks: Vec<StatBlock> = self.replicas.iter().map(|r| r.holdout).collect();
        StatBlock::mean(&blocks)
    }

    pub fn mean_crossval(&self) -> StatBlock {
        let blocks: Vec<StatBlock> = self.replicas.iter().map(|r| r.crossval).collect();
        StatBlock::mean(&blocks)
    }

    /// Per-replica coefficient vectors (GLMNET cells only).
    pub fn coefficient_traces(&self) -> Option<Vec<&[f64]>> {
        self.replicas
            .iter()
            .map(|r| r.coef_trace.as_deref())
            .collect()
    }
}

/// Header of the long-format results CSV.
pub const LONG_CSV_HEADER: &str =
    "config_id,classifier,sensor,correction,localization,replica,split,acc,sens,spec,auc";

/// Long-format rows for one cell: two rows (crossval, holdout) per replica.
pub fn long_csv_rows(config: &RunConfig, results: &RunResultSet) -> Vec<String> {
    let mut rows = Vec::with_capacity(results.replicas.len() * 2);
    let prefix = format!(
        "{},{},{},{},{}",
        config.config_id(),
        config.classifier.kind,
        config.sensor_tag,
        config.correction.tag(),
        config.localization_tag
    );
    for r in &results.replicas {
        for (split, block) in [("crossval", &r.crossval), ("holdout", &r.holdout)] {
            rows.push(format!(
                "{prefix},{},{split},{},{},{},{}",
                r.replica, block.acc, block.sens, block.spec, block.auc
            ));
        }
    }
    rows
}

/// Runs `config.replications` independent replicas, each seeded by
/// `derive_seed(master_seed, replica)`. Replicas run in parallel but the
/// result is ordered by replica index, so output is identical for any
/// worker count.
pub fn monte_carlo_run(config: &RunConfig, data: &DatasetBundle) -> Result<RunResultSet> {
    config.validate()?;
    let replicas: Vec<ReplicaResult> = (1..=config.replications)
        .into_par_iter()
        .map(|replica| {
            let seed = derive_seed(config.master_seed, replica as u64);
            nested_cv_run(config, data, seed)
                .map(|outcome| ReplicaResult {
                    replica,
                    crossval: outcome.crossval,
                    holdout: outcome.holdout,
                    coef_trace: outcome.coef_trace,
                })
                .map_err(|e| Error::Replica {
                    replica,
                    source: Box::new(e),
                })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunResultSet { replicas })
}
