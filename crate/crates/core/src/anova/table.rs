//! Long-format results table feeding the ANOVA.

use std::collections::BTreeSet;
use std::path::Path;

use crate::error::{Error, Result};

/// Rows of (factor levels, response values), column-addressed by name.
#[derive(Debug, Clone, PartialEq)]
pub struct LongTable {
    pub factor_names: Vec<String>,
    pub response_names: Vec<String>,
    /// Per row: one level per factor.
    pub levels: Vec<Vec<String>>,
    /// Per row: one value per response.
    pub responses: Vec<Vec<f64>>,
}

impl LongTable {
    pub fn new(factor_names: &[&str], response_names: &[&str]) -> Self {
        LongTable {
            factor_names: factor_names.iter().map(|s| s.to_string()).collect(),
            response_names: response_names.iter().map(|s| s.to_string()).collect(),
            levels: Vec::new(),
            responses: Vec::new(),
        }
    }

    pub fn push(&mut self, levels: Vec<String>, responses: Vec<f64>) -> Result<()> {
        if levels.len() != self.factor_names.len() || responses.len() != self.response_names.len()
        {
            return Err(Error::Anova("row shape mismatch".into()));
        }
        if let Some(bad) = responses.iter().find(|v| !v.is_finite()) {
            return Err(Error::Anova(format!("non-finite response {bad}")));
        }
        self.levels.push(levels);
        self.responses.push(responses);
        Ok(())
    }

    pub fn n_rows(&self) -> usize {
        self.levels.len()
    }

    pub fn factor_index(&self, name: &str) -> Result<usize> {
        self.factor_names
            .iter()
            .position(|f| f == name)
            .ok_or_else(|| Error::Anova(format!("unknown factor {name:?}")))
    }

    pub fn response_index(&self, name: &str) -> Result<usize> {
        self.response_names
            .iter()
            .position(|r| r == name)
            .ok_or_else(|| Error::Anova(format!("unknown response {name:?}")))
    }

    /// Sorted distinct levels of one factor.
    pub fn factor_levels(&self, factor: usize) -> Vec<String> {
        let set: BTreeSet<&String> = self.levels.iter().map(|row| &row[factor]).collect();
        set.into_iter().cloned().collect()
    }

    pub fn response_column(&self, response: usize) -> Vec<f64> {
        self.responses.iter().map(|r| r[response]).collect()
    }

    /// Reads the pipeline's long-format results CSV
    /// (`config_id,classifier,sensor,correction,localization,replica,split,acc,sens,spec,auc`),
    /// keeping only rows of the requested split.
    pub fn from_results_csv(path: &Path, split: &str) -> Result<LongTable> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(true)
            .from_path(path)
            .map_err(|e| Error::Anova(format!("{}: {e}", path.display())))?;
        let expected = [
            "config_id",
            "classifier",
            "sensor",
            "correction",
            "localization",
            "replica",
            "split",
            "acc",
            "sens",
            "spec",
            "auc",
        ];
        let headers = reader
            .headers()
            .map_err(|e| Error::Anova(e.to_string()))?
            .clone();
        let actual: Vec<&str> = headers.iter().collect();
        if actual != expected {
            return Err(Error::Anova(format!(
                "unexpected results header {actual:?}"
            )));
        }
        let mut table = LongTable::new(
            &["classifier", "sensor", "correction", "localization"],
            &["acc", "sens", "spec", "auc"],
        );
        for record in reader.records() {
            let record = record.map_err(|e| Error::Anova(e.to_string()))?;
            if &record[6] != split {
                continue;
            }
            let levels = vec![
                record[1].to_string(),
                record[2].to_string(),
                record[3].to_string(),
                record[4].to_string(),
            ];
            let responses = (7..11)
                .map(|i| {
                    record[i]
                        .parse::<f64>()
                        .map_err(|_| Error::Anova(format!("bad response value {:?}", &record[i])))
                })
                .collect::<Result<Vec<f64>>>()?;
            table.push(levels, responses)?;
        }
        Ok(table)
    }
}
