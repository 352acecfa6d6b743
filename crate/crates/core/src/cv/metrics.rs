//! Classification performance statistics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The four reported statistics, each in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatBlock {
    pub acc: f64,
    pub sens: f64,
    pub spec: f64,
    pub auc: f64,
}

impl StatBlock {
    /// Unweighted mean across blocks.
    pub fn mean(blocks: &[StatBlock]) -> StatBlock {
        let n = blocks.len() as f64;
        let sum = |f: fn(&StatBlock) -> f64| blocks.iter().map(f).sum::<f64>() / n;
        StatBlock {
            acc: sum(|b| b.acc),
            sens: sum(|b| b.sens),
            spec: sum(|b| b.spec),
            auc: sum(|b| b.auc),
        }
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        match name {
            "acc" => Some(self.acc),
            "sens" => Some(self.sens),
            "spec" => Some(self.spec),
            "auc" => Some(self.auc),
            _ => None,
        }
    }
}

/// Rank-based AUC (Mann-Whitney) with half-credit for score ties.
///
/// Computed via midranks; all intermediate quantities are multiples of 0.5
/// well below 2^53, so the result equals the pair-counting statistic
/// bit-for-bit.
pub fn auc(labels: &[u8], scores: &[f64]) -> f64 {
    let n = labels.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).expect("finite scores"));

    let mut positive_rank_sum = 0.0f64;
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = n - n_pos;

    let mut i = 0;
    while i < n {
        let mut j = i;
        while j + 1 < n && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // 1-based ranks i+1 ..= j+1 share the midrank.
        let midrank = (i + 1 + j + 1) as f64 / 2.0;
        for &idx in &order[i..=j] {
            if labels[idx] == 1 {
                positive_rank_sum += midrank;
            }
        }
        i = j + 1;
    }

    let u = positive_rank_sum - (n_pos * (n_pos + 1)) as f64 / 2.0;
    u / (n_pos as f64 * n_neg as f64)
}

/// Confusion-matrix statistics plus AUC. The positive class is 1 (MCI);
/// a score at or above the threshold predicts positive.
pub fn compute_metrics(labels: &[u8], scores: &[f64], threshold: f64) -> Result<StatBlock> {
    if labels.len() != scores.len() {
        return Err(Error::CrossValidation(format!(
            "{} labels but {} scores",
            labels.len(),
            scores.len()
        )));
    }
    if let Some(bad) = scores.iter().find(|s| !s.is_finite()) {
        return Err(Error::CrossValidation(format!("non-finite score {bad}")));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::CrossValidation(
            "label vector contains a single class".into(),
        ));
    }

    let (mut tp, mut tn, mut fp, mut fne) = (0usize, 0usize, 0usize, 0usize);
    for (&label, &score) in labels.iter().zip(scores) {
        let predicted = score >= threshold;
        match (label, predicted) {
            (1, true) => tp += 1,
            (1, false) => fne += 1,
            (0, false) => tn += 1,
            (0, true) => fp += 1,
            _ => unreachable!("labels validated to 0/1"),
        }
    }

    Ok(StatBlock {
        acc: (tp + tn) as f64 / labels.len() as f64,
        sens: tp as f64 / (tp + fne) as f64,
        spec: tn as f64 / (tn + fp) as f64,
        auc: auc(labels, scores),
    })
}
