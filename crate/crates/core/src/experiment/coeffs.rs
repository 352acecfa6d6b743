//! Aggregation of per-replica coefficient vectors into per-feature
//! mean / SD / signed-z summaries and selection frequencies.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// SD floor for the signed z-score.
const SD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientSummary {
    pub feature_names: Vec<String>,
    pub mean: Vec<f64>,
    /// Sample standard deviation across replicas.
    pub sd: Vec<f64>,
    /// Signed z: mean / max(sd, floor). Sign comes from the mean.
    pub z: Vec<f64>,
    /// Fraction of replicas where the coefficient was nonzero.
    pub selection_frequency: Vec<f64>,
    /// True where the SD floor was applied to a nonzero mean.
    pub degenerate_sd: Vec<bool>,
}

impl CoefficientSummary {
    /// Feature indices sorted by |z| descending, ties by index.
    pub fn rank_by_abs_z(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.z.len()).collect();
        order.sort_by(|&a, &b| {
            self.z[b]
                .abs()
                .partial_cmp(&self.z[a].abs())
                .expect("finite z")
                .then(a.cmp(&b))
        });
        order
    }

    pub fn top_by_abs_z(&self, count: usize) -> Vec<usize> {
        self.rank_by_abs_z().into_iter().take(count).collect()
    }
}

/// Aggregates per-replica coefficient vectors (all aligned to the same
/// feature roster).
pub fn aggregate_coefficients(
    feature_names: &[String],
    traces: &[&[f64]],
) -> Result<CoefficientSummary> {
    if traces.len() < 2 {
        return Err(Error::Report(format!(
            "need at least 2 replicas to aggregate, got {}",
            traces.len()
        )));
    }
    let p = feature_names.len();
    if let Some(bad) = traces.iter().find(|t| t.len() != p) {
        return Err(Error::Report(format!(
            "coefficient trace length {} does not match {p} features",
            bad.len()
        )));
    }
    let r = traces.len() as f64;
    let mut mean = vec![0.0f64; p];
    let mut selection = vec![0.0f64; p];
    for trace in traces {
        for (j, &v) in trace.iter().enumerate() {
            mean[j] += v;
            if v != 0.0 {
                selection[j] += 1.0;
            }
        }
    }
    for m in mean.iter_mut() {
        *m /= r;
    }
    for s in selection.iter_mut() {
        *s /= r;
    }
    let mut sd = vec![0.0f64; p];
    for trace in traces {
        for (j, &v) in trace.iter().enumerate() {
            let d = v - mean[j];
            sd[j] += d * d;
        }
    }
    let mut degenerate = vec![false; p];
    let mut z = vec![0.0f64; p];
    for j in 0..p {
        sd[j] = (sd[j] / (r - 1.0)).sqrt();
        let floored = sd[j].max(SD_FLOOR);
        degenerate[j] = sd[j] < SD_FLOOR && mean[j] != 0.0;
        z[j] = mean[j] / floored;
    }
    Ok(CoefficientSummary {
        feature_names: feature_names.to_vec(),
        mean,
        sd,
        z,
        selection_frequency: selection,
        degenerate_sd: degenerate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("f{i}")).collect()
    }

    #[test]
    fn constant_coefficient_hits_the_floor() {
        let traces: Vec<Vec<f64>> = vec![vec![1.0, 0.0]; 5];
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        let s = aggregate_coefficients(&names(2), &refs).unwrap();
        assert_eq!(s.mean[0], 1.0);
        assert_eq!(s.sd[0], 0.0);
        assert_eq!(s.z[0], 1e12);
        assert!(s.degenerate_sd[0]);
        assert_eq!(s.selection_frequency[0], 1.0);
    }

    #[test]
    fn always_zero_coefficient() {
        let traces: Vec<Vec<f64>> = vec![vec![0.0]; 4];
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        let s = aggregate_coefficients(&names(1), &refs).unwrap();
        assert_eq!(s.mean[0], 0.0);
        assert_eq!(s.z[0], 0.0);
        assert_eq!(s.selection_frequency[0], 0.0);
        assert!(!s.degenerate_sd[0]);
    }

    #[test]
    fn ranking_by_abs_z() {
        let traces = [vec![0.1, -2.0, 1.0], vec![0.3, -2.1, 1.2]];
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        let s = aggregate_coefficients(&names(3), &refs).unwrap();
        let top = s.top_by_abs_z(2);
        assert_eq!(top.len(), 2);
        assert_eq!(top[0], 1); // tightest large coefficient
    }

    #[test]
    fn mismatched_trace_length_is_rejected() {
        let traces = [vec![0.1, 0.2], vec![0.1]];
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        assert!(aggregate_coefficients(&names(2), &refs).is_err());
    }

    #[test]
    fn single_replica_is_rejected() {
        let traces = [vec![0.1]];
        let refs: Vec<&[f64]> = traces.iter().map(|t| t.as_slice()).collect();
        assert!(aggregate_coefficients(&names(1), &refs).is_err());
    }
}
