//! Gaussian naive Bayes.

use serde::{Deserialize, Serialize};

use crate::data::{FeatureMatrix, LabelVector};
use crate::error::Result;

use super::{check_two_classes, logistic};

/// Per-class feature means/variances and class priors. Variances follow the
/// population convention (divide by n), so duplicating every training row
/// leaves the model unchanged.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GnbModel {
    pub feature_names: Vec<String>,
    /// `[class0, class1]`, each of feature length.
    pub means: [Vec<f64>; 2],
    pub variances: [Vec<f64>; 2],
    pub log_priors: [f64; 2],
}

/// Fits class-conditional Gaussians. Class variances are floored at
/// 1e-9 x the global feature variance so degenerate columns cannot produce
/// infinite densities.
pub fn gnb_fit(features: &FeatureMatrix, labels: &LabelVector) -> Result<GnbModel> {
    check_two_classes(labels)?;
    let n = features.n_rows();
    let m = features.n_cols();

    let mut class_rows: [Vec<usize>; 2] = [Vec::new(), Vec::new()];
    for (i, &l) in labels.as_slice().iter().enumerate() {
        class_rows[l as usize].push(i);
    }

    let mut means = [vec![0.0; m], vec![0.0; m]];
    let mut variances = [vec![0.0; m], vec![0.0; m]];
    for c in 0..m {
        // Global population variance drives the per-class floor.
        let global_mean = features.column_values(c).sum::<f64>() / n as f64;
        let global_var = features
            .column_values(c)
            .map(|v| (v - global_mean) * (v - global_mean))
            .sum::<f64>()
            / n as f64;
        let floor = (1e-9 * global_var).max(1e-12);

        for class in 0..2 {
            let rows = &class_rows[class];
            let nc = rows.len() as f64;
            let mean = rows.iter().map(|&r| features.get(r, c)).sum::<f64>() / nc;
            let var = rows
                .iter()
                .map(|&r| {
                    let d = features.get(r, c) - mean;
                    d * d
                })
                .sum::<f64>()
                / nc;
            means[class][c] = mean;
            variances[class][c] = var.max(floor);
        }
    }

    let n0 = class_rows[0].len() as f64;
    let n1 = class_rows[1].len() as f64;
    Ok(GnbModel {
        feature_names: features.columns().iter().map(|c| c.name.clone()).collect(),
        means,
        variances,
        log_priors: [(n0 / n as f64).ln(), (n1 / n as f64).ln()],
    })
}

impl GnbModel {
    /// Posterior probability of class 1.
    pub fn posterior(&self, row: &[f64]) -> f64 {
        let log_lik = |class: usize| -> f64 {
            self.log_priors[class]
                + row
                    .iter()
                    .enumerate()
                    .map(|(j, &x)| {
                        let var = self.variances[class][j];
                        let d = x - self.means[class][j];
                        -0.5 * (var.ln() + d * d / var)
                    })
                    .sum::<f64>()
        };
        logistic(log_lik(1) - log_lik(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{predict_scores, TrainedModel};
    use crate::data::{FeatureColumn, Modality};
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;
    use rand_distr::{Distribution, Normal};

    fn matrix(values: &[f64], n_cols: usize) -> FeatureMatrix {
        let n = values.len() / n_cols;
        let ids: Vec<String> = (0..n).map(|i| format!("p{i:05}")).collect();
        let columns: Vec<_> = (0..n_cols)
            .map(|i| FeatureColumn::new(&format!("f{i}"), Modality::Other))
            .collect();
        FeatureMatrix::new(ids, columns, values.to_vec()).unwrap()
    }

    #[test]
    fn equal_variance_midpoint_scores_half() {
        // Class 0 fitted mean 0, class 1 fitted mean 2, equal variances and
        // priors: the decision boundary is x = 1.
        let x = matrix(&[-1.0, 1.0, 1.0, 3.0], 1);
        let y = LabelVector::new(vec![0, 0, 1, 1]).unwrap();
        let model = gnb_fit(&x, &y).unwrap();
        assert_eq!(model.means[0][0], 0.0);
        assert_eq!(model.means[1][0], 2.0);
        assert!((model.posterior(&[1.0]) - 0.5).abs() < 1e-9);
        assert!(model.posterior(&[0.5]) < 0.5);
        assert!(model.posterior(&[1.5]) > 0.5);
    }

    #[test]
    fn duplicating_rows_leaves_model_unchanged() {
        let x = matrix(&[0.0, 0.4, 1.7, 2.2, 1.1, 0.3], 1);
        let y = LabelVector::new(vec![0, 0, 1, 1, 1, 0]).unwrap();
        let model = gnb_fit(&x, &y).unwrap();

        let doubled_values: Vec<f64> = x
            .values()
            .iter()
            .chain(x.values().iter())
            .copied()
            .collect();
        let x2 = matrix(&doubled_values, 1);
        let mut y2: Vec<u8> = y.as_slice().to_vec();
        y2.extend_from_slice(y.as_slice());
        let model2 = gnb_fit(&x2, &LabelVector::new(y2).unwrap()).unwrap();

        // Same sufficient statistics; summation length differs, so compare
        // to rounding error rather than bitwise.
        for class in 0..2 {
            assert!((model.means[class][0] - model2.means[class][0]).abs() < 1e-12);
            assert!((model.variances[class][0] - model2.variances[class][0]).abs() < 1e-12);
            assert!((model.log_priors[class] - model2.log_priors[class]).abs() < 1e-12);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = matrix(&[0.0, 1.0], 1);
        let y = LabelVector::new(vec![0, 0]).unwrap();
        assert!(gnb_fit(&x, &y).is_err());
    }

    #[test]
    fn accuracy_approaches_the_bayes_rate() {
        // N(0,1) vs N(2,1): the Bayes accuracy is Phi(1) ~ 0.8413.
        let mut rng = ChaCha12Rng::seed_from_u64(21);
        let n_per_class = 10_000;
        let gen = |mean: f64, rng: &mut ChaCha12Rng| -> Vec<f64> {
            let d = Normal::new(mean, 1.0).unwrap();
            (0..n_per_class).map(|_| d.sample(rng)).collect()
        };
        let mut train: Vec<f64> = gen(0.0, &mut rng);
        train.extend(gen(2.0, &mut rng));
        let labels: Vec<u8> = (0..2 * n_per_class)
            .map(|i| (i >= n_per_class) as u8)
            .collect();
        let model = gnb_fit(&matrix(&train, 1), &LabelVector::new(labels.clone()).unwrap()).unwrap();

        let mut test: Vec<f64> = gen(0.0, &mut rng);
        test.extend(gen(2.0, &mut rng));
        let scores = predict_scores(&TrainedModel::Gnb(model), &matrix(&test, 1)).unwrap();
        let correct = scores
            .iter()
            .zip(&labels)
            .filter(|(s, &l)| (**s >= 0.5) == (l == 1))
            .count();
        let acc = correct as f64 / labels.len() as f64;
        assert!((acc - 0.8413).abs() < 0.01, "accuracy {acc}");
    }

    #[test]
    fn zscoring_features_keeps_hard_labels() {
        // Class-conditional standardization commutes with the boundary:
        // argmax is invariant even though scores change.
        let mut rng = ChaCha12Rng::seed_from_u64(33);
        let d0 = Normal::new(0.0, 1.0).unwrap();
        let d1 = Normal::new(1.0, 2.0).unwrap();
        let n = 60;
        let mut values = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let label = (i % 2) as u8;
            for _ in 0..2 {
                values.push(if label == 0 {
                    d0.sample(&mut rng)
                } else {
                    d1.sample(&mut rng)
                });
            }
            labels.push(label);
        }
        let x = matrix(&values, 2);
        let y = LabelVector::new(labels).unwrap();
        let raw = gnb_fit(&x, &y).unwrap();

        let params = crate::harmonize::fit_plain_zscore(&x).unwrap();
        let xz = crate::harmonize::apply_plain_zscore(&x, &params).unwrap();
        let zed = gnb_fit(&xz, &y).unwrap();

        let raw_scores = predict_scores(&TrainedModel::Gnb(raw), &x).unwrap();
        let z_scores = predict_scores(&TrainedModel::Gnb(zed), &xz).unwrap();
        for (a, b) in raw_scores.iter().zip(&z_scores) {
            assert_eq!(*a >= 0.5, *b >= 0.5, "hard label flip: {a} vs {b}");
        }
    }
}
