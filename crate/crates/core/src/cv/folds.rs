//! Stratified K-fold partitioning.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::data::LabelVector;
use crate::error::{Error, Result};

/// Seeded fold assignment: fold sizes differ by at most one, every fold
/// contains both classes, and the plan is a pure function of
/// `(n, k, seed, labels)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub n: usize,
    pub k: usize,
    pub seed: u64,
    /// Fold index per row.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_rows(&self, fold: usize) -> Vec<usize> {
        (0..self.n).filter(|&i| self.assignment[i] == fold).collect()
    }

    pub fn complement_rows(&self, excluded_folds: &[usize]) -> Vec<usize> {
        (0..self.n)
            .filter(|&i| !excluded_folds.contains(&self.assignment[i]))
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Stratified shuffle-and-deal: within each class, rows are shuffled by the
/// seed and dealt round-robin, with the dealing cursor carried across
/// classes so overall fold sizes stay within one of each other.
pub fn partition(n: usize, k: usize, seed: u64, labels: &LabelVector) -> Result<FoldPlan> {
    if labels.len() != n {
        return Err(Error::CrossValidation(format!(
            "{n} rows but {} labels",
            labels.len()
        )));
    }
    if k < 2 || n < k {
        return Err(Error::CrossValidation(format!(
            "need 2 <= K <= n, got K={k}, n={n}"
        )));
    }
    for class in [0u8, 1u8] {
        let count = labels.count(class);
        if count < k {
            return Err(Error::CrossValidation(format!(
                "class {class} has {count} members, fewer than K={k}: stratification infeasible"
            )));
        }
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let mut assignment = vec![0usize; n];
    let mut cursor = 0usize;
    for class in [0u8, 1u8] {
        let mut rows: Vec<usize> = (0..n)
            .filter(|&i| labels.as_slice()[i] == class)
            .collect();
        rows.shuffle(&mut rng);
        for row in rows {
            assignment[row] = cursor % k;
            cursor += 1;
        }
    }

    Ok(FoldPlan {
        n,
        k,
        seed,
        assignment,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn labels(n0: usize, n1: usize) -> LabelVector {
        let mut v = vec![0u8; n0];
        v.extend(vec![1u8; n1]);
        LabelVector::new(v).unwrap()
    }

    #[test]
    fn paper_shaped_partition_has_expected_fold_sizes() {
        let plan = partition(324, 10, 7, &labels(166, 158)).unwrap();
        let mut sizes = plan.fold_sizes();
        sizes.sort_unstable();
        assert_eq!(sizes, vec![32, 32, 32, 32, 32, 32, 33, 33, 33, 33]);
    }

    #[test]
    fn every_fold_contains_both_classes() {
        let y = labels(40, 25);
        let plan = partition(65, 10, 3, &y).unwrap();
        for fold in 0..10 {
            let rows = plan.fold_rows(fold);
            assert!(rows.iter().any(|&r| y.as_slice()[r] == 0), "fold {fold}");
            assert!(rows.iter().any(|&r| y.as_slice()[r] == 1), "fold {fold}");
        }
    }

    #[test]
    fn leave_one_out_shape_is_rejected() {
        let y = labels(5, 5);
        assert!(partition(10, 10, 0, &y).is_err());
    }

    #[test]
    fn same_inputs_give_identical_plans() {
        let y = labels(30, 33);
        let a = partition(63, 7, 99, &y).unwrap();
        let b = partition(63, 7, 99, &y).unwrap();
        assert_eq!(a, b);
        let c = partition(63, 7, 100, &y).unwrap();
        assert_ne!(a.assignment, c.assignment);
    }

    #[test]
    fn assignment_partitions_all_rows() {
        let y = labels(21, 19);
        let plan = partition(40, 5, 11, &y).unwrap();
        let total: usize = plan.fold_sizes().iter().sum();
        assert_eq!(total, 40);
        assert!(plan.assignment.iter().all(|&f| f < 5));
    }
}
