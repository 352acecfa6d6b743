//! Fixed-effects linear-model ANOVA with sum-to-zero effect coding.
//!
//! Effect sums of squares come from model comparisons (full model vs the
//! model without that effect's columns), so on balanced designs they equal
//! the classic sequential decomposition and on unbalanced designs they fall
//! back to marginal sums of squares.

use std::collections::HashMap;

use nalgebra::{Cholesky, DMatrix, DVector};
use statrs::distribution::{ContinuousCDF, FisherSnedecor};

use crate::error::{Error, Result};

use super::table::LongTable;

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaEffect {
    pub name: String,
    pub df: usize,
    pub sum_sq: f64,
    pub f_stat: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnovaTable {
    pub effects: Vec<AnovaEffect>,
    pub residual_ss: f64,
    pub residual_df: usize,
    pub total_ss: f64,
    pub grand_mean: f64,
    pub balanced: bool,
}

struct EffectBlock {
    name: String,
    columns: Vec<Vec<f64>>,
}

/// Sum-to-zero coded columns for one factor: one column per non-reference
/// level, +1 at that level, -1 at the last (reference) level.
fn effect_code(levels_per_row: &[&String], levels: &[String]) -> Vec<Vec<f64>> {
    let index: HashMap<&String, usize> = levels.iter().enumerate().map(|(i, l)| (l, i)).collect();
    let last = levels.len() - 1;
    (0..last)
        .map(|li| {
            levels_per_row
                .iter()
                .map(|row_level| {
                    let at = index[*row_level];
                    if at == li {
                        1.0
                    } else if at == last {
                        -1.0
                    } else {
                        0.0
                    }
                })
                .collect()
        })
        .collect()
}

/// N-way fixed-effects ANOVA of `response` on `factors`, with optional
/// pairwise interactions. p-values come from the F distribution.
pub fn nway_anova(
    table: &LongTable,
    response: &str,
    factors: &[&str],
    interactions: &[(&str, &str)],
) -> Result<AnovaTable> {
    if factors.is_empty() {
        return Err(Error::Anova("no factors given".into()));
    }
    let n = table.n_rows();
    if n < 3 {
        return Err(Error::Anova(format!("only {n} rows")));
    }
    let y = DVector::from_vec(table.response_column(table.response_index(response)?));
    let grand_mean = y.sum() / n as f64;
    let total_ss: f64 = y.iter().map(|v| (v - grand_mean) * (v - grand_mean)).sum();

    let mut blocks: Vec<EffectBlock> = Vec::new();
    let mut factor_columns: HashMap<String, Vec<Vec<f64>>> = HashMap::new();
    for &factor in factors {
        let fi = table.factor_index(factor)?;
        let levels = table.factor_levels(fi);
        if levels.len() < 2 {
            return Err(Error::Anova(format!(
                "factor {factor:?} has a single level"
            )));
        }
        let rows: Vec<&String> = table.levels.iter().map(|r| &r[fi]).collect();
        let columns = effect_code(&rows, &levels);
        factor_columns.insert(factor.to_string(), columns.clone());
        blocks.push(EffectBlock {
            name: factor.to_string(),
            columns,
        });
    }
    for &(a, b) in interactions {
        let ca = factor_columns
            .get(a)
            .ok_or_else(|| Error::Anova(format!("interaction uses unknown factor {a:?}")))?;
        let cb = factor_columns
            .get(b)
            .ok_or_else(|| Error::Anova(format!("interaction uses unknown factor {b:?}")))?;
        let mut columns = Vec::with_capacity(ca.len() * cb.len());
        for x in ca {
            for z in cb {
                columns.push(x.iter().zip(z).map(|(u, v)| u * v).collect());
            }
        }
        blocks.push(EffectBlock {
            name: format!("{a}:{b}"),
            columns,
        });
    }

    let balanced = is_balanced(table, factors)?;
    if !balanced {
        log::warn!("nway_anova: unbalanced design; reporting marginal sums of squares");
    }

    // Full design: intercept + all effect blocks. Solves run off the Gram
    // matrix so reduced models reuse the same accumulation.
    let mut columns: Vec<Vec<f64>> = vec![vec![1.0; n]];
    let mut block_spans = Vec::new(); // (name, start, len) into `columns`
    for block in &blocks {
        let start = columns.len();
        columns.extend(block.columns.iter().cloned());
        block_spans.push((block.name.clone(), start, block.columns.len()));
    }
    let p = columns.len();
    if n <= p {
        return Err(Error::Anova(format!("{n} rows for {p} design columns")));
    }

    let mut gram = DMatrix::zeros(p, p);
    let mut xty = DVector::zeros(p);
    for a in 0..p {
        for b in a..p {
            let dot: f64 = columns[a].iter().zip(&columns[b]).map(|(u, v)| u * v).sum();
            gram[(a, b)] = dot;
            gram[(b, a)] = dot;
        }
        xty[a] = columns[a].iter().zip(y.iter()).map(|(u, v)| u * v).sum();
    }
    let yty: f64 = y.iter().map(|v| v * v).sum();

    let sse_for = |keep: &[usize]| -> Result<f64> {
        let g = gram.select_rows(keep).select_columns(keep);
        let h = xty.select_rows(keep);
        let chol = Cholesky::new(g).ok_or_else(|| {
            Error::Anova("rank-deficient design (empty cells or collinear factors)".into())
        })?;
        let beta = chol.solve(&h);
        Ok(yty - h.dot(&beta))
    };

    let all: Vec<usize> = (0..p).collect();
    let sse_full = sse_for(&all)?.max(0.0);
    let residual_df = n - p;
    let ms_residual = sse_full / residual_df as f64;

    let mut effects = Vec::with_capacity(block_spans.len());
    for (name, start, len) in &block_spans {
        let keep: Vec<usize> = (0..p).filter(|i| *i < *start || *i >= start + len).collect();
        let sse_reduced = sse_for(&keep)?.max(0.0);
        let sum_sq = (sse_reduced - sse_full).max(0.0);
        let df = *len;
        let (f_stat, p_value) = if total_ss == 0.0 || ms_residual == 0.0 {
            // Constant response (or a saturated fit): no variance to test.
            (0.0, 1.0)
        } else {
            let f = (sum_sq / df as f64) / ms_residual;
            let dist = FisherSnedecor::new(df as f64, residual_df as f64)
                .map_err(|e| Error::Anova(e.to_string()))?;
            (f, (1.0 - dist.cdf(f)).clamp(0.0, 1.0))
        };
        effects.push(AnovaEffect {
            name: name.clone(),
            df,
            sum_sq,
            f_stat,
            p_value,
        });
    }

    Ok(AnovaTable {
        effects,
        residual_ss: sse_full,
        residual_df,
        total_ss,
        grand_mean,
        balanced,
    })
}

fn is_balanced(table: &LongTable, factors: &[&str]) -> Result<bool> {
    let indices: Vec<usize> = factors
        .iter()
        .map(|f| table.factor_index(f))
        .collect::<Result<_>>()?;
    let mut cell_counts: HashMap<Vec<&String>, usize> = HashMap::new();
    for row in &table.levels {
        let key: Vec<&String> = indices.iter().map(|&i| &row[i]).collect();
        *cell_counts.entry(key).or_insert(0) += 1;
    }
    let mut counts = cell_counts.values();
    let first = *counts.next().expect("at least one row");
    Ok(counts.all(|&c| c == first))
}
