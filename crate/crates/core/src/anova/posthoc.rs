//! Pairwise post-hoc contrasts: Bonferroni-adjusted t comparisons and
//! Tukey's honestly-significant-difference test.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::error::{Error, Result};

use super::srange::{studentized_range_cdf, studentized_range_critical};
use super::table::LongTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContrastMethod {
    Bonferroni,
    TukeyHsd,
    /// Tukey-Kramer fallback for unbalanced groups.
    TukeyKramer,
}

impl ContrastMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            ContrastMethod::Bonferroni => "bonferroni",
            ContrastMethod::TukeyHsd => "tukey_hsd",
            ContrastMethod::TukeyKramer => "tukey_kramer",
        }
    }
}

/// One level-pair comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseContrast {
    pub level_a: String,
    pub level_b: String,
    /// mean(a) - mean(b).
    pub mean_diff: f64,
    pub p_raw: f64,
    pub p_adjusted: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub method: ContrastMethod,
}

struct GroupStats {
    levels: Vec<String>,
    means: Vec<f64>,
    sizes: Vec<usize>,
    /// Pooled within-group mean square and its df.
    ms_within: f64,
    df_within: usize,
}

fn group_stats(table: &LongTable, response: &str, factor: &str) -> Result<GroupStats> {
    let fi = table.factor_index(factor)?;
    let ri = table.response_index(response)?;
    let levels = table.factor_levels(fi);
    if levels.len() < 2 {
        return Err(Error::Anova(format!("factor {factor:?} has fewer than 2 levels")));
    }
    let mut sums = vec![0.0f64; levels.len()];
    let mut sizes = vec![0usize; levels.len()];
    for (row, resp) in table.levels.iter().zip(&table.responses) {
        let g = levels.iter().position(|l| *l == row[fi]).expect("level known");
        sums[g] += resp[ri];
        sizes[g] += 1;
    }
    if sizes.iter().any(|&s| s < 2) {
        return Err(Error::Anova("every group needs at least 2 observations".into()));
    }
    let means: Vec<f64> = sums.iter().zip(&sizes).map(|(s, &n)| s / n as f64).collect();
    let mut ss_within = 0.0;
    for (row, resp) in table.levels.iter().zip(&table.responses) {
        let g = levels.iter().position(|l| *l == row[fi]).expect("level known");
        let d = resp[ri] - means[g];
        ss_within += d * d;
    }
    let df_within = table.n_rows() - levels.len();
    Ok(GroupStats {
        levels,
        means,
        sizes,
        ms_within: ss_within / df_within as f64,
        df_within,
    })
}

/// All level pairs with two-sided pooled-t p-values, Bonferroni-adjusted,
/// and confidence intervals at the adjusted level.
pub fn bonferroni_pairwise(
    table: &LongTable,
    response: &str,
    factor: &str,
    alpha: f64,
) -> Result<Vec<PairwiseContrast>> {
    let stats = group_stats(table, response, factor)?;
    let k = stats.levels.len();
    let m = k * (k - 1) / 2;
    let t_dist = StudentsT::new(0.0, 1.0, stats.df_within as f64)
        .map_err(|e| Error::Anova(e.to_string()))?;
    let t_crit = t_dist.inverse_cdf(1.0 - alpha / (2.0 * m as f64));

    let mut out = Vec::with_capacity(m);
    for a in 0..k {
        for b in (a + 1)..k {
            let diff = stats.means[a] - stats.means[b];
            let se = (stats.ms_within
                * (1.0 / stats.sizes[a] as f64 + 1.0 / stats.sizes[b] as f64))
                .sqrt();
            let (p_raw, half_width) = if se == 0.0 {
                (if diff == 0.0 { 1.0 } else { 0.0 }, 0.0)
            } else {
                let t = diff / se;
                (2.0 * (1.0 - t_dist.cdf(t.abs())), t_crit * se)
            };
            out.push(PairwiseContrast {
                level_a: stats.levels[a].clone(),
                level_b: stats.levels[b].clone(),
                mean_diff: diff,
                p_raw: p_raw.clamp(0.0, 1.0),
                p_adjusted: (m as f64 * p_raw).min(1.0),
                ci_low: diff - half_width,
                ci_high: diff + half_width,
                method: ContrastMethod::Bonferroni,
            });
        }
    }
    Ok(out)
}

/// Tukey HSD over all level pairs: studentized-range p-values and
/// simultaneous confidence intervals. Unbalanced groups fall back to the
/// Tukey-Kramer standard error with a note in the method tag.
pub fn tukey_hsd(
    table: &LongTable,
    response: &str,
    factor: &str,
    alpha: f64,
) -> Result<Vec<PairwiseContrast>> {
    let stats = group_stats(table, response, factor)?;
    let k = stats.levels.len();
    let balanced = stats.sizes.windows(2).all(|w| w[0] == w[1]);
    if !balanced {
        log::warn!("tukey_hsd: unbalanced groups; using the Tukey-Kramer standard error");
    }
    let method = if balanced {
        ContrastMethod::TukeyHsd
    } else {
        ContrastMethod::TukeyKramer
    };
    let q_crit = studentized_range_critical(alpha, k, Some(stats.df_within))?;

    let mut out = Vec::with_capacity(k * (k - 1) / 2);
    for a in 0..k {
        for b in (a + 1)..k {
            let diff = stats.means[a] - stats.means[b];
            // Studentized-range scale: q = |diff| / sqrt(MSw / n) for equal
            // group sizes; Tukey-Kramer replaces 1/n with the average.
            let inv_n = 0.5 * (1.0 / stats.sizes[a] as f64 + 1.0 / stats.sizes[b] as f64);
            let scale = (stats.ms_within * inv_n).sqrt();
            let (p, half_width) = if scale == 0.0 {
                (if diff == 0.0 { 1.0 } else { 0.0 }, 0.0)
            } else {
                let q_obs = diff.abs() / scale;
                (
                    1.0 - studentized_range_cdf(q_obs, k, Some(stats.df_within)),
                    q_crit * scale,
                )
            };
            out.push(PairwiseContrast {
                level_a: stats.levels[a].clone(),
                level_b: stats.levels[b].clone(),
                mean_diff: diff,
                p_raw: p.clamp(0.0, 1.0),
                p_adjusted: p.clamp(0.0, 1.0),
                ci_low: diff - half_width,
                ci_high: diff + half_width,
                method,
            });
        }
    }
    Ok(out)
}
