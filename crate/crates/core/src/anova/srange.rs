//! Studentized range distribution by numerical integration.
//!
//! The CDF for k groups and df degrees of freedom is
//!
//! ```text
//! P(Q <= q) = integral over s of f_df(s) * P_range(q * s) ds
//! ```
//!
//! where `f_df` is the density of a chi(df)/sqrt(df) scale variable and
//! `P_range(x) = k * integral phi(z) [Phi(z + x) - Phi(z)]^(k-1) dz` is the
//! probability that the range of k standard normals stays below x. Both
//! integrals use fixed Gauss-Legendre rules; quantiles come from bisection.

use statrs::distribution::{ContinuousCDF, Normal};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Integration window for the standard normal integrand.
const Z_LIMIT: f64 = 8.5;
const INNER_NODES: usize = 200;
const OUTER_NODES: usize = 160;

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        // Chebyshev-based initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0f64, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// P(range of k iid standard normals <= x).
fn normal_range_cdf(x: f64, k: usize, normal: &Normal, nodes: &[f64], weights: &[f64]) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    let half = Z_LIMIT;
    let mut total = 0.0;
    for (&t, &w) in nodes.iter().zip(weights) {
        let z = half * t;
        let phi = (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let inner = (normal.cdf(z + x) - normal.cdf(z)).max(0.0);
        total += w * phi * inner.powi(k as i32 - 1);
    }
    (k as f64 * half * total).clamp(0.0, 1.0)
}

/// CDF of the studentized range with `k` groups and `df` residual degrees
/// of freedom (`None` for the infinite-df normal-range limit).
pub fn studentized_range_cdf(q: f64, k: usize, df: Option<usize>) -> f64 {
    if q <= 0.0 {
        return 0.0;
    }
    let normal = Normal::new(0.0, 1.0).expect("standard normal");
    let (inner_nodes, inner_weights) = gauss_legendre(INNER_NODES);

    match df {
        None => normal_range_cdf(q, k, &normal, &inner_nodes, &inner_weights),
        Some(df) => {
            let nu = df as f64;
            // Density of s = chi_nu / sqrt(nu):
            // f(s) = C s^(nu-1) exp(-nu s^2 / 2),
            // ln C = (nu/2) ln(nu) - (nu/2 - 1) ln 2 - ln Gamma(nu/2).
            let ln_c = 0.5 * nu * nu.ln() - (0.5 * nu - 1.0) * 2.0f64.ln() - ln_gamma(0.5 * nu);
            // s concentrates around 1 with sd ~ 1/sqrt(2 nu).
            let spread = 12.0 / (2.0 * nu).sqrt();
            let lo = (1.0 - spread).max(0.0);
            let hi = 1.0 + spread.max(1.0);
            let (outer_nodes, outer_weights) = gauss_legendre(OUTER_NODES);
            let halfwidth = (hi - lo) / 2.0;
            let center = (lo + hi) / 2.0;
            let mut total = 0.0;
            for (&t, &w) in outer_nodes.iter().zip(&outer_weights) {
                let s = center + halfwidth * t;
                if s <= 0.0 {
                    continue;
                }
                let ln_density = ln_c + (nu - 1.0) * s.ln() - 0.5 * nu * s * s;
                let p_range = normal_range_cdf(q * s, k, &normal, &inner_nodes, &inner_weights);
                total += w * ln_density.exp() * p_range;
            }
            (halfwidth * total).clamp(0.0, 1.0)
        }
    }
}

/// Upper-alpha quantile of the studentized range, by bisection on the CDF.
pub fn studentized_range_critical(alpha: f64, k: usize, df: Option<usize>) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Anova(format!("alpha must be in (0,1), got {alpha}")));
    }
    if k < 2 {
        return Err(Error::Anova(format!("need k >= 2 groups, got {k}")));
    }
    if df == Some(0) {
        return Err(Error::Anova("df must be >= 1".into()));
    }
    let target = 1.0 - alpha;
    let mut lo = 0.0f64;
    let mut hi = 10.0f64;
    while studentized_range_cdf(hi, k, df) < target {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Anova("studentized range quantile out of range".into()));
        }
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if studentized_range_cdf(mid, k, df) < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-7 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
