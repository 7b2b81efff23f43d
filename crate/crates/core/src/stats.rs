//! Small descriptive-statistics helpers used by the experiment harness.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};

pub fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Sample standard deviation with the `n - 1` divisor.
pub fn sample_sd(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() as f64 - 1.0)).sqrt()
}

/// Median of the finite values; `None` when there are none.
pub fn median(v: &[f64]) -> Option<f64> {
    let mut s: Vec<f64> = v.iter().copied().filter(|x| x.is_finite()).collect();
    if s.is_empty() {
        return None;
    }
    s.sort_by(f64::total_cmp);
    let k = s.len();
    Some(if k % 2 == 1 { s[k / 2] } else { 0.5 * (s[k / 2 - 1] + s[k / 2]) })
}

/// `(x - mean) / sd` for every entry.
pub fn restandardize(v: &[f64]) -> Result<Vec<f64>> {
    if v.len() < 2 {
        return Err(invalid("restandardisation needs at least two values"));
    }
    let m = mean(v);
    let sd = sample_sd(v);
    if !(sd > 0.0) {
        return Err(invalid("restandardisation needs a positive spread"));
    }
    Ok(v.iter().map(|x| (x - m) / sd).collect())
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `v` and N(0, 1).
pub fn ks_distance_normal(v: &[f64]) -> f64 {
    let normal = Normal::standard();
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = normal.cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value `c / sqrt(n)`; `c = 1.63` at the 1% level.
pub fn ks_critical(n: usize, c: f64) -> f64 {
    c / (n as f64).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `y` on `x`.
pub fn ols(x: &[f64], y: &[f64]) -> Result<LineFit> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(invalid("line fit needs two or more paired values"));
    }
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(invalid("line fit needs distinct abscissae"));
    }
    let slope = sxy / sxx;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 1.0 };
    Ok(LineFit { slope, intercept: my - slope * mx, r_squared })
}
