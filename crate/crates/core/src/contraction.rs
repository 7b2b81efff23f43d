//! Coefficient sequences `c_j` of the Hölder-type contraction bound
//! `|m(x) - m(x')| <= sum_j c_j |x_j - x'_j|^beta`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ContractionSpec {
    /// `c_j = c0 * exp(-gamma * j)`, `j >= 1`.
    Geometric { c0: f64, gamma: f64 },
    /// `c_1, ..., c_J` listed, zero afterwards.
    Explicit { coeffs: Vec<f64> },
    /// `c_j = c0 * j^(-decay)`, `j >= 1`.
    Power { c0: f64, decay: f64 },
}

impl ContractionSpec {
    pub fn geometric(c0: f64, gamma: f64) -> Self {
        ContractionSpec::Geometric { c0, gamma }
    }

    pub fn explicit(coeffs: Vec<f64>) -> Self {
        ContractionSpec::Explicit { coeffs }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ContractionSpec::Geometric { c0, gamma } => {
                if *c0 < 0.0 || !c0.is_finite() || !(*gamma > 0.0) {
                    return Err(invalid("geometric contraction needs c0 >= 0 and gamma > 0"));
                }
            }
            ContractionSpec::Explicit { coeffs } => {
                if coeffs.iter().any(|c| !(*c >= 0.0) || !c.is_finite()) {
                    return Err(invalid("contraction coefficients must be finite and >= 0"));
                }
            }
            ContractionSpec::Power { c0, decay } => {
                if *c0 < 0.0 || !c0.is_finite() || !decay.is_finite() {
                    return Err(invalid("power contraction needs c0 >= 0 and a finite decay"));
                }
            }
        }
        Ok(())
    }

    /// `c_j` for a 1-based index.
    pub fn coeff(&self, j: usize) -> f64 {
        match self {
            ContractionSpec::Geometric { c0, gamma } => c0 * (-gamma * j as f64).exp(),
            ContractionSpec::Explicit { coeffs } => {
                if j == 0 {
                    0.0
                } else {
                    coeffs.get(j - 1).copied().unwrap_or(0.0)
                }
            }
            ContractionSpec::Power { c0, decay } => c0 * (j as f64).powf(-decay),
        }
    }

    /// `c_1, ..., c_tau`.
    pub fn coeffs(&self, tau: usize) -> Vec<f64> {
        (1..=tau).map(|j| self.coeff(j)).collect()
    }

    /// `sum_j c_j` over the whole sequence.
    pub fn total(&self) -> Result<f64> {
        self.weighted_sum(0.0)
    }

    /// `sum_{j >= 1} c_j j^s`, with a tail bound below `1e-12` folded in.
    ///
    /// The power family is accepted only when Raabe's test certifies
    /// convergence (`decay - s > 1`).
    pub fn weighted_sum(&self, s: f64) -> Result<f64> {
        self.validate()?;
        match self {
            ContractionSpec::Explicit { coeffs } => Ok(coeffs
                .iter()
                .enumerate()
                .map(|(i, c)| c * ((i + 1) as f64).powf(s))
                .sum()),
            ContractionSpec::Geometric { c0, gamma } => {
                if *c0 == 0.0 {
                    return Ok(0.0);
                }
                let term = |j: usize| c0 * (-gamma * j as f64).exp() * (j as f64).powf(s);
                let mut sum = 0.0;
                let mut j = 1usize;
                loop {
                    sum += term(j);
                    // once the ratio t_{k+1}/t_k = e^{-gamma} ((k+1)/k)^s drops
                    // below one it keeps decreasing, so the tail is dominated by
                    // a geometric series started at j + 1
                    let r = (-gamma).exp() * ((j + 1) as f64 / j as f64).powf(s.max(0.0));
                    if r < 1.0 {
                        let tail = term(j + 1) / (1.0 - r);
                        if tail < 1e-12 {
                            return Ok(sum + tail);
                        }
                    }
                    j += 1;
                    if j > 10_000_000 {
                        return Err(Error::NonSummable);
                    }
                }
            }
            ContractionSpec::Power { c0, decay } => {
                let excess = decay - s;
                // Raabe: j (t_j / t_{j+1} - 1) -> decay - s
                if excess <= 1.0 {
                    return Err(Error::NonSummable);
                }
                if *c0 == 0.0 {
                    return Ok(0.0);
                }
                // Euler-Maclaurin tail for sum_{j > J} j^{-e}; the remainder is
                // O(J^{-e-3}), far below 1e-12 at J = 10^4
                let big_j = 10_000usize;
                let jf = big_j as f64;
                let partial: f64 = (1..=big_j).map(|j| (j as f64).powf(-excess)).sum();
                let tail = jf.powf(1.0 - excess) / (excess - 1.0) - 0.5 * jf.powf(-excess)
                    + excess / 12.0 * jf.powf(-excess - 1.0);
                Ok(c0 * (partial + tail))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn geometric_total_matches_closed_form() {
        let c = ContractionSpec::geometric(1.0, 1.0);
        let x = (-1.0f64).exp();
        assert!((c.total().unwrap() - x / (1.0 - x)).abs() < 1e-12);
    }

    #[test]
    fn power_family_summability() {
        let c = ContractionSpec::Power { c0: 1.0, decay: 2.0 };
        assert_eq!(c.weighted_sum(1.0), Err(Error::NonSummable));
        let v = c.weighted_sum(0.0).unwrap();
        let zeta2 = std::f64::consts::PI.powi(2) / 6.0;
        assert!((v - zeta2).abs() < 1e-12, "{v}");
    }
}
