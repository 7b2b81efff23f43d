//! Principal-branch Lambert W and the rate-optimal bandwidth exponents.
//!
//! Balancing the squared bias `h^{2 beta}` against the variance
//! `exp(C h^{-k}) / (n h^{(1-p)/(2p-1)})` with `h = (log n)^a` gives
//!
//! ```text
//! e^u + (j/k) u = log n,    u = -k a log log n,
//! ```
//!
//! where `j = 2 beta + (1-p)/(2p-1)` and `k = 2/(2p-1)`. Its solution is
//! `u = (k/j) log n - W((k/j) n^{k/j})`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

const INV_E: f64 = 1.0 / E;

/// `W_0(y)`, the solution `w >= -1` of `w e^w = y`.
pub fn lambert_w0(y: f64) -> Result<f64> {
    if y.is_nan() || y < -INV_E {
        // allow the rounding of -1/e itself
        if y.is_nan() || y < -INV_E * (1.0 + 4.0 * f64::EPSILON) {
            return Err(Error::DomainError(y));
        }
        return Ok(-1.0);
    }
    if y == 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(f64::INFINITY);
    }
    if y.abs() < 1e-8 {
        return Ok(y - y * y + 1.5 * y * y * y);
    }
    if y > 1e300 {
        return lambert_w0_from_log(y.ln());
    }

    let q = 2.0 * (E * y + 1.0);
    if q < 1e-6 {
        // series about the branch point in p = sqrt(2(ey + 1))
        let p = q.max(0.0).sqrt();
        return Ok(-1.0 + p * (1.0 + p * (-1.0 / 3.0 + p * (11.0 / 72.0 + p * (-43.0 / 540.0 + p * 769.0 / 17280.0)))));
    }
    let mut w = if y < -0.25 {
        let p = q.sqrt();
        -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
    } else if y < E {
        y.ln_1p() * (1.0 - y.ln_1p() / (2.0 + y.ln_1p()))
    } else {
        let l1 = y.ln();
        let l2 = l1.ln();
        l1 - l2 + l2 / l1
    };
    // Halley
    for _ in 0..64 {
        let ew = w.exp();
        let f = w * ew - y;
        let wp1 = w + 1.0;
        let step = f / (ew * wp1 - (w + 2.0) * f / (2.0 * wp1));
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + w.abs()) {
            break;
        }
    }
    Ok(w)
}

/// `W_0(y)` for `y > 0` given only `ln y`, so arguments far beyond the
/// floating range stay usable. Solves `v + e^v = ln y` for `v = ln W`.
pub fn lambert_w0_from_log(ln_y: f64) -> Result<f64> {
    if ln_y.is_nan() {
        return Err(Error::DomainError(ln_y));
    }
    if ln_y == f64::INFINITY {
        return Ok(f64::INFINITY);
    }
    if ln_y == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    let mut v = if ln_y > 1.0 {
        // three-term expansion W ~ L1 - L2 + L2/L1
        let l2 = ln_y.ln();
        (ln_y - l2 + l2 / ln_y).ln()
    } else if ln_y < -1.0 {
        ln_y
    } else {
        lambert_w0(ln_y.exp())?.ln()
    };
    for _ in 0..100 {
        let ev = v.exp();
        let step = (v + ev - ln_y) / (1.0 + ev);
        v -= step;
        if step.abs() <= 4.0 * f64::EPSILON * (1.0 + v.abs()) {
            break;
        }
    }
    Ok(v.exp())
}

/// `j = 2 beta + (1-p)/(2p-1)` and `k = 2/(2p-1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateExponents {
    pub j: f64,
    pub k: f64,
}

impl RateExponents {
    pub fn new(beta: f64, p: f64) -> Result<Self> {
        if !(p > 1.0 && p.is_finite()) {
            return Err(invalid(format!("bandwidth exponent p must exceed 1, got {p}")));
        }
        if !(beta >= 0.25 && beta <= 1.0) {
            return Err(invalid(format!("smoothness beta must lie in [1/4, 1], got {beta}")));
        }
        let q = 2.0 * p - 1.0;
        Ok(Self { j: 2.0 * beta + (1.0 - p) / q, k: 2.0 / q })
    }

    /// `-(2p - 1)/2 = -1/k`, the limit of both optimal exponents.
    pub fn limit(&self) -> f64 {
        -1.0 / self.k
    }
}

fn log_logs(n: f64) -> Result<(f64, f64)> {
    if !(n > E) {
        return Err(Error::DomainError(n));
    }
    let l1 = n.ln();
    Ok((l1, l1.ln()))
}

/// Pointwise optimal exponent: `h_opt ~ (log n)^a` with
/// `a = [j W((k/j) n^{k/j}) - k log n] / (j k log log n)`.
pub fn a_opt_pointwise(n: f64, beta: f64, p: f64) -> Result<f64> {
    let RateExponents { j, k } = RateExponents::new(beta, p)?;
    let (l1, l2) = log_logs(n)?;
    let w = lambert_w0_from_log((k / j).ln() + (k / j) * l1)?;
    Ok((j * w - k * l1) / (j * k * l2))
}

/// Exponent for uniform consistency over `S_tau`, where the variance term
/// carries an extra `(log n)^2`. The balance becomes
/// `e^u + (j/k) u = log n - 2 log log n`, giving
/// `a = [j W((k/j) exp((k/j)(log n - 2 log log n))) + 2k log log n - k log n] / (j k log log n)`.
pub fn a_opt_uniform(n: f64, beta: f64, p: f64) -> Result<f64> {
    let RateExponents { j, k } = RateExponents::new(beta, p)?;
    let (l1, l2) = log_logs(n)?;
    let w = lambert_w0_from_log((k / j).ln() + (k / j) * (l1 - 2.0 * l2))?;
    Ok((j * w + 2.0 * k * l2 - k * l1) / (j * k * l2))
}

/// Same as [`a_opt_uniform`] but forming the Lambert argument in linear
/// scale; used to cross-check the log-domain path.
pub fn a_opt_uniform_direct(n: f64, beta: f64, p: f64) -> Result<f64> {
    let RateExponents { j, k } = RateExponents::new(beta, p)?;
    let (l1, l2) = log_logs(n)?;
    let z = (k / j) * ((k / j) * (l1 - 2.0 * l2)).exp();
    let w = lambert_w0(z)?;
    Ok((j * w + 2.0 * k * l2 - k * l1) / (j * k * l2))
}

/// `(log n)^a`.
pub fn h_opt(n: f64, a: f64) -> Result<f64> {
    if !(n >= 3.0) {
        return Err(invalid(format!("h_opt needs n >= 3, got {n}")));
    }
    Ok(n.ln().powf(a))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fixed_points() {
        assert_eq!(lambert_w0(0.0).unwrap(), 0.0);
        assert!((lambert_w0(E).unwrap() - 1.0).abs() < 1e-15);
        assert!((lambert_w0(-INV_E).unwrap() + 1.0).abs() < 1e-10);
        assert!(matches!(lambert_w0(-0.5), Err(Error::DomainError(_))));
    }

    #[test]
    fn omega_constant_against_bisection() {
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid * mid.exp() - 1.0 > 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        assert!((lambert_w0(1.0).unwrap() - lo).abs() < 1e-15);
        assert!((lo - 0.567_143_290_409_783_8).abs() < 1e-15);
    }

    #[test]
    fn log_domain_agrees() {
        for &y in &[1e-12, 1e-3, 0.5, 1.0, 10.0, 1e5, 1e100] {
            let a = lambert_w0(y).unwrap();
            let b = lambert_w0_from_log(f64::ln(y)).unwrap();
            assert!((a - b).abs() <= 1e-14 * a.abs().max(1e-300), "{y}: {a} {b}");
        }
        // beyond f64 range: W(e^L) ~ L - ln L
        let w = lambert_w0_from_log(1e4).unwrap();
        assert!((w.ln() + w - 1e4).abs() < 1e-9);
    }

    #[test]
    fn exponents_for_p2_beta1() {
        let r = RateExponents::new(1.0, 2.0).unwrap();
        assert!((r.j - 5.0 / 3.0).abs() < 1e-15);
        assert!((r.k - 2.0 / 3.0).abs() < 1e-15);
        assert!(RateExponents::new(0.2, 2.0).is_err());
        assert!(RateExponents::new(1.0, 1.0).is_err());
    }

    #[test]
    fn pointwise_domain() {
        assert!(matches!(a_opt_pointwise(2.0, 1.0, 2.0), Err(Error::DomainError(_))));
        assert!(a_opt_pointwise(3.0, 1.0, 2.0).is_ok());
    }

    #[test]
    fn h_opt_values() {
        assert_eq!(h_opt(100.0, 0.0).unwrap(), 1.0);
        assert!((h_opt(E.powf(E), 1.0).unwrap() - E).abs() < 1e-14);
        let want = (1e6f64).ln().powf(-1.5);
        assert!((h_opt(1e6, -1.5).unwrap() - want).abs() < 1e-16);
    }

    #[test]
    fn uniform_dual_evaluation() {
        let a = a_opt_uniform(1e6, 1.0, 2.0).unwrap();
        let b = a_opt_uniform_direct(1e6, 1.0, 2.0).unwrap();
        assert!(a.is_finite());
        assert!((a - b).abs() < 1e-10);
    }

    #[test]
    fn uniform_approaches_pointwise() {
        for &p in &[1.5, 2.0, 3.0] {
            let gaps: Vec<f64> = [1e4, 1e6, 1e8]
                .iter()
                .map(|&n| (a_opt_uniform(n, 1.0, p).unwrap() - a_opt_pointwise(n, 1.0, p).unwrap()).abs())
                .collect();
            assert!(gaps[0] > gaps[1] && gaps[1] > gaps[2], "p={p}: {gaps:?}");
            let limit = -(2.0 * p - 1.0) / 2.0;
            for &n in &[1e4, 1e6, 1e8] {
                assert!(a_opt_uniform(n, 1.0, p).unwrap() > limit);
            }
        }
    }

    proptest! {
        #[test]
        fn identity_on_random_arguments(y in -0.367_879f64..1e6) {
            let w = lambert_w0(y).unwrap();
            prop_assert!((w * w.exp() - y).abs() <= 1e-12 * y.abs().max(1.0));
        }

        #[test]
        fn strictly_increasing(a in -0.367_879f64..100.0, b in -0.367_879f64..100.0) {
            prop_assume!((a - b).abs() > 1e-9);
            let (lo, hi) = if a < b { (a, b) } else { (b, a) };
            prop_assert!(lambert_w0(lo).unwrap() < lambert_w0(hi).unwrap());
        }

        #[test]
        fn balance_identity(ln_n in 1.2f64..40.0, beta in 0.25f64..1.0, p in 1.05f64..4.0) {
            let n = ln_n.exp();
            let r = RateExponents::new(beta, p).unwrap();
            let a = a_opt_pointwise(n, beta, p).unwrap();
            let u = -r.k * a * ln_n.ln();
            let lhs = u.exp() + r.j / r.k * u;
            prop_assert!((lhs - ln_n).abs() <= 1e-10 * ln_n);
        }
    }
}
