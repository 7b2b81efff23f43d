//! Small-ball probabilities and the constants governing their decay.
//!
//! Marginals are described through the law of `X_s^2` ([`DistSpec`]). Near
//! zero that law is regularly varying, `F(1/x) = x^rho l(x)`, and together
//! with the Laplace transform `L` of `X_s^2` it fixes the exponential decay
//! of the weighted small ball
//!
//! ```text
//! log phi_x(h lambda) = const + (1 + 2 rho p)/(2p - 1) log(lambda h)
//!                       - C** (lambda h)^{-2/(2p - 1)} + o(1).
//! ```
//!
//! The additive constant depends on an unobservable Radon-Nikodym derivative,
//! so every comparison with simulated data goes through slopes or
//! differences.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::{gamma, ln_gamma};

use crate::error::{invalid, Error, Result};
use crate::quadrature::{integrate, integrate_real_line, integrate_to_infinity};
use crate::seqspace::{weighted_sq_dist, BandwidthSchedule, SeqPoint};

/// Law of the squared marginal `X_s^2`. Rates, not scales, parameterise the
/// gamma and exponential families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum DistSpec {
    /// `X^2 ~ U(1, b)`.
    UniformSq { b: f64 },
    /// Shape `alpha`, rate `beta`.
    Gamma { alpha: f64, beta: f64 },
    /// Rate `eta`.
    Exp { eta: f64 },
    /// `F(x) = 1 - exp(-beta x^alpha)`.
    Weibull { alpha: f64, beta: f64 },
    /// Pareto type II (Lomax), `F(x) = 1 - (1 + x/theta)^(-mu)`.
    Pareto { theta: f64, mu: f64 },
    /// `X_s` standard Gaussian.
    #[serde(rename = "chisq1")]
    ChiSq1,
}

impl DistSpec {
    pub fn validate(&self) -> Result<()> {
        let pos = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(invalid(format!("{name} must be positive and finite, got {v}")))
            }
        };
        match *self {
            DistSpec::UniformSq { b } => {
                if b > 1.0 && b.is_finite() {
                    Ok(())
                } else {
                    Err(invalid(format!("uniform upper end must exceed 1, got {b}")))
                }
            }
            DistSpec::Gamma { alpha, beta } | DistSpec::Weibull { alpha, beta } => {
                pos("alpha", alpha)?;
                pos("beta", beta)
            }
            DistSpec::Exp { eta } => pos("eta", eta),
            DistSpec::Pareto { theta, mu } => {
                pos("theta", theta)?;
                pos("mu", mu)
            }
            DistSpec::ChiSq1 => Ok(()),
        }
    }

    /// Index of regular variation of `F(1/x)`.
    pub fn rho(&self) -> f64 {
        match *self {
            DistSpec::UniformSq { .. } | DistSpec::Exp { .. } | DistSpec::Pareto { .. } => -1.0,
            DistSpec::Gamma { alpha, .. } | DistSpec::Weibull { alpha, .. } => -alpha,
            DistSpec::ChiSq1 => -0.5,
        }
    }

    /// `lim l(x) = C_l^{-2}`.
    pub fn slowly_varying_limit(&self) -> f64 {
        match *self {
            DistSpec::UniformSq { .. } => 1.0,
            DistSpec::Gamma { alpha, beta } => beta.powf(alpha) / (alpha * gamma(alpha)),
            DistSpec::Exp { eta } => eta,
            DistSpec::Weibull { beta, .. } => beta,
            DistSpec::Pareto { theta, mu } => mu / theta,
            DistSpec::ChiSq1 => (2.0 / PI).sqrt(),
        }
    }

    pub fn c_ell(&self) -> f64 {
        self.slowly_varying_limit().powf(-0.5)
    }

    /// Closed-form `zeta` where one is tabulated.
    pub fn zeta_closed_form(&self, p: f64) -> Option<f64> {
        let s = (PI / (2.0 * p)).sin();
        match *self {
            DistSpec::Gamma { alpha, beta } => Some(alpha * PI * beta.powf(-1.0 / (2.0 * p)) / s),
            DistSpec::Exp { eta } => Some(PI * eta.powf(-1.0 / (2.0 * p)) / s),
            DistSpec::ChiSq1 => Some(PI * 2f64.powf((1.0 - 2.0 * p) / (2.0 * p)) / s),
            _ => None,
        }
    }

    /// `E[X^2]`, infinite for heavy Pareto tails.
    pub fn mean_sq(&self) -> f64 {
        match *self {
            DistSpec::UniformSq { b } => 0.5 * (1.0 + b),
            DistSpec::Gamma { alpha, beta } => alpha / beta,
            DistSpec::Exp { eta } => 1.0 / eta,
            DistSpec::Weibull { alpha, beta } => beta.powf(-1.0 / alpha) * gamma(1.0 + 1.0 / alpha),
            DistSpec::Pareto { theta, mu } => {
                if mu > 1.0 {
                    theta / (mu - 1.0)
                } else {
                    f64::INFINITY
                }
            }
            DistSpec::ChiSq1 => 1.0,
        }
    }

    /// Log density of `X^2` at `x > 0`.
    fn ln_density(&self, x: f64) -> f64 {
        match *self {
            DistSpec::UniformSq { b } => {
                if (1.0..=b).contains(&x) {
                    -(b - 1.0).ln()
                } else {
                    f64::NEG_INFINITY
                }
            }
            DistSpec::Gamma { alpha, beta } => {
                alpha * beta.ln() - ln_gamma(alpha) + (alpha - 1.0) * x.ln() - beta * x
            }
            DistSpec::Exp { eta } => eta.ln() - eta * x,
            DistSpec::Weibull { alpha, beta } => {
                (alpha * beta).ln() + (alpha - 1.0) * x.ln() - beta * x.powf(alpha)
            }
            DistSpec::Pareto { theta, mu } => (mu / theta).ln() - (mu + 1.0) * (x / theta).ln_1p(),
            DistSpec::ChiSq1 => -0.5 * (2.0 * PI).ln() - 0.5 * x.ln() - 0.5 * x,
        }
    }

    /// Typical magnitude of `X^2`, used to place quadrature breakpoints.
    fn scale(&self) -> f64 {
        match *self {
            DistSpec::UniformSq { b } => b,
            DistSpec::Gamma { alpha, beta } => alpha / beta,
            DistSpec::Exp { eta } => 1.0 / eta,
            DistSpec::Weibull { alpha, beta } => beta.powf(-1.0 / alpha),
            DistSpec::Pareto { theta, .. } => theta,
            DistSpec::ChiSq1 => 1.0,
        }
    }

    /// One draw of `X^2`.
    pub fn sample_sq<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            DistSpec::ChiSq1 => {
                let z: f64 = StandardNormal.sample(rng);
                z * z
            }
            DistSpec::Gamma { alpha, beta } => Gamma::new(alpha, 1.0 / beta)
                .expect("validated gamma parameters")
                .sample(rng),
            _ => {
                let v: f64 = rng.random();
                self.quantile_sq(v)
            }
        }
    }

    fn quantile_sq(&self, v: f64) -> f64 {
        match *self {
            DistSpec::UniformSq { b } => 1.0 + (b - 1.0) * v,
            DistSpec::Exp { eta } => -(-v).ln_1p() / eta,
            DistSpec::Weibull { alpha, beta } => (-(-v).ln_1p() / beta).powf(1.0 / alpha),
            DistSpec::Pareto { theta, mu } => theta * ((-(-v).ln_1p() / mu).exp_m1()),
            DistSpec::Gamma { .. } | DistSpec::ChiSq1 => {
                unreachable!("sampled through dedicated transforms")
            }
        }
    }

    /// One signed marginal `X_s = +-sqrt(X_s^2)`, symmetric about zero.
    pub fn sample_coordinate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if let DistSpec::ChiSq1 = self {
            return StandardNormal.sample(rng);
        }
        let w = self.sample_sq(rng).sqrt();
        if rng.random::<bool>() {
            w
        } else {
            -w
        }
    }

    /// `-L'(u) / L(u) = E[W e^{-uW}] / E[e^{-uW}]` for `W ~ self`, by
    /// quadrature against the density of `W`.
    fn laplace_log_derivative(&self, u: f64) -> Result<f64> {
        // substitute W = w / u; the density is renormalised at a reference
        // point so that neither integral underflows
        let s = self.scale();
        let w_ref = (u * s).min(1.0);
        let ln_ref = self.ln_density(w_ref / u);
        // the integrand varies on two scales, w ~ u s (density) and w ~ 1
        // (exponential factor); decade breakpoints spanning both keep every
        // panel resolved
        let lo_scale = (1e-2 * u * s).min(1e-2);
        let hi_scale = (1e2 * u * s).max(40.0);
        let mut breaks = Vec::new();
        let mut b = lo_scale;
        while b < hi_scale {
            breaks.push(b);
            b *= 10.0;
        }
        breaks.push(hi_scale);
        let piecewise = |k: i32| -> Result<f64> {
            let f = |w: f64| {
                if w <= 0.0 {
                    return 0.0;
                }
                let v = w.powi(k) * (self.ln_density(w / u) - ln_ref - w).exp();
                if v.is_finite() {
                    v
                } else {
                    0.0
                }
            };
            let mut total = 0.0;
            let mut lo = 0.0;
            for &b in &breaks {
                total += integrate(f, lo, b, 0.0, 1e-13)?.value;
                lo = b;
            }
            total += integrate_to_infinity(f, lo, 0.0, 1e-13)?.value;
            Ok(total)
        };
        let a = piecewise(0)?;
        let b = piecewise(1)?;
        if !(a > 0.0) {
            return Err(Error::QuadratureFailure(format!("Laplace transform vanished at u = {u}")));
        }
        Ok(b / (a * u))
    }

    /// Short label, e.g. `exp:1`.
    pub fn label(&self) -> String {
        self.to_string()
    }
}

impl fmt::Display for DistSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            DistSpec::UniformSq { b } => write!(f, "uniform:{b}"),
            DistSpec::Gamma { alpha, beta } => write!(f, "gamma:{alpha},{beta}"),
            DistSpec::Exp { eta } => write!(f, "exp:{eta}"),
            DistSpec::Weibull { alpha, beta } => write!(f, "weibull:{alpha},{beta}"),
            DistSpec::Pareto { theta, mu } => write!(f, "pareto:{theta},{mu}"),
            DistSpec::ChiSq1 => write!(f, "chisq1"),
        }
    }
}

impl FromStr for DistSpec {
    type Err = Error;

    /// Parses `family[:a[,b]]`, e.g. `exp:1`, `gamma:2,1`, `chisq1`.
    fn from_str(s: &str) -> Result<Self> {
        let (family, args) = match s.split_once(':') {
            Some((f, a)) => (f.trim(), a.trim()),
            None => (s.trim(), ""),
        };
        let nums: Vec<f64> = if args.is_empty() {
            Vec::new()
        } else {
            args.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<f64>()
                        .map_err(|_| invalid(format!("bad number `{t}` in `{s}`")))
                })
                .collect::<Result<_>>()?
        };
        let want = |k: usize| {
            if nums.len() == k {
                Ok(())
            } else {
                Err(invalid(format!("`{family}` takes {k} parameter(s), got {}", nums.len())))
            }
        };
        let d = match family.to_ascii_lowercase().as_str() {
            "uniform" => {
                want(1)?;
                DistSpec::UniformSq { b: nums[0] }
            }
            "gamma" => {
                want(2)?;
                DistSpec::Gamma { alpha: nums[0], beta: nums[1] }
            }
            "exp" => {
                want(1)?;
                DistSpec::Exp { eta: nums[0] }
            }
            "weibull" => {
                want(2)?;
                DistSpec::Weibull { alpha: nums[0], beta: nums[1] }
            }
            "pareto" => {
                want(2)?;
                DistSpec::Pareto { theta: nums[0], mu: nums[1] }
            }
            "chisq1" | "gaussian" => {
                want(0)?;
                DistSpec::ChiSq1
            }
            other => return Err(invalid(format!("unknown distribution family `{other}`"))),
        };
        d.validate()?;
        Ok(d)
    }
}

fn check_p(p: f64) -> Result<()> {
    if p >= 1.0 && p.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("bandwidth exponent p must be >= 1, got {p}")))
    }
}

/// `zeta = -int_0^inf u^{-1/2p} L'(u)/L(u) du` by nested quadrature on the
/// density of `X^2`; independent of the tabulated closed forms.
///
/// The outer integral runs in `s = ln u`, where the integrand decays
/// exponentially at both ends.
pub fn zeta_by_quadrature(dist: &DistSpec, p: f64) -> Result<f64> {
    dist.validate()?;
    check_p(p)?;
    if let DistSpec::UniformSq { .. } = dist {
        // support bounded away from zero: -L'/L -> 1 and the integral diverges
        return Err(Error::ZetaAbsent(dist.label()));
    }
    let expo = 1.0 - 1.0 / (2.0 * p);
    let mut failure = None;
    let r = integrate_real_line(
        |s| {
            // beyond |s| = 700 the integrand is below e^{-700/(2p)} in both tails
            if s.abs() > 700.0 {
                return 0.0;
            }
            let u = s.exp();
            match dist.laplace_log_derivative(u) {
                Ok(g) => (expo * s).exp() * g,
                Err(e) => {
                    failure.get_or_insert(e);
                    0.0
                }
            }
        },
        1e-12,
        1e-10,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(r.value)
}

/// `(rho, C_l, zeta)` for one marginal family.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DistConstants {
    pub rho: f64,
    pub c_ell: f64,
    pub zeta: Option<f64>,
}

/// Tabulated constants; `zeta` falls back to quadrature where no closed form
/// exists and is `None` where the defining integral diverges.
pub fn dist_constants(dist: &DistSpec, p: f64) -> Result<DistConstants> {
    dist.validate()?;
    check_p(p)?;
    let zeta = match dist.zeta_closed_form(p) {
        Some(z) => Some(z),
        None => match zeta_by_quadrature(dist, p) {
            Ok(z) => Some(z),
            Err(Error::ZetaAbsent(_)) => None,
            Err(e) => return Err(e),
        },
    };
    Ok(DistConstants { rho: dist.rho(), c_ell: dist.c_ell(), zeta })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Iid,
    GaussianDependent,
}

/// Constants of the small-ball asymptotics and the CLT normalisations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateConstants {
    pub variant: Variant,
    pub p: f64,
    pub lambda: f64,
    pub rho: f64,
    pub c_ell: f64,
    pub zeta: Option<f64>,
    pub c_star: f64,
    pub c_dstar: f64,
    pub c_a: f64,
}

/// `C**` from `zeta`: `(2p - 1) (zeta / 2p)^{2p/(2p-1)}`.
pub fn c_dstar_from_zeta(zeta: f64, p: f64) -> f64 {
    (2.0 * p - 1.0) * (zeta / (2.0 * p)).powf(2.0 * p / (2.0 * p - 1.0))
}

/// `C*` for i.i.d. marginals with index `rho` and constant `zeta`.
pub fn c_star_from_zeta(zeta: f64, rho: f64, p: f64) -> f64 {
    let q = 2.0 * p - 1.0;
    (2.0 * PI).powf(1.0 + 2.0 * p * rho) * q * gamma(1.0 - rho)
        / (2.0 * p).powf((2.0 * p * (rho + 2.0) - 1.0) / q)
        * zeta.powf(2.0 * p * (1.0 + rho) / q)
}

/// Gaussian `C*_G`.
pub fn gaussian_c_star(p: f64) -> f64 {
    let q = 2.0 * p - 1.0;
    let zeta = PI * 2f64.powf((1.0 - 2.0 * p) / (2.0 * p)) / (PI / (2.0 * p)).sin();
    (2.0 * PI).powf(1.0 - p) * q / (2.0 * (2.0 * p).powf((3.0 * p - 1.0) / q))
        * zeta.powf(-p / q)
}

/// Gaussian `C**_G = (2p-1)/2 (pi / (2p sin(pi/2p)))^{2p/(2p-1)}`.
pub fn gaussian_c_dstar(p: f64) -> f64 {
    let q = 2.0 * p - 1.0;
    0.5 * q * (PI / (2.0 * p * (PI / (2.0 * p)).sin())).powf(2.0 * p / q)
}

/// Drops trailing coefficients whose squared tail is below `1e-12`.
pub(crate) fn truncate_coeffs(a: &[f64]) -> Vec<f64> {
    let mut tail = 0.0;
    let mut keep = a.len();
    for (i, c) in a.iter().enumerate().rev() {
        tail += c * c;
        if tail >= 1e-12 {
            keep = i + 1;
            break;
        }
        keep = i;
    }
    a[..keep].to_vec()
}

/// `C_A = ((1/2pi) int_0^{2pi} |sum_j a_j e^{ijx}|^{1/p} dx)^p` by the
/// periodic trapezoid rule, doubling until the relative change is below 1e-9.
pub fn spectral_constant(a: &[f64], p: f64) -> Result<f64> {
    check_p(p)?;
    if a.iter().any(|c| !c.is_finite()) {
        return Err(invalid("moving-average coefficients must be finite"));
    }
    let a = truncate_coeffs(a);
    if a.is_empty() {
        return Err(invalid("moving-average coefficients are all zero"));
    }
    let symbol = |x: f64| -> f64 {
        // Horner in e^{ix}
        let (c, s) = (x.cos(), x.sin());
        let (mut re, mut im) = (0.0, 0.0);
        for &coef in a.iter().rev() {
            let nr = re * c - im * s + coef;
            let ni = re * s + im * c;
            re = nr;
            im = ni;
        }
        (re * re + im * im).sqrt().powf(1.0 / p)
    };
    let mut n = 64usize;
    let mut sum: f64 = (0..n).map(|i| symbol(2.0 * PI * i as f64 / n as f64)).sum();
    let mut mean = sum / n as f64;
    while n < (1 << 22) {
        // the refined rule reuses the existing nodes and adds the midpoints
        let add: f64 = (0..n)
            .map(|i| symbol(2.0 * PI * (i as f64 + 0.5) / n as f64))
            .sum();
        sum += add;
        n *= 2;
        let next = sum / n as f64;
        let done = (next - mean).abs() <= 1e-9 * next.abs();
        mean = next;
        if done {
            return Ok(mean.powf(p));
        }
    }
    Err(Error::QuadratureFailure(format!(
        "spectral constant still moving after {n} nodes"
    )))
}

/// The constant bundle for a marginal family, bandwidth exponent `p` and
/// kernel radius `lambda`.
///
/// `GaussianDependent` requires `ChiSq1` marginals; without coefficients it
/// reduces to i.i.d. Gaussian coordinates (`C_A = 1`).
pub fn rate_constants(
    dist: &DistSpec,
    p: f64,
    lambda: f64,
    variant: Variant,
    ma_coeffs: Option<&[f64]>,
) -> Result<RateConstants> {
    if !(lambda > 0.0) {
        return Err(invalid(format!("lambda must be positive, got {lambda}")));
    }
    let base = dist_constants(dist, p)?;
    match variant {
        Variant::Iid => {
            let zeta = base.zeta.ok_or_else(|| Error::ZetaAbsent(dist.label()))?;
            Ok(RateConstants {
                variant,
                p,
                lambda,
                rho: base.rho,
                c_ell: base.c_ell,
                zeta: Some(zeta),
                c_star: c_star_from_zeta(zeta, base.rho, p),
                c_dstar: c_dstar_from_zeta(zeta, p),
                c_a: 1.0,
            })
        }
        Variant::GaussianDependent => {
            if *dist != DistSpec::ChiSq1 {
                return Err(invalid("the dependent Gaussian variant needs chisq1 marginals"));
            }
            let c_a = match ma_coeffs {
                Some(a) => spectral_constant(a, p)?,
                None => 1.0,
            };
            Ok(RateConstants {
                variant,
                p,
                lambda,
                rho: base.rho,
                c_ell: base.c_ell,
                zeta: base.zeta,
                c_star: gaussian_c_star(p),
                c_dstar: gaussian_c_dstar(p),
                c_a,
            })
        }
    }
}

impl RateConstants {
    /// `k = 2 / (2p - 1)`, the exponent of the exponential term.
    pub fn decay_exponent(&self) -> f64 {
        2.0 / (2.0 * self.p - 1.0)
    }

    /// Exponent of the polynomial factor `(lambda h)^{...}`.
    pub fn polynomial_exponent(&self) -> f64 {
        match self.variant {
            Variant::Iid => (1.0 + 2.0 * self.rho * self.p) / (2.0 * self.p - 1.0),
            Variant::GaussianDependent => (1.0 - self.p) / (2.0 * self.p - 1.0),
        }
    }

    /// Coefficient `c` in `log phi ~ -c (lambda h)^{-k}`.
    ///
    /// For dependent Gaussian regressors the moving-average filter rescales
    /// the radius to `lambda h / C_A`, i.e. `c = C**_G C_A^k`.
    pub fn exponential_coefficient(&self) -> f64 {
        match self.variant {
            Variant::Iid => self.c_dstar,
            Variant::GaussianDependent => self.c_dstar * self.c_a.powf(self.decay_exponent()),
        }
    }

    /// `h^{poly} exp(-c (lambda h)^{-k})`, the `h`-dependent part of
    /// `n phi` in the CLT normalisation.
    pub fn rate_factor(&self, h: f64) -> f64 {
        let lh = self.lambda * h;
        h.powf(self.polynomial_exponent())
            * (-self.exponential_coefficient() * lh.powf(-self.decay_exponent())).exp()
    }
}

/// Two-term expansion of `log phi(h lambda)` without its additive constant.
pub fn predicted_log_small_ball(h: f64, consts: &RateConstants, lambda: f64) -> f64 {
    let lh = lambda * h;
    consts.polynomial_exponent() * lh.ln()
        - consts.exponential_coefficient() * lh.powf(-consts.decay_exponent())
}

/// `exp(-1/2 sum_j z_j^2 / gamma_j)`, the Gaussian shifted/centred small-ball
/// ratio for a diagonal covariance.
pub fn gaussian_shift_factor(z: &SeqPoint, gamma_diag: &[f64]) -> Result<f64> {
    if gamma_diag.iter().any(|g| !(*g > 0.0)) {
        return Err(invalid("covariance diagonal must be strictly positive"));
    }
    let mut q = 0.0;
    for (j, &zj) in z.coords().iter().enumerate() {
        if zj == 0.0 {
            continue;
        }
        let g = gamma_diag
            .get(j)
            .ok_or_else(|| invalid(format!("covariance does not cover coordinate {}", j + 1)))?;
        q += zj * zj / g;
    }
    Ok((-0.5 * q).exp())
}

/// Share of `sample` inside the ellipsoid `|| H^{-1}(x - X) || <= lambda`.
pub fn empirical_small_ball(sample: &[SeqPoint], x: &SeqPoint, sched: &BandwidthSchedule) -> Result<f64> {
    if sample.is_empty() {
        return Err(invalid("small-ball sample is empty"));
    }
    let tau = sample.iter().map(SeqPoint::tau).max().unwrap_or(0).max(x.tau());
    let inv_sq = sched.inverse_sq_bandwidths(tau);
    let r2 = sched.lambda() * sched.lambda();
    let hits = sample
        .iter()
        .filter(|z| weighted_sq_dist(z.coords(), x.coords(), &inv_sq) <= r2)
        .count();
    Ok(hits as f64 / sample.len() as f64)
}

/// Share of pairs `(t, t + lag)` with both points inside the ellipsoid.
pub fn empirical_joint_small_ball(
    series: &[SeqPoint],
    x: &SeqPoint,
    sched: &BandwidthSchedule,
    lag: usize,
) -> Result<f64> {
    if lag == 0 || series.len() <= lag {
        return Err(invalid(format!(
            "need 0 < lag < series length, got lag {lag} for length {}",
            series.len()
        )));
    }
    let tau = series.iter().map(SeqPoint::tau).max().unwrap_or(0).max(x.tau());
    let inv_sq = sched.inverse_sq_bandwidths(tau);
    let r2 = sched.lambda() * sched.lambda();
    let inside: Vec<bool> = series
        .iter()
        .map(|z| weighted_sq_dist(z.coords(), x.coords(), &inv_sq) <= r2)
        .collect();
    let pairs = series.len() - lag;
    let both = (0..pairs).filter(|&t| inside[t] && inside[t + lag]).count();
    Ok(both as f64 / pairs as f64)
}

/// Binomial standard error of a proportion.
pub fn binomial_stderr(phi: f64, n: usize) -> f64 {
    (phi * (1.0 - phi) / n as f64).sqrt()
}
