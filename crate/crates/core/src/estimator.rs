//! The Nadaraya-Watson estimator with sequence-valued regressors,
//!
//! ```text
//! m_hat(x) = sum_t K(||H^{-1}(x - X_t)||) Y_t / sum_t K(||H^{-1}(x - X_t)||),
//! ```
//!
//! plus the bias bound, variance approximation and CLT standardisation that
//! accompany it.

use serde::{Deserialize, Serialize};

use crate::contraction::ContractionSpec;
use crate::error::{invalid, Error, Result};
use crate::kernels::{RadialKernel, XiEstimate};
use crate::seqspace::{weighted_sq_dist, BandwidthSchedule, SeqPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Origin {
    Static,
    /// `X_t = (Y_{t-1}, ..., Y_{t-tau})`.
    Autoregressive { tau: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSample {
    y: Vec<f64>,
    x: Vec<SeqPoint>,
    origin: Origin,
}

impl RegressionSample {
    pub fn new(y: Vec<f64>, x: Vec<SeqPoint>) -> Result<Self> {
        if y.len() != x.len() {
            return Err(invalid(format!(
                "{} responses but {} regressors",
                y.len(),
                x.len()
            )));
        }
        Ok(Self { y, x, origin: Origin::Static })
    }

    /// Lag embedding of a scalar series. The first `tau` observations only
    /// serve as lags, so the sample has `series.len() - tau` rows.
    pub fn autoregressive(series: &[f64], tau: usize) -> Result<Self> {
        if tau == 0 || series.len() <= tau {
            return Err(invalid(format!(
                "lag embedding of order {tau} needs more than {tau} observations, got {}",
                series.len()
            )));
        }
        let mut y = Vec::with_capacity(series.len() - tau);
        let mut x = Vec::with_capacity(series.len() - tau);
        for t in tau..series.len() {
            y.push(series[t]);
            x.push(SeqPoint::new((1..=tau).map(|i| series[t - i]).collect())?);
        }
        Ok(Self { y, x, origin: Origin::Autoregressive { tau } })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn x(&self) -> &[SeqPoint] {
        &self.x
    }

    pub fn origin(&self) -> Origin {
        self.origin
    }

    /// Appends one observation; the sample becomes static.
    pub fn push(&mut self, y: f64, x: SeqPoint) {
        self.y.push(y);
        self.x.push(x);
        self.origin = Origin::Static;
    }

    /// Largest truncation among the regressors.
    pub fn tau(&self) -> usize {
        self.x.iter().map(SeqPoint::tau).max().unwrap_or(0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NwEstimate {
    pub value: f64,
    /// `sum_t K_t Y_t`.
    pub numer: f64,
    /// `sum_t K_t`.
    pub denom: f64,
    /// Observations with positive kernel weight.
    pub denom_count: usize,
    /// `n phi_hat`, the in-window count as a real number.
    pub effective_n: f64,
    /// Sample size the estimate was computed from.
    pub n: usize,
}

impl NwEstimate {
    /// `(m_hat_1, m_hat_2)` normalised by `n * scale`; with `scale = E K_1`
    /// this is the usual ratio decomposition. Passing the sample mean kernel
    /// weight gives `m_hat_1 = 1`.
    pub fn decompose(&self, scale: f64) -> (f64, f64) {
        let norm = self.n as f64 * scale;
        (self.denom / norm, self.numer / norm)
    }

    /// Fraction of the sample inside the window.
    pub fn phi_hat(&self) -> f64 {
        self.effective_n / self.n as f64
    }
}

/// Evaluates the estimator at `x`. An empty window is reported as
/// [`Error::EmptyWindow`], never as a division by zero.
pub fn nw_estimate<K: RadialKernel + ?Sized>(
    sample: &RegressionSample,
    x: &SeqPoint,
    kernel: &K,
    sched: &BandwidthSchedule,
) -> Result<NwEstimate> {
    if sample.is_empty() {
        return Err(invalid("regression sample is empty"));
    }
    let inv_sq = sched.inverse_sq_bandwidths(sample.tau().max(x.tau()));
    let mut numer = 0.0;
    let mut denom = 0.0;
    let mut count = 0usize;
    for (xt, &yt) in sample.x.iter().zip(&sample.y) {
        let u = weighted_sq_dist(xt.coords(), x.coords(), &inv_sq).sqrt();
        let w = kernel.eval(u);
        if w > 0.0 {
            numer += w * yt;
            denom += w;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::EmptyWindow);
    }
    Ok(NwEstimate {
        value: numer / denom,
        numer,
        denom,
        denom_count: count,
        effective_n: count as f64,
        n: sample.len(),
    })
}

/// `h^beta lambda^beta sum_j c_j j^{p beta}`.
pub fn bias_bound(h: f64, beta: f64, lambda: f64, cj: &ContractionSpec, p: f64) -> Result<f64> {
    if !(h >= 0.0) || !(beta > 0.0 && beta <= 1.0) || !(lambda > 0.0) {
        return Err(invalid(format!(
            "bias bound needs h >= 0, beta in (0, 1], lambda > 0; got {h}, {beta}, {lambda}"
        )));
    }
    let series = cj.weighted_sum(p * beta)?;
    Ok((h * lambda).powf(beta) * series)
}

/// `sigma^2 xi_2 / (n phi xi_1^2)`.
pub fn variance_approx(sigma2: f64, xi: &XiEstimate, n: usize, phi: f64) -> Result<f64> {
    if n == 0 || !(phi > 0.0) || !(xi.xi1 > 0.0) || sigma2 < 0.0 {
        return Err(invalid("variance approximation needs n >= 1, phi > 0, xi_1 > 0, sigma^2 >= 0"));
    }
    Ok(sigma2 * xi.xi2 / (n as f64 * phi * xi.xi1 * xi.xi1))
}

/// `sqrt(n rate_factor / variance) (m_hat - m - bias)`.
pub fn standardize_error(
    mhat: f64,
    m_true: f64,
    bias: f64,
    n: usize,
    rate_factor: f64,
    variance: f64,
) -> Result<f64> {
    if !(variance > 0.0) || !(rate_factor > 0.0) {
        return Err(invalid("standardisation needs variance > 0 and rate_factor > 0"));
    }
    Ok((n as f64 * rate_factor / variance).sqrt() * (mhat - m_true - bias))
}
