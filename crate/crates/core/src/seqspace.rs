//! Geometry of the weighted sequence space.
//!
//! Regressors live in `R^N` but are always handled through finite truncations
//! `x = (x_1, ..., x_tau, 0, 0, ...)`. The marginal bandwidths follow the
//! polynomial schedule `h_j = j^p * h`, which turns the Euclidean norm of
//! `H^{-1}(x - X)` into a weighted `l_2` norm.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest effective dimension a [`SeqPoint`] may carry.
pub const MAX_TAU: usize = 1_000_000_000;

/// Default cap on the number of points [`cover_grid`] may emit.
pub const DEFAULT_GRID_CAP: usize = 10_000_000;

/// Marginal bandwidths `h_j = j^p * h` and the kernel support radius `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthSchedule {
    p: f64,
    h: f64,
    lambda: f64,
}

impl BandwidthSchedule {
    /// `p = 0` is accepted for finite-dimensional sanity checks (unit weights);
    /// the rate theory needs `p > 1`.
    pub fn new(p: f64, h: f64, lambda: f64) -> Result<Self> {
        if !(p >= 0.0 && p.is_finite()) {
            return Err(invalid(format!("schedule exponent p must be >= 0, got {p}")));
        }
        if !(h > 0.0 && h.is_finite()) {
            return Err(invalid(format!("base bandwidth h must be > 0, got {h}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("support radius lambda must be > 0, got {lambda}")));
        }
        Ok(Self { p, h, lambda })
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Same schedule with a different base bandwidth.
    pub fn with_h(&self, h: f64) -> Result<Self> {
        Self::new(self.p, h, self.lambda)
    }

    /// Polynomial weight `phi_j = j^p` for a 1-based coordinate index.
    pub fn weight(&self, j: usize) -> f64 {
        (j as f64).powf(self.p)
    }

    /// Marginal bandwidth `h_j`.
    pub fn marginal(&self, j: usize) -> f64 {
        self.weight(j) * self.h
    }

    /// Precomputed `1 / h_j^2` for coordinates `1..=tau`.
    pub fn inverse_sq_bandwidths(&self, tau: usize) -> Vec<f64> {
        (1..=tau)
            .map(|j| {
                let hj = self.marginal(j);
                1.0 / (hj * hj)
            })
            .collect()
    }
}

/// A truncated element of `R^N`; coordinates past `tau()` are zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqPoint {
    coords: Vec<f64>,
}

impl SeqPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.len() > MAX_TAU {
            return Err(invalid(format!(
                "truncation {} exceeds the supported maximum {MAX_TAU}",
                coords.len()
            )));
        }
        Ok(Self { coords })
    }

    pub fn zeros(tau: usize) -> Self {
        Self { coords: vec![0.0; tau] }
    }

    pub fn tau(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    /// Coordinate `j` (1-based); zero beyond the truncation.
    pub fn get(&self, j: usize) -> f64 {
        if j == 0 {
            return 0.0;
        }
        self.coords.get(j - 1).copied().unwrap_or(0.0)
    }

    /// Zero-pads or truncates to exactly `tau` coordinates.
    pub fn resized(&self, tau: usize) -> Self {
        let mut coords = self.coords.clone();
        coords.resize(tau, 0.0);
        Self { coords }
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// Squared weighted distance given precomputed `1 / h_j^2` factors.
///
/// `inv_sq` must cover the union of both supports.
#[inline]
pub(crate) fn weighted_sq_dist(x: &[f64], center: &[f64], inv_sq: &[f64]) -> f64 {
    let tau = x.len().max(center.len());
    debug_assert!(inv_sq.len() >= tau);
    let mut acc = 0.0;
    for j in 0..tau {
        let a = x.get(j).copied().unwrap_or(0.0);
        let b = center.get(j).copied().unwrap_or(0.0);
        let d = a - b;
        acc += d * d * inv_sq[j];
    }
    acc
}

/// `|| H^{-1} (x - center) ||_2` over the union of both supports.
pub fn weighted_norm(x: &SeqPoint, center: &SeqPoint, sched: &BandwidthSchedule) -> f64 {
    let tau = x.tau().max(center.tau());
    let inv_sq = sched.inverse_sq_bandwidths(tau);
    weighted_sq_dist(x.coords(), center.coords(), &inv_sq).sqrt()
}

/// The set `S_tau` of points supported on the first `tau` coordinates with
/// sup-norm at most `lambda`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncSet {
    pub tau: usize,
    pub lambda: f64,
}

impl TruncSet {
    pub fn new(tau: usize, lambda: f64) -> Result<Self> {
        if tau == 0 || tau > MAX_TAU {
            return Err(invalid(format!("tau must lie in 1..={MAX_TAU}, got {tau}")));
        }
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("lambda must be > 0, got {lambda}")));
        }
        Ok(Self { tau, lambda })
    }

    pub fn contains(&self, u: &SeqPoint) -> bool {
        u.coords().iter().enumerate().all(|(i, &c)| {
            if i < self.tau {
                c.abs() <= self.lambda
            } else {
                c == 0.0
            }
        })
    }
}

/// Logarithm of the covering number of `S_tau` by Euclidean `eta`-balls:
/// `tau * ln(2 lambda sqrt(tau) / eta + 1)`.
pub fn kolmogorov_entropy(tau: usize, lambda: f64, eta: f64) -> Result<f64> {
    if tau == 0 {
        return Err(invalid("tau must be positive"));
    }
    if !(lambda > 0.0 && eta > 0.0) {
        return Err(invalid(format!("lambda and eta must be positive, got {lambda}, {eta}")));
    }
    let t = tau as f64;
    Ok(t * (2.0 * lambda * t.sqrt() / eta).ln_1p())
}

/// Points per coordinate used by [`cover_grid`].
fn grid_side(set: &TruncSet, eta: f64) -> usize {
    let ratio = 2.0 * set.lambda * (set.tau as f64).sqrt() / eta;
    ratio.ceil() as usize + 1
}

/// Number of points [`cover_grid`] would emit, as a float so huge grids can be
/// reported without overflow.
pub fn cover_grid_size(set: &TruncSet, eta: f64) -> f64 {
    (grid_side(set, eta) as f64).powi(set.tau as i32)
}

/// Axis-aligned lattice on `[-lambda, lambda]^tau` whose points are within
/// `eta` (Euclidean) of every point of `S_tau`.
///
/// Each axis carries `ceil(2 lambda sqrt(tau) / eta) + 1` equally spaced
/// nodes including both endpoints, so the spacing is at most
/// `eta / sqrt(tau)`.
pub fn cover_grid(set: &TruncSet, eta: f64, cap: usize) -> Result<Vec<SeqPoint>> {
    if !(eta > 0.0) || eta > 2.0 * set.lambda {
        return Err(invalid(format!(
            "eta must lie in (0, 2 lambda] = (0, {}], got {eta}",
            2.0 * set.lambda
        )));
    }
    let size = cover_grid_size(set, eta);
    if size > cap as f64 {
        return Err(Error::GridTooLarge { size, cap });
    }
    let side = grid_side(set, eta);
    let step = 2.0 * set.lambda / (side - 1) as f64;
    let axis: Vec<f64> = (0..side)
        .map(|i| {
            if i == side - 1 {
                set.lambda
            } else {
                -set.lambda + step * i as f64
            }
        })
        .collect();

    let total = size as usize;
    let mut out = Vec::with_capacity(total);
    let mut idx = vec![0usize; set.tau];
    for _ in 0..total {
        out.push(SeqPoint {
            coords: idx.iter().map(|&i| axis[i]).collect(),
        });
        // odometer increment, last coordinate fastest
        for d in (0..set.tau).rev() {
            idx[d] += 1;
            if idx[d] < side {
                break;
            }
            idx[d] = 0;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pt(v: &[f64]) -> SeqPoint {
        SeqPoint::new(v.to_vec()).unwrap()
    }

    #[test]
    fn norm_of_identical_points_is_zero() {
        let s = BandwidthSchedule::new(2.0, 0.3, 1.0).unwrap();
        let x = pt(&[0.4, -1.2, 3.0]);
        assert_eq!(weighted_norm(&x, &x, &s), 0.0);
    }

    #[test]
    fn norm_single_coordinate() {
        let s = BandwidthSchedule::new(1.0, 1.0, 1.0).unwrap();
        let d = weighted_norm(&pt(&[0.0, 2.0]), &SeqPoint::zeros(1), &s);
        assert!((d - 1.0).abs() < 1e-15);
    }

    #[test]
    fn norm_three_terms() {
        let s = BandwidthSchedule::new(2.0, 0.5, 1.0).unwrap();
        // independent summation: sum_j (1 / (j^2 * 0.5))^2
        let mut oracle = 0.0;
        for j in 1..=3 {
            let hj = (j * j) as f64 * 0.5;
            oracle += 1.0 / (hj * hj);
        }
        assert!((oracle - 4.299_382_716_049_383).abs() < 1e-12);
        let d = weighted_norm(&pt(&[1.0, 1.0, 1.0]), &SeqPoint::zeros(3), &s);
        assert!((d - oracle.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn schedule_rejects_bad_parameters() {
        assert!(BandwidthSchedule::new(-1.0, 1.0, 1.0).is_err());
        assert!(BandwidthSchedule::new(2.0, 0.0, 1.0).is_err());
        assert!(BandwidthSchedule::new(2.0, 1.0, -1.0).is_err());
    }

    #[test]
    fn entropy_examples() {
        let e = kolmogorov_entropy(1, 1.0, 2.0).unwrap();
        assert!((e - 2f64.ln()).abs() < 1e-15);
        let e = kolmogorov_entropy(2, 1.0, 1.0).unwrap();
        assert!((e - 2.0 * (2.0 * 2f64.sqrt() + 1.0).ln()).abs() < 1e-14);
        assert!(kolmogorov_entropy(0, 1.0, 1.0).is_err());
        assert!(kolmogorov_entropy(1, 1.0, 0.0).is_err());
    }

    #[test]
    fn entropy_is_of_order_log_squared() {
        // tau = ceil(ln n), eta = ln n / n
        let ratios: Vec<f64> = [1e3, 1e4, 1e5, 1e6, 1e7, 1e8, 1e9]
            .iter()
            .map(|&n: &f64| {
                let l = n.ln();
                let e = kolmogorov_entropy(l.ceil() as usize, 1.0, l / n).unwrap();
                e / (l * l)
            })
            .collect();
        for r in &ratios {
            assert!(*r > 0.5 && *r < 4.0, "ratio {r} left the band");
        }
    }

    #[test]
    fn one_dimensional_grid() {
        let g = cover_grid(&TruncSet::new(1, 1.0).unwrap(), 1.0, DEFAULT_GRID_CAP).unwrap();
        let v: Vec<f64> = g.iter().map(|p| p.coords()[0]).collect();
        assert_eq!(v, vec![-1.0, 0.0, 1.0]);
    }

    #[test]
    fn corners_are_covered() {
        let set = TruncSet::new(2, 1.0).unwrap();
        let g = cover_grid(&set, 0.5, DEFAULT_GRID_CAP).unwrap();
        for &a in &[-1.0, 1.0] {
            for &b in &[-1.0, 1.0] {
                let best = g
                    .iter()
                    .map(|q| ((q.coords()[0] - a).powi(2) + (q.coords()[1] - b).powi(2)).sqrt())
                    .fold(f64::INFINITY, f64::min);
                assert!(best <= 0.5);
            }
        }
    }

    #[test]
    fn grid_cap_and_eta_checks() {
        let set = TruncSet::new(12, 1.0).unwrap();
        assert!(matches!(cover_grid(&set, 1.0, DEFAULT_GRID_CAP), Err(Error::GridTooLarge { .. })));
        let set = TruncSet::new(2, 1.0).unwrap();
        assert!(cover_grid(&set, 2.5, DEFAULT_GRID_CAP).is_err());
    }

    #[test]
    fn membership() {
        let s = TruncSet::new(2, 1.0).unwrap();
        assert!(s.contains(&pt(&[1.0, -1.0])));
        assert!(s.contains(&pt(&[0.5, 0.5, 0.0])));
        assert!(!s.contains(&pt(&[0.5, 0.5, 0.1])));
        assert!(!s.contains(&pt(&[1.5])));
    }
}
