//! Univariate radial kernels on `[0, lambda]` and the Monte Carlo estimate of
//! the limits `xi_j = lim E[K^j(||H^{-1}(x - X)||)] / phi_x(h lambda)`.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::rng::StreamRng;
use crate::seqspace::{weighted_sq_dist, BandwidthSchedule, SeqPoint};

/// Anything that maps a nonnegative radius to a nonnegative weight.
pub trait RadialKernel {
    fn eval(&self, u: f64) -> f64;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum KernelKind {
    /// Flat kernel, type I.
    #[serde(rename = "uniform")]
    UniformI,
    /// `(3/2)(1 - v^2)` on `[0, 1]`, type II.
    #[serde(rename = "epanechnikov")]
    EpanechnikovII,
    /// `(15/8)(1 - v^2)^2` on `[0, 1]`, type II.
    #[serde(rename = "biweight")]
    BiweightII,
    /// `2(1 - v)` on `[0, 1]`, type II.
    #[serde(rename = "bartlett")]
    BartlettII,
    /// One-sided Gaussian, semi-infinite support, type III.
    #[serde(rename = "gaussian")]
    GaussianIII,
}

impl KernelKind {
    pub fn is_compact(self) -> bool {
        !matches!(self, KernelKind::GaussianIII)
    }

    pub fn name(self) -> &'static str {
        match self {
            KernelKind::UniformI => "uniform",
            KernelKind::EpanechnikovII => "epanechnikov",
            KernelKind::BiweightII => "biweight",
            KernelKind::BartlettII => "bartlett",
            KernelKind::GaussianIII => "gaussian",
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for KernelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(KernelKind::UniformI),
            "epanechnikov" => Ok(KernelKind::EpanechnikovII),
            "biweight" => Ok(KernelKind::BiweightII),
            "bartlett" | "triangular" => Ok(KernelKind::BartlettII),
            "gaussian" => Ok(KernelKind::GaussianIII),
            other => Err(invalid(format!("unknown kernel `{other}`"))),
        }
    }
}

/// A built-in kernel together with its support radius `lambda`.
///
/// For the Gaussian kernel `lambda` is the scale; its support is `[0, inf)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kind: KernelKind,
    pub lambda: f64,
}

impl KernelSpec {
    pub fn new(kind: KernelKind, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(invalid(format!("kernel lambda must be > 0, got {lambda}")));
        }
        Ok(Self { kind, lambda })
    }

    /// `(C_1, C_2)`: flat envelopes with `C_1 1[0,lambda] <= K <= C_2 1[0,lambda]`.
    /// `C_1` is zero for type II kernels; type III has no envelope.
    pub fn envelope(&self) -> Option<(f64, f64)> {
        let l = self.lambda;
        match self.kind {
            KernelKind::UniformI => Some((1.0 / l, 1.0 / l)),
            KernelKind::EpanechnikovII => Some((0.0, 1.5 / l)),
            KernelKind::BiweightII => Some((0.0, 15.0 / (8.0 * l))),
            KernelKind::BartlettII => Some((0.0, 2.0 / l)),
            KernelKind::GaussianIII => None,
        }
    }

    /// `(C_3, C_4)`: infimum and supremum of `K'` on `(0, lambda)` for type II
    /// kernels. The supremum is attained only as a limit at an endpoint for
    /// the Epanechnikov and biweight kernels.
    pub fn derivative_bounds(&self) -> Option<(f64, f64)> {
        let l2 = self.lambda * self.lambda;
        match self.kind {
            KernelKind::EpanechnikovII => Some((-3.0 / l2, 0.0)),
            // max of v(1 - v^2) is 2 / (3 sqrt 3) at v = 1/sqrt 3
            KernelKind::BiweightII => Some((-5.0 / 3f64.sqrt() / l2, 0.0)),
            KernelKind::BartlettII => Some((-2.0 / l2, -2.0 / l2)),
            _ => None,
        }
    }

    /// `sup K`, attained at zero for every built-in kernel.
    pub fn peak(&self) -> f64 {
        self.eval(0.0)
    }
}

impl RadialKernel for KernelSpec {
    fn eval(&self, u: f64) -> f64 {
        kernel_eval(self, u)
    }
}

/// `K(u)` for `u >= 0`, normalised to unit mass on its support.
pub fn kernel_eval(spec: &KernelSpec, u: f64) -> f64 {
    let l = spec.lambda;
    let v = u / l;
    if spec.kind.is_compact() && !(v <= 1.0) {
        return 0.0;
    }
    let base = match spec.kind {
        KernelKind::UniformI => 1.0,
        KernelKind::EpanechnikovII => 1.5 * (1.0 - v * v),
        KernelKind::BiweightII => {
            let w = 1.0 - v * v;
            15.0 / 8.0 * w * w
        }
        KernelKind::BartlettII => 2.0 * (1.0 - v),
        KernelKind::GaussianIII => (2.0 / PI).sqrt() * (-0.5 * v * v).exp(),
    };
    base / l
}

/// `K(|| H^{-1}(x - center) ||)`.
pub fn spherical_weight(
    spec: &KernelSpec,
    x: &SeqPoint,
    center: &SeqPoint,
    sched: &BandwidthSchedule,
) -> f64 {
    kernel_eval(spec, crate::seqspace::weighted_norm(x, center, sched))
}

/// Monte Carlo estimate of `(xi_1, xi_2)` with delta-method standard errors.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct XiEstimate {
    pub xi1: f64,
    pub xi2: f64,
    pub stderr1: f64,
    pub stderr2: f64,
    pub n_mc: usize,
    /// Draws that fell inside the ellipsoid.
    pub hits: usize,
}

impl XiEstimate {
    /// Known constants with no sampling error, e.g. for the flat kernel.
    pub fn exact(xi1: f64, xi2: f64) -> Self {
        Self { xi1, xi2, stderr1: 0.0, stderr2: 0.0, n_mc: 0, hits: 0 }
    }
}

/// Ratio estimator `mean(K^j) / mean(1{u <= lambda})` for `j = 1, 2`.
///
/// `draw` produces one regressor per call from the supplied stream; `seed`
/// keys that stream.
pub fn estimate_xi<F>(
    spec: &KernelSpec,
    mut draw: F,
    x: &SeqPoint,
    sched: &BandwidthSchedule,
    n_mc: usize,
    seed: u64,
) -> Result<XiEstimate>
where
    F: FnMut(&mut StreamRng) -> SeqPoint,
{
    if n_mc < 1000 {
        return Err(invalid(format!("n_mc must be at least 1000, got {n_mc}")));
    }
    let mut rng = crate::rng::stream(seed, &[crate::rng::purpose::XI]);
    let lambda = sched.lambda();
    let mut inv_sq = sched.inverse_sq_bandwidths(x.tau());
    let mut k1 = Vec::with_capacity(n_mc);
    let mut inside = Vec::with_capacity(n_mc);
    for _ in 0..n_mc {
        let z = draw(&mut rng);
        if z.tau() > inv_sq.len() {
            inv_sq = sched.inverse_sq_bandwidths(z.tau());
        }
        let u = weighted_sq_dist(z.coords(), x.coords(), &inv_sq).sqrt();
        k1.push(kernel_eval(spec, u));
        inside.push(u <= lambda);
    }
    let hits = inside.iter().filter(|&&b| b).count();
    if hits == 0 {
        return Err(Error::ZeroSmallBall);
    }
    let n = n_mc as f64;
    let phi = hits as f64 / n;
    let ratio = |pow: i32| -> (f64, f64) {
        let mean_k: f64 = k1.iter().map(|k| k.powi(pow)).sum::<f64>() / n;
        let r = mean_k / phi;
        let ss: f64 = k1
            .iter()
            .zip(&inside)
            .map(|(k, &i)| {
                let d = k.powi(pow) - if i { r } else { 0.0 };
                d * d
            })
            .sum();
        let se = (ss / n).sqrt() / (n.sqrt() * phi);
        (r, se)
    };
    let (xi1, stderr1) = ratio(1);
    let (xi2, stderr2) = ratio(2);
    Ok(XiEstimate { xi1, xi2, stderr1, stderr2, n_mc, hits })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::{integrate, integrate_to_infinity};
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    const ALL: [KernelKind; 5] = [
        KernelKind::UniformI,
        KernelKind::EpanechnikovII,
        KernelKind::BiweightII,
        KernelKind::BartlettII,
        KernelKind::GaussianIII,
    ];

    #[test]
    fn point_values() {
        let u = KernelSpec::new(KernelKind::UniformI, 1.0).unwrap();
        assert_eq!(kernel_eval(&u, 0.3), 1.0);
        let e = KernelSpec::new(KernelKind::EpanechnikovII, 1.0).unwrap();
        assert_eq!(kernel_eval(&e, 0.0), 1.5);
        for kind in ALL.iter().filter(|k| k.is_compact()) {
            for &l in &[0.5, 1.0, 2.0] {
                let s = KernelSpec::new(*kind, l).unwrap();
                assert_eq!(kernel_eval(&s, l + 0.01), 0.0);
            }
        }
    }

    #[test]
    fn unit_mass() {
        for kind in ALL {
            for &l in &[0.5, 1.0, 3.0] {
                let s = KernelSpec::new(kind, l).unwrap();
                let mass = if kind.is_compact() {
                    integrate(|u| kernel_eval(&s, u), 0.0, l, 1e-13, 1e-13).unwrap().value
                } else {
                    integrate_to_infinity(|u| kernel_eval(&s, u), 0.0, 1e-13, 1e-13)
                        .unwrap()
                        .value
                };
                assert!((mass - 1.0).abs() < 1e-8, "{kind} lambda={l}: {mass}");
            }
        }
    }

    #[test]
    fn envelopes_and_derivatives_hold() {
        for kind in ALL.iter().filter(|k| k.is_compact()) {
            let s = KernelSpec::new(*kind, 1.5).unwrap();
            let (c1, c2) = s.envelope().unwrap();
            let grid: Vec<f64> = (1..1000).map(|i| 1.5 * i as f64 / 1000.0).collect();
            for &u in &grid {
                let k = kernel_eval(&s, u);
                assert!(k >= c1 - 1e-15 && k <= c2 + 1e-15);
            }
            if let Some((c3, c4)) = s.derivative_bounds() {
                for w in grid.windows(2) {
                    let d = (kernel_eval(&s, w[1]) - kernel_eval(&s, w[0])) / (w[1] - w[0]);
                    assert!(d >= c3 - 1e-6 && d <= c4 + 1e-6, "{kind}: slope {d}");
                }
            }
        }
    }

    #[test]
    fn spherical_weight_cases() {
        let sched = BandwidthSchedule::new(2.0, 0.5, 1.0).unwrap();
        let x = SeqPoint::new(vec![0.2, -0.1]).unwrap();
        let e = KernelSpec::new(KernelKind::EpanechnikovII, 1.0).unwrap();
        assert_eq!(spherical_weight(&e, &x, &x, &sched), e.peak());
        let far = SeqPoint::new(vec![5.0, 0.0]).unwrap();
        assert_eq!(spherical_weight(&e, &far, &x, &sched), 0.0);
        let flat = KernelSpec::new(KernelKind::UniformI, 2.0).unwrap();
        let sched2 = BandwidthSchedule::new(2.0, 0.5, 2.0).unwrap();
        let near = SeqPoint::new(vec![0.6, 0.3]).unwrap();
        assert_eq!(spherical_weight(&flat, &near, &x, &sched2), 0.5);
    }

    fn gaussian_draw(tau: usize) -> impl FnMut(&mut StreamRng) -> SeqPoint {
        move |rng| {
            SeqPoint::new((0..tau).map(|_| StandardNormal.sample(rng)).collect()).unwrap()
        }
    }

    #[test]
    fn flat_kernel_xi_is_exact() {
        for &l in &[1.0, 2.0] {
            let spec = KernelSpec::new(KernelKind::UniformI, l).unwrap();
            let sched = BandwidthSchedule::new(2.0, 0.6, l).unwrap();
            let xi = estimate_xi(&spec, gaussian_draw(20), &SeqPoint::zeros(20), &sched, 5000, 3)
                .unwrap();
            assert!((xi.xi1 - 1.0 / l).abs() < 1e-12);
            assert!((xi.xi2 - 1.0 / (l * l)).abs() < 1e-12);
        }
    }

    #[test]
    fn epanechnikov_xi_reproducible_across_seeds() {
        let spec = KernelSpec::new(KernelKind::EpanechnikovII, 1.0).unwrap();
        let sched = BandwidthSchedule::new(2.0, 0.5, 1.0).unwrap();
        let x = SeqPoint::zeros(20);
        let a = estimate_xi(&spec, gaussian_draw(20), &x, &sched, 50_000, 11).unwrap();
        let b = estimate_xi(&spec, gaussian_draw(20), &x, &sched, 50_000, 12).unwrap();
        let s1 = (a.stderr1.powi(2) + b.stderr1.powi(2)).sqrt();
        let s2 = (a.stderr2.powi(2) + b.stderr2.powi(2)).sqrt();
        assert!((a.xi1 - b.xi1).abs() < 3.0 * s1);
        assert!((a.xi2 - b.xi2).abs() < 3.0 * s2);
        // type II sandwich from the envelope
        let (_, c2) = spec.envelope().unwrap();
        assert!(a.xi1 > 0.0 && a.xi1 <= c2 + 3.0 * a.stderr1);
        assert!(a.xi2 > 0.0 && a.xi2 <= c2 * c2 + 3.0 * a.stderr2);
    }

    #[test]
    fn zero_small_ball_is_reported() {
        let spec = KernelSpec::new(KernelKind::EpanechnikovII, 1.0).unwrap();
        let sched = BandwidthSchedule::new(2.0, 1e-3, 1.0).unwrap();
        let r = estimate_xi(&spec, gaussian_draw(5), &SeqPoint::zeros(5), &sched, 1000, 1);
        assert_eq!(r, Err(Error::ZeroSmallBall));
    }

    #[test]
    fn gaussian_kernel_ratio_escapes() {
        // the ratio E[K]/phi for a type III kernel grows as h shrinks
        let spec = KernelSpec::new(KernelKind::GaussianIII, 1.0).unwrap();
        let x = SeqPoint::zeros(20);
        let at = |h: f64| {
            let sched = BandwidthSchedule::new(2.0, h, 1.0).unwrap();
            estimate_xi(&spec, gaussian_draw(20), &x, &sched, 200_000, 5).unwrap()
        };
        let coarse = at(0.4);
        let fine = at(0.1);
        assert!(fine.xi1 > coarse.xi1, "{} vs {}", fine.xi1, coarse.xi1);
    }

    proptest! {
        #[test]
        fn type_two_kernels_decrease(a in 0.0f64..1.0, b in 0.0f64..1.0, l in 0.2f64..4.0) {
            let (u1, u2) = if a < b { (a * l, b * l) } else { (b * l, a * l) };
            for kind in [KernelKind::EpanechnikovII, KernelKind::BiweightII, KernelKind::BartlettII] {
                let s = KernelSpec::new(kind, l).unwrap();
                prop_assert!(kernel_eval(&s, u1) >= kernel_eval(&s, u2));
            }
        }
    }
}
