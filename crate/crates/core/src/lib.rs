//! Nadaraya-Watson regression when the regressor is an infinite sequence.
//!
//! The crate covers the weighted sequence geometry, kernels, small-ball
//! probability constants, the estimator itself, Lambert-W bandwidth rules,
//! reproducible data generators and a Monte Carlo experiment harness.

pub mod bandwidth;
pub mod contraction;
pub mod datagen;
pub mod error;
pub mod estimator;
pub mod experiments;
pub mod kernels;
pub mod quadrature;
pub mod rng;
pub mod seqspace;
pub mod smallball;
pub mod stats;

pub use error::{Error, Result};
pub use estimator::{nw_estimate, NwEstimate, RegressionSample};
pub use kernels::{KernelKind, KernelSpec};
pub use seqspace::{BandwidthSchedule, SeqPoint};
pub use smallball::DistSpec;
