//! Tightest outer bound on the false-alarm / missed-detection region of
//! physical-layer authentication by channel-estimate comparison, against a
//! forger who only sees correlated side information `z`.
//!
//! The crate is organised bottom-up:
//!
//! - [`covmodel`]: joint second-order models of `(x, y, z)` and scenario builders.
//! - [`gaussian_info`]: Gaussian KL divergence, binary divergence and the
//!   `(alpha, beta)` region boundary.
//! - [`solver`]: the optimal Gaussian forging strategy: relaxed closed form,
//!   eigenvalue-clipping projection and fixed-point iteration.
//! - [`oracle`]: independent brute-force and finite-difference verifiers.
//! - [`format`]: plain-text scenario and solution files.
//!
//! All numerical code is generic over the real scalar type (see [`Real`]);
//! the aliases below fix it to `f64`, which is what the tolerances are tuned for.

// `!(a < b)` is used on purpose so that NaN fails the check
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod covmodel;
pub mod error;
pub mod format;
pub mod gaussian_info;
pub mod linalg;
pub mod oracle;
pub mod scalar;
pub mod solver;

pub use error::Error;
pub use scalar::Real;

pub use covmodel::{Field, JointChannelCovariance, ScenarioSpec, ValidationReport, Violation};
pub use gaussian_info::{beta_lower_bound, binary_divergence, kl_gaussian, region_boundary, ErrorRegionBound};
pub use solver::{
    AttackParameters, AttackSolution, AttackStrategy, PerturbationReport, SolveOptions,
};

/// Complex dense matrix over the scalar `T`.
pub type CMatrix<T> = nalgebra::DMatrix<num_complex::Complex<T>>;

pub type Covariance = JointChannelCovariance<f64>;
pub type Covariance32 = JointChannelCovariance<f32>;
pub type Parameters = AttackParameters<f64>;
pub type Solution = AttackSolution<f64>;
pub type Strategy = AttackStrategy<f64>;
pub type Options = SolveOptions<f64>;
pub type RegionBound = ErrorRegionBound<f64>;
pub type Result<V, T = f64> = std::result::Result<V, Error<T>>;
