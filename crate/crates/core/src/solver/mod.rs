//! Optimal Gaussian forging strategy for a side-informed attacker.
//!
//! The attacker forges `v` from its observation `z` only, so `x` and `v` are
//! conditionally independent given `z`. The optimal joint law of `[x; v; z]`
//! is zero-mean circular Gaussian with covariance
//!
//! ```text
//! [ Kxx             Kxz Kzz^-1 Z^H          Kxz ]
//! [ Z Kzz^-1 Kzx    Z Kzz^-1 Z^H + C C^H    Z   ]
//! [ Kxz^H           Z^H                     Kzz ]
//! ```
//!
//! and [`solve`] finds `(Z, C)` in two stages: the closed-form optimum of the
//! problem without the PSD constraint ([`relaxed`]), projected onto the
//! feasible set ([`projection`]), then refined by fixed-point iteration
//! ([`iteration`]).

mod cost;
pub mod iteration;
pub mod perturb;
pub mod problem;
pub mod projection;
pub mod relaxed;

pub use iteration::iterate_fixed_point;
pub use perturb::{perturb_and_check, PerturbationReport};
pub use problem::Problem;
pub use projection::{is_feasible, project_to_feasible, ProjectionInfo};
pub use relaxed::solve_relaxed;

use crate::covmodel::JointChannelCovariance;
use crate::error::Error;
use crate::linalg;
use crate::scalar::Real;
use crate::CMatrix;

/// Unknowns of the attack covariance: `Z = K_vz` (n x m) and a factor `C`
/// (n x n) of the conditional covariance of `v` given `z`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackParameters<T: Real = f64> {
    pub z: CMatrix<T>,
    pub c: CMatrix<T>,
}

impl<T: Real> AttackParameters<T> {
    /// `X = Z Kzz^-1 Z^H + C C^H`.
    pub fn x(&self, k: &JointChannelCovariance<T>) -> Result<CMatrix<T>, Error<T>> {
        let kzz_inv = linalg::inv_hpd(k.kzz()).ok_or_else(|| Error::Precondition("Kzz is singular".into()))?;
        Ok(linalg::hermitian_part(&(&self.z * kzz_inv * self.z.adjoint() + &self.c * self.c.adjoint())))
    }

    /// `Y = Kxz Kzz^-1 Z^H`.
    pub fn y(&self, k: &JointChannelCovariance<T>) -> Result<CMatrix<T>, Error<T>> {
        let kzz_inv = linalg::inv_hpd(k.kzz()).ok_or_else(|| Error::Precondition("Kzz is singular".into()))?;
        Ok(k.kxz() * kzz_inv * self.z.adjoint())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions<T: Real = f64> {
    pub max_iter: usize,
    /// Stop when `|D(k+1) - D(k)| <= rel_tol * max(1, |D(k)|)` ...
    pub rel_tol: T,
    /// ... and the first-order residual is at most `tol_stat`.
    pub tol_stat: T,
    /// When false, only the divergence change is checked.
    pub require_stationarity: bool,
    /// Relaxation weight `w` in `(0, 1]`: each update is
    /// `(1 - w) * old + w * new`. `1` is the plain iteration; `1/2` damps
    /// the period-two oscillation some scenarios show. Fixed points are the
    /// same for every `w`.
    pub relaxation: T,
}

impl<T: Real> Default for SolveOptions<T> {
    fn default() -> Self {
        Self { max_iter: 200, rel_tol: T::lit(1e-10), tol_stat: T::lit(1e-7), require_stationarity: true, relaxation: T::one() }
    }
}

/// Closed-form stage of [`solve`].
#[derive(Debug, Clone, PartialEq)]
pub struct RelaxedSummary<T: Real = f64> {
    /// The relaxed optimum already satisfied the PSD constraint.
    pub feasible: bool,
    /// Cost of the relaxed optimum, a lower bound on `j_star`.
    pub j_cf: T,
    /// Cost of the projected starting point.
    pub j_projected: T,
    pub projection: ProjectionInfo<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttackSolution<T: Real = f64> {
    pub params: AttackParameters<T>,
    pub j_star: T,
    /// `j_star - 2n`, clamped at 0.
    pub d_star: T,
    pub iterations: usize,
    pub converged: bool,
    pub stationarity_residual: T,
    /// Divergence at the starting point and after every update.
    pub history: Vec<T>,
    /// Updates where `M` needed a ridge before inversion.
    pub regularized_steps: usize,
    /// False if the divergence ever increased along the iteration.
    pub monotone: bool,
    pub relaxed: Option<RelaxedSummary<T>>,
}

impl<T: Real> AttackSolution<T> {
    /// `eta = 100 (J_iter / J_cf - 1)`, percentage cost increase over the
    /// relaxed optimum.
    pub fn eta(&self) -> Option<T> {
        self.relaxed.as_ref().map(|r| T::lit(100.0) * (self.j_star / r.j_cf - T::one()))
    }

    pub fn projected(&self) -> bool {
        self.relaxed.as_ref().is_some_and(|r| !r.feasible)
    }
}

/// Optimal conditional law of the forgery: `v | z = a ~ CN(gain a, cond_cov)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackStrategy<T: Real = f64> {
    /// `Z Kzz^-1`
    pub gain: CMatrix<T>,
    /// `C C^H`
    pub cond_cov: CMatrix<T>,
}

/// Conditional mean gain and covariance of `v` given `z`.
pub fn extract_strategy<T: Real>(
    k: &JointChannelCovariance<T>,
    params: &AttackParameters<T>,
) -> Result<AttackStrategy<T>, Error<T>> {
    let kzz_inv = linalg::inv_hpd(k.kzz()).ok_or_else(|| Error::Precondition("Kzz is singular".into()))?;
    Ok(AttackStrategy {
        gain: &params.z * kzz_inv,
        cond_cov: linalg::hermitian_part(&(&params.c * params.c.adjoint())),
    })
}

/// Relaxed closed form, projection when needed, then fixed-point iteration.
pub fn solve<T: Real>(k: &JointChannelCovariance<T>, opts: &SolveOptions<T>) -> Result<AttackSolution<T>, Error<T>> {
    let p = Problem::new(k)?;
    solve_problem(&p, opts)
}

pub fn solve_problem<T: Real>(p: &Problem<'_, T>, opts: &SolveOptions<T>) -> Result<AttackSolution<T>, Error<T>> {
    let (z, x) = solve_relaxed(p)?;
    let feasible = is_feasible(p, &z, &x);
    let j_cf = p.cost_j_zx(&z, &x);
    // strictly positive feasible gaps pass through unchanged
    let (init, projection) = project_to_feasible(p, &z, &x);
    let j_projected = p.cost_j(&init);
    let mut sol = iterate_fixed_point(p, init, opts)?;
    sol.relaxed = Some(RelaxedSummary { feasible, j_cf, j_projected, projection });
    Ok(sol)
}

pub fn cost_j<T: Real>(k: &JointChannelCovariance<T>, params: &AttackParameters<T>) -> Result<T, Error<T>> {
    Ok(Problem::new(k)?.cost_j(params))
}

pub fn divergence_d<T: Real>(k: &JointChannelCovariance<T>, params: &AttackParameters<T>) -> Result<T, Error<T>> {
    Ok(Problem::new(k)?.divergence_d(params))
}

pub fn stationarity_residual<T: Real>(
    k: &JointChannelCovariance<T>,
    params: &AttackParameters<T>,
) -> Result<T, Error<T>> {
    Ok(Problem::new(k)?.stationarity_residual(params))
}

pub fn assemble_joint<T: Real>(
    k: &JointChannelCovariance<T>,
    params: &AttackParameters<T>,
) -> Result<CMatrix<T>, Error<T>> {
    Ok(Problem::new(k)?.assemble_joint(params))
}
