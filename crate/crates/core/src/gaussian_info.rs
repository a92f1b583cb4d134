//! Information measures in nats: KL divergence between zero-mean circular
//! complex Gaussians, the binary divergence and the inversion of a divergence
//! budget into a lower boundary on the missed-detection probability.
//!
//! Divergences that are infinite come back as `T::infinity()`, not as errors.

use std::fmt::Write as _;

use crate::error::Error;
use crate::linalg;
use crate::scalar::Real;
use crate::CMatrix;

/// Absolute tolerance on `f` for the boundary root.
pub const TOL_ROOT: f64 = 1e-12;
const MAX_BISECTION: usize = 200;

/// `D(N(0, K0) || N(0, K1)) = tr(K1^-1 K0) - log det(K0 K1^-1) - d`.
///
/// Circular-symmetric convention (no factor 1/2). `K1` must be positive
/// definite; a singular `K0` gives `+inf`.
pub fn kl_gaussian<T: Real>(k0: &CMatrix<T>, k1: &CMatrix<T>) -> Result<T, Error<T>> {
    let d = k0.nrows();
    if k0.ncols() != d || k1.nrows() != d || k1.ncols() != d {
        return Err(Error::Dimension(format!(
            "kl_gaussian: {}x{} vs {}x{}",
            k0.nrows(),
            k0.ncols(),
            k1.nrows(),
            k1.ncols()
        )));
    }
    let ld1 = linalg::logdet_hpd(k1).ok_or_else(|| Error::Precondition("K1 is not positive definite".into()))?;
    let k1_inv = linalg::inv_hpd(k1).ok_or_else(|| Error::Precondition("K1 is not positive definite".into()))?;
    let Some(ld0) = linalg::logdet_hpd(k0) else {
        return Ok(T::infinity());
    };
    let tr = linalg::trace_of_product(&k1_inv, k0);
    Ok(tr - (ld0 - ld1) - T::count(d))
}

/// `f(phi, psi) = phi ln(phi / (1 - psi)) + (1 - phi) ln((1 - phi) / psi)`,
/// the divergence between Bernoulli(phi) and Bernoulli(1 - psi), with
/// `0 ln 0 = 0`.
pub fn binary_divergence<T: Real>(phi: T, psi: T) -> Result<T, Error<T>> {
    let unit = |v: T| v >= T::zero() && v <= T::one();
    if !unit(phi) || !unit(psi) {
        return Err(Error::Domain(format!("binary_divergence({phi}, {psi}) needs arguments in [0, 1]")));
    }
    // round-off in 1 - psi can push equal arguments slightly negative
    Ok((xlogy_ratio(phi, T::one() - psi) + xlogy_ratio(T::one() - phi, psi)).max(T::zero()))
}

// p ln(p / q) with the usual conventions
fn xlogy_ratio<T: Real>(p: T, q: T) -> T {
    if p == T::zero() {
        T::zero()
    } else if q == T::zero() {
        T::infinity()
    } else {
        p * (p / q).ln()
    }
}

fn root_tol<T: Real>() -> T {
    T::lit(TOL_ROOT).max(T::default_epsilon() * T::lit(64.0))
}

/// Smallest `beta` in `[0, 1 - alpha]` with `f(beta, alpha) <= d_star`.
///
/// `f(., alpha)` decreases from `f(0, alpha) = -ln(alpha)` down to
/// `f(1 - alpha, alpha) = 0`, so bisection brackets the crossing.
pub fn beta_lower_bound<T: Real>(alpha: T, d_star: T) -> Result<T, Error<T>> {
    if !(alpha >= T::zero() && alpha < T::one()) {
        return Err(Error::Domain(format!("alpha = {alpha} must lie in [0, 1)")));
    }
    if !(d_star >= T::zero()) {
        return Err(Error::Domain(format!("d_star = {d_star} must be nonnegative")));
    }
    let top = T::one() - alpha;
    let f = |beta: T| binary_divergence(beta.min(T::one()), alpha).unwrap_or_else(|_| T::infinity());
    if d_star == T::zero() {
        return Ok(top);
    }
    if f(T::zero()) <= d_star {
        return Ok(T::zero());
    }
    let tol = root_tol::<T>();
    // invariant: f(lo) > d_star >= f(hi)
    let (mut lo, mut hi) = (T::zero(), top);
    for _ in 0..MAX_BISECTION {
        let mid = (lo + hi) * T::lit(0.5);
        if mid <= lo || mid >= hi {
            break;
        }
        let v = f(mid);
        if v > d_star {
            lo = mid;
        } else {
            hi = mid;
            if d_star - v <= tol {
                break;
            }
        }
    }
    Ok(hi)
}

/// Sampled lower boundary of the achievable `(alpha, beta)` region.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorRegionBound<T: Real = f64> {
    pub d_star: T,
    /// `(alpha, beta_low)` pairs in increasing `alpha`.
    pub points: Vec<(T, T)>,
}

impl<T: Real> ErrorRegionBound<T> {
    /// CSV with header `alpha,beta_low`, shortest round-trip formatting.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("alpha,beta_low\n");
        for (a, b) in &self.points {
            let _ = writeln!(out, "{a},{b}");
        }
        out
    }
}

/// Apply [`beta_lower_bound`] at every point of a strictly increasing grid
/// inside `[0, 1)`.
pub fn region_boundary<T: Real>(d_star: T, alpha_grid: &[T]) -> Result<ErrorRegionBound<T>, Error<T>> {
    if alpha_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Domain("alpha grid must be strictly increasing".into()));
    }
    let points = alpha_grid
        .iter()
        .map(|&a| beta_lower_bound(a, d_star).map(|b| (a, b)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(ErrorRegionBound { d_star, points })
}

/// `k` evenly spaced interior points `1/(k+1), ..., k/(k+1)`.
pub fn uniform_alpha_grid<T: Real>(k: usize) -> Vec<T> {
    (1..=k).map(|i| T::count(i) / T::count(k + 1)).collect()
}
