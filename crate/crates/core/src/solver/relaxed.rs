//! Closed-form minimiser of the cost when the covariance of `[x; v; z]` is
//! not required to be positive semidefinite.

use super::problem::Problem;
use crate::error::Error;
use crate::linalg;
use crate::scalar::Real;
use crate::CMatrix;

/// Eigenvalues at or below this fraction of the largest are dropped by the
/// pseudo-inverse.
pub const PINV_RCOND: f64 = 1e-12;

/// `(Z, X)` of the relaxed problem:
///
/// ```text
/// G = Kxz^H Kxx^-1 Kxz
/// Z = Kxy^H Kxx^-1 Kxz G^+ Kzz
/// X = Kyy - Kxy^H Kxx^-1/2 [I - Kxx^-1/2 Kxz G^+ Kxz^H Kxx^-1/2] Kxx^-1/2 Kxy
/// ```
pub fn solve_relaxed<T: Real>(p: &Problem<'_, T>) -> Result<(CMatrix<T>, CMatrix<T>), Error<T>> {
    let k = p.k;
    let n = p.n();
    let kxx_isqrt =
        linalg::inv_sqrtm_pd(k.kxx()).ok_or_else(|| Error::Precondition("Kxx is singular".into()))?;
    let g = linalg::hermitian_part(&(k.kxz().adjoint() * &p.kxx_inv * k.kxz()));
    let g_pinv = linalg::pinv_hermitian(&g, T::lit(PINV_RCOND));

    let z = k.kxy().adjoint() * &p.kxx_inv * k.kxz() * &g_pinv * k.kzz();

    let w = &kxx_isqrt * k.kxz();
    let proj = &w * &g_pinv * w.adjoint();
    let middle = linalg::identity::<T>(n) - proj;
    let outer = &kxx_isqrt * k.kxy();
    let x = linalg::hermitian_part(&(k.kyy() - outer.adjoint() * middle * outer));
    Ok((z, x))
}
