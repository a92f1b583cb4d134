//! Feasibility test and eigenvalue-clipping projection of a relaxed
//! `(Z, X)` onto parameters with `X - Z Kzz^-1 Z^H = C C^H >= 0`.

use super::problem::Problem;
use super::AttackParameters;
use crate::linalg::{self, HermitianEigen};
use crate::scalar::Real;
use crate::CMatrix;

/// What the projection did.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ProjectionInfo<T: Real = f64> {
    /// Eigenvalues at or below `tol_psd` that were replaced.
    pub clipped: usize,
    /// Replacement value, `None` if nothing was clipped.
    pub epsilon: Option<T>,
    /// No eigenvalue was positive, so `epsilon` came from the fallback
    /// `1e-2 * max(1, mean diag X)`.
    pub fallback: bool,
    /// Smallest eigenvalue of `X - Z Kzz^-1 Z^H` before clipping.
    pub min_eigenvalue: T,
}

/// `X - Z Kzz^-1 Z^H`, Hermitian part.
pub fn feasibility_gap<T: Real>(p: &Problem<'_, T>, z: &CMatrix<T>, x: &CMatrix<T>) -> CMatrix<T> {
    linalg::hermitian_part(&(x - z * &p.kzz_inv * z.adjoint()))
}

/// True iff `X - Z Kzz^-1 Z^H` has no eigenvalue below `-tol_psd`.
pub fn is_feasible<T: Real>(p: &Problem<'_, T>, z: &CMatrix<T>, x: &CMatrix<T>) -> bool {
    linalg::min_eigenvalue(&feasibility_gap(p, z, x)) >= -p.tol_psd
}

/// Eigendecompose `X - Z Kzz^-1 Z^H = T diag(d_1..d_k, delta_1..delta_h) T^H`,
/// replace every `delta_i <= tol_psd` by `eps = d_k / 100` and return `Z`
/// together with the Hermitian square root `C` of the clipped matrix.
pub fn project_to_feasible<T: Real>(
    p: &Problem<'_, T>,
    z: &CMatrix<T>,
    x: &CMatrix<T>,
) -> (AttackParameters<T>, ProjectionInfo<T>) {
    let eig = HermitianEigen::new(&feasibility_gap(p, z, x));
    let tol = p.tol_psd;
    let clipped = eig.values.iter().filter(|&&v| v <= tol).count();
    let smallest_positive = eig.values.iter().copied().filter(|&v| v > tol).last();

    let mut info = ProjectionInfo { clipped, epsilon: None, fallback: false, min_eigenvalue: eig.min() };
    let eps = match smallest_positive {
        Some(dk) => dk / T::lit(100.0),
        None => {
            info.fallback = true;
            let n = x.nrows().max(1);
            let mean_diag = linalg::trace_re(x) / T::count(n);
            T::lit(1e-2) * mean_diag.max(T::one())
        }
    };
    if clipped > 0 {
        info.epsilon = Some(eps);
    }
    let c = eig.map(|v| if v > tol { v.sqrt() } else { eps.sqrt() });
    (AttackParameters { z: z.clone(), c }, info)
}
