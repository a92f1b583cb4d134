//! Fixed-point iteration for the optimal `(Z, C)`.
//!
//! With `M(k) = Z(k) Kzz^-1 B Kzz^-1 Z(k)^H + C(k) C(k)^H`:
//!
//! ```text
//! C(k+1)^H = C(k)^H M(k)^-1 A
//! Z(k+1)^H = Kzx Kxx^-1 Kxy + B Kzz^-1 Z(k)^H M(k)^-1 A
//! ```
//!
//! Every iterate keeps `X - Z Kzz^-1 Z^H = C C^H`, so feasibility never has
//! to be restored.

use super::problem::Problem;
use super::{AttackParameters, AttackSolution, SolveOptions};
use crate::error::Error;
use crate::linalg::{self, HermitianEigen};
use crate::scalar::Real;

/// Run the iteration from `init` until the divergence stalls and the
/// first-order residual is below `opts.tol_stat`, or `opts.max_iter` steps.
pub fn iterate_fixed_point<T: Real>(
    p: &Problem<'_, T>,
    init: AttackParameters<T>,
    opts: &SolveOptions<T>,
) -> Result<AttackSolution<T>, Error<T>> {
    let w = opts.relaxation;
    if !(w > T::zero() && w <= T::one()) {
        return Err(Error::Domain(format!("relaxation weight {w} outside (0, 1]")));
    }
    let mut params = init;
    let mut d = p.divergence_d(&params);
    if !d.is_finite() {
        return Err(Error::Precondition("initial point has a singular [x;v] covariance".into()));
    }
    let mut history = vec![d];
    let mut regularized_steps = 0;
    let mut monotone = true;
    let mut converged = false;
    let mut residual = p.stationarity_residual(&params);
    let mut iterations = 0;

    while iterations < opts.max_iter {
        let (mut next, regularized) = step(p, &params).map_err(|reason| Error::Diverged {
            iteration: iterations,
            reason,
            last: Box::new(params.clone()),
        })?;
        if w < T::one() {
            let (keep, take) = (linalg::c(T::one() - w), linalg::c(w));
            next.z = params.z.map(|v| v * keep) + next.z.map(|v| v * take);
            next.c = params.c.map(|v| v * keep) + next.c.map(|v| v * take);
        }
        if regularized {
            regularized_steps += 1;
        }
        let d_next = p.divergence_d(&next);
        if !d_next.is_finite() {
            return Err(Error::Diverged {
                iteration: iterations,
                reason: "divergence became non-finite".into(),
                last: Box::new(params),
            });
        }
        iterations += 1;
        history.push(d_next);
        // allow round-off sized increases
        if d_next > d + T::lit(1e-12) * (T::one() + d.abs()) {
            monotone = false;
        }
        let stalled = (d_next - d).abs() <= opts.rel_tol * d.abs().max(T::one());
        params = next;
        d = d_next;
        if stalled {
            residual = p.stationarity_residual(&params);
            if !opts.require_stationarity || residual <= opts.tol_stat {
                converged = true;
                break;
            }
        }
    }
    if !converged {
        residual = p.stationarity_residual(&params);
    }

    let j = p.cost_j(&params);
    Ok(AttackSolution {
        j_star: j,
        d_star: (j - p.dim_xv()).max(T::zero()),
        params,
        iterations,
        converged,
        stationarity_residual: residual,
        history,
        regularized_steps,
        monotone,
        relaxed: None,
    })
}

/// One update; also reports whether `M` needed a ridge before inversion.
pub(crate) fn step<T: Real>(p: &Problem<'_, T>, params: &AttackParameters<T>) -> Result<(AttackParameters<T>, bool), String> {
    let mut m = p.inner(params);
    let ridge = p.tol_psd * linalg::trace_re(&m).abs();
    let regularize = HermitianEigen::new(&m).min() < ridge;
    if regularize {
        for i in 0..m.nrows() {
            m[(i, i)].re += ridge;
        }
    }
    let chol = linalg::cholesky(&m).ok_or_else(|| "inner matrix M is not positive definite".to_string())?;
    // W = M^-1 A
    let w = chol.solve(&p.a);
    let c_next = linalg::mul(&w.adjoint(), &params.c);
    let z_next = (&p.kzx_kxx_inv_kxy + linalg::mul(&linalg::mul(&p.b_kzz_inv, &params.z.adjoint()), &w)).adjoint();
    if !linalg::all_finite(&c_next) || !linalg::all_finite(&z_next) {
        return Err("non-finite iterate".into());
    }
    Ok((AttackParameters { z: z_next, c: c_next }, regularize))
}
