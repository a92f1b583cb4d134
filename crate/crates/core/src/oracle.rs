//! Independent checks for the solver: exhaustive grid search on scalar
//! instances, central finite differences of the cost and the zero-block
//! pattern of the assembled inverse.
//!
//! The grid search evaluates the cost from its scalar 2x2 closed form and
//! shares no code with the matrix routines it is used to check.

use num_complex::Complex;

use crate::covmodel::JointChannelCovariance;
use crate::error::Error;
use crate::linalg;
use crate::scalar::Real;
use crate::solver::{AttackParameters, Problem};
use crate::CMatrix;

const MAX_GRID_POINTS: u128 = 100_000_000;

/// Rectangular grid over real scalar `(z, c)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec<T: Real = f64> {
    pub z_range: (T, T),
    pub c_range: (T, T),
    pub step: T,
}

impl<T: Real> GridSpec<T> {
    fn axis_len(&self, (lo, hi): (T, T)) -> Result<usize, Error<T>> {
        if !(self.step > T::zero()) || !(lo <= hi) {
            return Err(Error::Domain(format!("bad grid axis [{lo}, {hi}] with step {}", self.step)));
        }
        let count = ((hi - lo) / self.step + T::lit(1e-9)).floor().as_f64();
        Ok(count as usize + 1)
    }

    pub fn points(&self) -> Result<u128, Error<T>> {
        Ok(self.axis_len(self.z_range)? as u128 * self.axis_len(self.c_range)? as u128)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridOptimum<T: Real = f64> {
    pub z_best: T,
    pub c_best: T,
    pub j_best: T,
}

/// Scalar cost for real `n = m = 1` models.
///
/// `y = kxz z / kzz`, `x = z^2 / kzz + c^2`, and
/// `J = -ln(det K_xv / det K_xy) + tr(K_xy^-1 K_xv)` written out for 2x2.
pub fn scalar_cost<T: Real>(k: &ScalarModel<T>, z: T, c: T) -> T {
    let y = k.kxz * z / k.kzz;
    let x = z * z / k.kzz + c * c;
    let det_xv = k.kxx * x - y * y;
    if !(det_xv > T::zero()) {
        return T::infinity();
    }
    let det_xy = k.kxx * k.kyy - k.kxy * k.kxy;
    let tr = (k.kyy * k.kxx - T::lit(2.0) * k.kxy * y + k.kxx * x) / det_xy;
    -(det_xv / det_xy).ln() + tr
}

/// Real entries of a scalar model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarModel<T: Real = f64> {
    pub kxx: T,
    pub kxy: T,
    pub kxz: T,
    pub kyy: T,
    pub kzz: T,
}

impl<T: Real> ScalarModel<T> {
    pub fn from_covariance(k: &JointChannelCovariance<T>) -> Result<Self, Error<T>> {
        if k.n() != 1 || k.m() != 1 {
            return Err(Error::Dimension(format!("scalar oracle needs n = m = 1, got n = {}, m = {}", k.n(), k.m())));
        }
        if !k.is_real() {
            return Err(Error::Domain("scalar oracle needs a real-valued model".into()));
        }
        let g = |b: &CMatrix<T>| b[(0, 0)].re;
        Ok(Self { kxx: g(k.kxx()), kxy: g(k.kxy()), kxz: g(k.kxz()), kyy: g(k.kyy()), kzz: g(k.kzz()) })
    }
}

/// Exhaustive minimisation of the scalar cost over the grid.
pub fn brute_force_scalar<T: Real>(k: &JointChannelCovariance<T>, grid: &GridSpec<T>) -> Result<GridOptimum<T>, Error<T>> {
    let model = ScalarModel::from_covariance(k)?;
    let total = grid.points()?;
    if total > MAX_GRID_POINTS {
        return Err(Error::GridTooLarge(total));
    }
    let nz = grid.axis_len(grid.z_range)?;
    let nc = grid.axis_len(grid.c_range)?;
    let mut best = GridOptimum { z_best: grid.z_range.0, c_best: grid.c_range.0, j_best: T::infinity() };
    for i in 0..nz {
        let z = grid.z_range.0 + T::count(i) * grid.step;
        for j in 0..nc {
            let c = grid.c_range.0 + T::count(j) * grid.step;
            let v = scalar_cost(&model, z, c);
            if v < best.j_best {
                best = GridOptimum { z_best: z, c_best: c, j_best: v };
            }
        }
    }
    Ok(best)
}

/// Central-difference gradient over every real coordinate of `(Z, C)`.
///
/// Entries are packed as complex numbers: `re` holds `dJ/dRe`, `im` holds
/// `dJ/dIm` of the matching parameter entry.
#[derive(Debug, Clone, PartialEq)]
pub struct FdGradient<T: Real = f64> {
    pub grad_z: CMatrix<T>,
    pub grad_c: CMatrix<T>,
    pub cost: T,
    /// Euclidean norm over all real coordinates.
    pub norm: T,
    /// `norm / (1 + |J|)`.
    pub relative: T,
}

/// Steps are `h_rel * (1 + |Z|)` for `Z` entries and `h_rel * (1 + |C|)`
/// for `C` entries (Frobenius norms).
pub fn finite_difference_gradient<T: Real>(
    p: &Problem<'_, T>,
    params: &AttackParameters<T>,
    h_rel: T,
) -> Result<FdGradient<T>, Error<T>> {
    let cost = p.cost_j(params);
    if !cost.is_finite() {
        return Err(Error::NonFiniteProbe("base point".into()));
    }
    let h_z = h_rel * (T::one() + linalg::frob(&params.z));
    let h_c = h_rel * (T::one() + linalg::frob(&params.c));

    let mut work = params.clone();
    let grad_z = probe_block(p, &mut work, true, h_z)?;
    let grad_c = probe_block(p, &mut work, false, h_c)?;
    let norm = (grad_z.iter().chain(grad_c.iter()).fold(T::zero(), |a, v| a + v.norm_sqr())).sqrt();
    Ok(FdGradient { grad_z, grad_c, cost, norm, relative: norm / (T::one() + cost.abs()) })
}

fn probe_block<T: Real>(
    p: &Problem<'_, T>,
    work: &mut AttackParameters<T>,
    on_z: bool,
    h: T,
) -> Result<CMatrix<T>, Error<T>> {
    let (rows, cols) = if on_z { work.z.shape() } else { work.c.shape() };
    let name = if on_z { "Z" } else { "C" };
    let mut grad = CMatrix::<T>::zeros(rows, cols);
    for i in 0..rows {
        for j in 0..cols {
            let mut parts = [T::zero(); 2];
            for (slot, dir) in [Complex::new(h, T::zero()), Complex::new(T::zero(), h)].into_iter().enumerate() {
                let orig = *entry(work, on_z, i, j);
                *entry(work, on_z, i, j) = orig + dir;
                let plus = p.cost_j(work);
                *entry(work, on_z, i, j) = orig - dir;
                let minus = p.cost_j(work);
                *entry(work, on_z, i, j) = orig;
                if !plus.is_finite() || !minus.is_finite() {
                    let part = if slot == 0 { "re" } else { "im" };
                    return Err(Error::NonFiniteProbe(format!("{part} {name}[{i},{j}]")));
                }
                parts[slot] = (plus - minus) / (h + h);
            }
            grad[(i, j)] = Complex::new(parts[0], parts[1]);
        }
    }
    Ok(grad)
}

fn entry<T: Real>(w: &mut AttackParameters<T>, on_z: bool, i: usize, j: usize) -> &mut Complex<T> {
    if on_z {
        &mut w.z[(i, j)]
    } else {
        &mut w.c[(i, j)]
    }
}

/// `|(M^-1)_{xv}|_F / |M^-1|_F` for a `(2n+m)`-square covariance ordered
/// `[x; v; z]`. Vanishes exactly when `x` and `v` are conditionally
/// uncorrelated given `z`.
pub fn check_zero_block_inverse<T: Real>(m_joint: &CMatrix<T>, n: usize, m: usize) -> Result<T, Error<T>> {
    let d = 2 * n + m;
    if m_joint.nrows() != d || m_joint.ncols() != d {
        return Err(Error::Dimension(format!(
            "expected {d}x{d}, got {}x{}",
            m_joint.nrows(),
            m_joint.ncols()
        )));
    }
    let inv = linalg::inv_general(m_joint).ok_or_else(|| Error::Precondition("joint covariance is singular".into()))?;
    let block = inv.view((0, n), (n, n)).into_owned();
    Ok(linalg::frob(&block) / linalg::frob(&inv))
}
