//! Small dense complex linear-algebra helpers on top of nalgebra.
//!
//! Everything here works on Hermitian (or nearly Hermitian) matrices; inputs
//! are symmetrised before eigendecomposition so that round-off asymmetry from
//! products like `A B A^H` does not leak into the spectrum.

use nalgebra::{Cholesky, DMatrix, Dyn, SymmetricEigen};
use num_complex::Complex;

use crate::scalar::Real;
use crate::CMatrix;

#[inline]
pub fn c<T: Real>(re: T) -> Complex<T> {
    Complex::new(re, T::zero())
}

/// Embed a real matrix as complex with zero imaginary part.
pub fn embed_real<T: Real>(m: &DMatrix<T>) -> CMatrix<T> {
    m.map(c)
}

pub fn identity<T: Real>(n: usize) -> CMatrix<T> {
    CMatrix::<T>::identity(n, n)
}

/// `(M + M^H) / 2`.
pub fn hermitian_part<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    (m + m.adjoint()).map(|v| v * c(T::lit(0.5)))
}

fn is_real_matrix<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|v| v.im == T::zero())
}

/// `A B`, computed as real products so nalgebra's blocked real kernels do
/// the work (its complex product is a plain triple loop). Real inputs cost
/// a single real product.
pub fn mul<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (ar, br) = (a.map(|v| v.re), b.map(|v| v.re));
    let (a_real, b_real) = (is_real_matrix(a), is_real_matrix(b));
    let re_re = &ar * &br;
    match (a_real, b_real) {
        (true, true) => re_re.map(c),
        (true, false) => {
            let bi = b.map(|v| v.im);
            re_re.zip_map(&(&ar * bi), Complex::new)
        }
        (false, true) => {
            let ai = a.map(|v| v.im);
            re_re.zip_map(&(ai * &br), Complex::new)
        }
        (false, false) => {
            let (ai, bi) = (a.map(|v| v.im), b.map(|v| v.im));
            let re = re_re - &ai * &bi;
            let im = &ar * bi + ai * &br;
            re.zip_map(&im, Complex::new)
        }
    }
}

/// `A B A^H`, Hermitian by construction.
pub fn sandwich<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    hermitian_part(&mul(&mul(a, b), &a.adjoint()))
}

/// Largest absolute entry of `M - M^H`.
pub fn max_asymmetry<T: Real>(m: &CMatrix<T>) -> T {
    let d = m - m.adjoint();
    d.iter().fold(T::zero(), |acc, v| acc.max(v.norm_sqr().sqrt()))
}

/// Frobenius norm.
pub fn frob<T: Real>(m: &CMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc + v.norm_sqr()).sqrt()
}

/// Real part of the trace.
pub fn trace_re<T: Real>(m: &CMatrix<T>) -> T {
    (0..m.nrows().min(m.ncols())).fold(T::zero(), |acc, i| acc + m[(i, i)].re)
}

/// `Re tr(P K)` without forming the product.
pub fn trace_of_product<T: Real>(p: &CMatrix<T>, k: &CMatrix<T>) -> T {
    debug_assert_eq!(p.ncols(), k.nrows());
    debug_assert_eq!(p.nrows(), k.ncols());
    let mut acc = T::zero();
    for i in 0..p.nrows() {
        for j in 0..p.ncols() {
            let a = p[(i, j)];
            let b = k[(j, i)];
            acc += a.re * b.re - a.im * b.im;
        }
    }
    acc
}

/// Eigendecomposition of the Hermitian part of `m`, eigenvalues in
/// decreasing order.
pub struct HermitianEigen<T: Real> {
    pub values: Vec<T>,
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(m: &CMatrix<T>) -> Self {
        let n = m.nrows();
        if n == 0 {
            return Self { values: Vec::new(), vectors: CMatrix::<T>::zeros(0, 0) };
        }
        let eig = SymmetricEigen::new(hermitian_part(m));
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| {
            eig.eigenvalues[b]
                .partial_cmp(&eig.eigenvalues[a])
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        let mut vectors = CMatrix::<T>::zeros(n, n);
        for (dst, &src) in order.iter().enumerate() {
            vectors.set_column(dst, &eig.eigenvectors.column(src));
        }
        Self { values, vectors }
    }

    pub fn min(&self) -> T {
        self.values.last().copied().unwrap_or_else(T::zero)
    }

    pub fn max(&self) -> T {
        self.values.first().copied().unwrap_or_else(T::zero)
    }

    /// `U diag(f(lambda)) U^H`.
    pub fn map(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let mut scaled = self.vectors.clone();
        for (j, &v) in self.values.iter().enumerate() {
            let s = c(f(v));
            scaled.column_mut(j).iter_mut().for_each(|e| *e *= s);
        }
        hermitian_part(&(scaled * self.vectors.adjoint()))
    }
}

pub fn min_eigenvalue<T: Real>(m: &CMatrix<T>) -> T {
    HermitianEigen::new(m).min()
}

/// Inverse of a Hermitian positive definite matrix via Cholesky.
/// Cholesky factor of a Hermitian positive-definite matrix.
///
/// nalgebra's complex factorisation takes square roots of negative pivots
/// instead of failing, so the pivots are checked here.
pub fn cholesky<T: Real>(m: &CMatrix<T>) -> Option<Cholesky<Complex<T>, Dyn>> {
    let chol = hermitian_part(m).cholesky()?;
    let l = chol.l_dirty();
    let slack = T::default_epsilon().sqrt();
    for i in 0..l.nrows() {
        let d = l[(i, i)];
        if !(d.re > T::zero()) || !(d.im.abs() <= slack * d.re) || !d.re.is_finite() {
            return None;
        }
    }
    Some(chol)
}

pub fn inv_hpd<T: Real>(m: &CMatrix<T>) -> Option<CMatrix<T>> {
    let chol = cholesky(m)?;
    let inv = chol.inverse();
    inv.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then(|| hermitian_part(&inv))
}

/// General inverse through LU; `None` when singular or non-finite.
pub fn inv_general<T: Real>(m: &CMatrix<T>) -> Option<CMatrix<T>> {
    let inv = m.clone().try_inverse()?;
    inv.iter().all(|v| v.re.is_finite() && v.im.is_finite()).then_some(inv)
}

/// `log det M` for Hermitian positive definite `M`; `None` if Cholesky fails.
pub fn logdet_hpd<T: Real>(m: &CMatrix<T>) -> Option<T> {
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    let mut acc = T::zero();
    for i in 0..l.nrows() {
        let d = l[(i, i)].re;
        if !(d > T::zero()) {
            return None;
        }
        acc += d.ln();
    }
    Some(acc + acc)
}

/// Moore-Penrose pseudo-inverse of a Hermitian PSD matrix. Eigenvalues at or
/// below `rcond * lambda_max` are treated as zero.
pub fn pinv_hermitian<T: Real>(m: &CMatrix<T>, rcond: T) -> CMatrix<T> {
    let eig = HermitianEigen::new(m);
    let cutoff = rcond * eig.values.iter().fold(T::zero(), |a, v| a.max(v.abs()));
    eig.map(|v| if v.abs() > cutoff { T::one() / v } else { T::zero() })
}

/// Hermitian square root of a PSD matrix (negative eigenvalues clamped to 0).
pub fn sqrtm_psd<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    HermitianEigen::new(m).map(|v| v.max(T::zero()).sqrt())
}

/// Inverse Hermitian square root of a PD matrix.
pub fn inv_sqrtm_pd<T: Real>(m: &CMatrix<T>) -> Option<CMatrix<T>> {
    let eig = HermitianEigen::new(m);
    if !(eig.min() > T::zero()) {
        return None;
    }
    Some(eig.map(|v| T::one() / v.sqrt()))
}

pub fn all_finite<T: Real>(m: &CMatrix<T>) -> bool {
    m.iter().all(|v| v.re.is_finite() && v.im.is_finite())
}
