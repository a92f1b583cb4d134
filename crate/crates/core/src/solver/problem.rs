use crate::covmodel::{kxx_inverse, JointChannelCovariance};
use crate::error::Error;
use crate::linalg;
use crate::scalar::Real;
use crate::CMatrix;

/// Quantities of a scenario that every cost / iteration step reuses.
#[derive(Debug, Clone)]
pub struct Problem<'a, T: Real> {
    pub k: &'a JointChannelCovariance<T>,
    pub kxx_inv: CMatrix<T>,
    pub kzz_inv: CMatrix<T>,
    /// `A = Kyy - Kxy^H Kxx^-1 Kxy`
    pub a: CMatrix<T>,
    /// `B = Kzz - Kxz^H Kxx^-1 Kxz`
    pub b: CMatrix<T>,
    pub a_inv: CMatrix<T>,
    pub logdet_a: T,
    /// Inverse of the `[x; y]` covariance.
    pub kxy_joint_inv: CMatrix<T>,
    /// `Kxz Kzz^-1`, the regression of `x` on `z`.
    pub kxz_kzz_inv: CMatrix<T>,
    /// `Kzx Kxx^-1 Kxy`, the constant term of the `Z` update.
    pub kzx_kxx_inv_kxy: CMatrix<T>,
    /// `Kzz^-1 B Kzz^-1`
    pub kzz_inv_b_kzz_inv: CMatrix<T>,
    /// `B Kzz^-1`
    pub b_kzz_inv: CMatrix<T>,
    pub tol_psd: T,
}

impl<'a, T: Real> Problem<'a, T> {
    pub fn new(k: &'a JointChannelCovariance<T>) -> Result<Self, Error<T>> {
        let tol_psd = k.tol_psd();
        let kxx_inv = kxx_inverse(k)?;
        if linalg::min_eigenvalue(k.kzz()) <= tol_psd {
            return Err(Error::Precondition("Kzz is singular".into()));
        }
        let kzz_inv = linalg::inv_hpd(k.kzz()).ok_or_else(|| Error::Precondition("Kzz is singular".into()))?;
        let a = linalg::hermitian_part(&(k.kyy() - k.kxy().adjoint() * &kxx_inv * k.kxy()));
        let b = linalg::hermitian_part(&(k.kzz() - k.kxz().adjoint() * &kxx_inv * k.kxz()));
        let singular_a = || Error::Precondition("[x;y] covariance is singular (A = Kyy - Kyx Kxx^-1 Kxy)".into());
        let logdet_a = linalg::logdet_hpd(&a).ok_or_else(singular_a)?;
        let a_inv = linalg::inv_hpd(&a).ok_or_else(singular_a)?;

        // block inverse of [[Kxx, Kxy], [Kyx, Kyy]]
        let n = k.n();
        let g = &kxx_inv * k.kxy(); // Kxx^-1 Kxy
        let p12 = -(&g * &a_inv);
        let p11 = &kxx_inv + &g * &a_inv * g.adjoint();
        let mut kxy_joint_inv = CMatrix::<T>::zeros(2 * n, 2 * n);
        kxy_joint_inv.view_mut((0, 0), (n, n)).copy_from(&p11);
        kxy_joint_inv.view_mut((0, n), (n, n)).copy_from(&p12);
        kxy_joint_inv.view_mut((n, 0), (n, n)).copy_from(&p12.adjoint());
        kxy_joint_inv.view_mut((n, n), (n, n)).copy_from(&a_inv);
        let kxy_joint_inv = linalg::hermitian_part(&kxy_joint_inv);

        let kxz_kzz_inv = k.kxz() * &kzz_inv;
        let kzx_kxx_inv_kxy = k.kxz().adjoint() * &g;
        let kzz_inv_b_kzz_inv = linalg::hermitian_part(&(&kzz_inv * &b * &kzz_inv));
        let b_kzz_inv = &b * &kzz_inv;
        Ok(Self {
            k,
            kxx_inv,
            kzz_inv,
            a,
            b,
            a_inv,
            logdet_a,
            kxy_joint_inv,
            kxz_kzz_inv,
            kzx_kxx_inv_kxy,
            kzz_inv_b_kzz_inv,
            b_kzz_inv,
            tol_psd,
        })
    }

    pub fn n(&self) -> usize {
        self.k.n()
    }

    pub fn m(&self) -> usize {
        self.k.m()
    }

    /// `2n`, the dimension of `[x; v]`.
    pub fn dim_xv(&self) -> T {
        T::count(2 * self.n())
    }
}
