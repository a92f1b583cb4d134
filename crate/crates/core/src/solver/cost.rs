//! Cost, divergence and first-order optimality of a candidate attack.
//!
//! With `Y = Kxz Kzz^-1 Z^H` and `X = Z Kzz^-1 Z^H + C C^H`, the forged pair
//! `[x; v]` has covariance `[[Kxx, Y], [Y^H, X]]`. Its Schur complement on
//! `Kxx` is `M = Z Kzz^-1 B Kzz^-1 Z^H + C C^H`, so
//!
//! ```text
//! J = -log det M + log det A + tr(K_[x;y]^-1 K_[x;v]),   D = J - 2n.
//! ```

use super::problem::Problem;
use super::AttackParameters;
use crate::linalg;
use crate::scalar::Real;
use crate::CMatrix;

impl<T: Real> Problem<'_, T> {
    /// `Y = Kxz Kzz^-1 Z^H`, the `x`-`v` cross covariance forced by
    /// conditional independence given `z`.
    pub fn cross_xv(&self, z: &CMatrix<T>) -> CMatrix<T> {
        linalg::mul(&self.kxz_kzz_inv, &z.adjoint())
    }

    /// `K_[x;v]` for an explicit `(Z, X)` pair.
    pub fn k_xv_from_zx(&self, z: &CMatrix<T>, x: &CMatrix<T>) -> CMatrix<T> {
        let n = self.n();
        let y = self.cross_xv(z);
        let mut k = CMatrix::<T>::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(self.k.kxx());
        k.view_mut((0, n), (n, n)).copy_from(&y);
        k.view_mut((n, 0), (n, n)).copy_from(&y.adjoint());
        k.view_mut((n, n), (n, n)).copy_from(&linalg::hermitian_part(x));
        k
    }

    /// `X = Z Kzz^-1 Z^H + C C^H`.
    pub fn x_of(&self, params: &AttackParameters<T>) -> CMatrix<T> {
        let (z, c) = (&params.z, &params.c);
        linalg::sandwich(z, &self.kzz_inv) + linalg::mul(c, &c.adjoint())
    }

    pub fn k_xv(&self, params: &AttackParameters<T>) -> CMatrix<T> {
        self.k_xv_from_zx(&params.z, &self.x_of(params))
    }

    /// `M = Z Kzz^-1 B Kzz^-1 Z^H + C C^H`.
    pub fn inner(&self, params: &AttackParameters<T>) -> CMatrix<T> {
        let z = &params.z;
        let c = &params.c;
        linalg::sandwich(z, &self.kzz_inv_b_kzz_inv) + linalg::mul(c, &c.adjoint())
    }

    /// `J` for an explicit `(Z, X)`; `+inf` when `K_[x;v]` is not positive
    /// definite.
    pub fn cost_j_zx(&self, z: &CMatrix<T>, x: &CMatrix<T>) -> T {
        let y = self.cross_xv(z);
        let schur = linalg::hermitian_part(x) - linalg::sandwich(&y.adjoint(), &self.kxx_inv);
        self.cost_from_parts(&schur, &self.k_xv_from_zx(z, x))
    }

    /// `J(Z, C)`.
    pub fn cost_j(&self, params: &AttackParameters<T>) -> T {
        self.cost_from_parts(&self.inner(params), &self.k_xv(params))
    }

    fn cost_from_parts(&self, schur: &CMatrix<T>, k_xv: &CMatrix<T>) -> T {
        match linalg::logdet_hpd(schur) {
            Some(ld) => self.logdet_a - ld + linalg::trace_of_product(&self.kxy_joint_inv, k_xv),
            None => T::infinity(),
        }
    }

    /// `D(Z, C) = J - 2n`, the divergence of the forged pair from the
    /// legitimate one, in nats.
    pub fn divergence_d(&self, params: &AttackParameters<T>) -> T {
        self.cost_j(params) - self.dim_xv()
    }

    /// Blocks `(Delta_12, Delta_22)` of `Delta = K_[x;y]^-1 - K_[x;v]^-1`,
    /// or `None` when `M` is singular.
    pub fn delta_blocks(&self, params: &AttackParameters<T>) -> Option<(CMatrix<T>, CMatrix<T>)> {
        let m_inv = linalg::inv_hpd(&self.inner(params))?;
        let kxx_inv_kxy = &self.kxx_inv * self.k.kxy();
        let d12 = -(kxx_inv_kxy * &self.a_inv) + &self.kxx_inv * self.cross_xv(&params.z) * &m_inv;
        let d22 = &self.a_inv - m_inv;
        Some((d12, d22))
    }

    /// Normalised violation of the first-order conditions
    ///
    /// ```text
    /// Kzz^-1 Kzx Delta_12 + Kzz^-1 Z^H Delta_22 = 0,   C^H Delta_22 = 0.
    /// ```
    ///
    /// The first block is divided by `1 + |T1| + |T2|` (its two terms), the
    /// second by `1 + |C| |Delta_22|`; the larger ratio is returned.
    /// `+inf` when `K_[x;v]` is singular.
    pub fn stationarity_residual(&self, params: &AttackParameters<T>) -> T {
        let Some((d12, d22)) = self.delta_blocks(params) else {
            return T::infinity();
        };
        let t1 = self.kxz_kzz_inv.adjoint() * d12;
        let t2 = &self.kzz_inv * params.z.adjoint() * &d22;
        let r1 = linalg::frob(&(&t1 + &t2)) / (T::one() + linalg::frob(&t1) + linalg::frob(&t2));
        let e2 = params.c.adjoint() * &d22;
        let r2 = linalg::frob(&e2) / (T::one() + linalg::frob(&params.c) * linalg::frob(&d22));
        r1.max(r2)
    }

    /// Gradient of `J` over the real coordinates of `(Z, C)`, packed like
    /// the parameters: `re` holds `dJ/dRe`, `im` holds `dJ/dIm`.
    ///
    /// With `G_Z = Kzz^-1 (Kzx Delta_12 + Z^H Delta_22)` and
    /// `G_C = C^H Delta_22`, `dJ = 2 Re tr(G_Z dZ) + 2 Re tr(G_C dC)`, so the
    /// packed gradients are `2 G_Z^H` and `2 G_C^H`. `None` when `M` is
    /// singular.
    pub fn gradient(&self, params: &AttackParameters<T>) -> Option<(CMatrix<T>, CMatrix<T>)> {
        let (d12, d22) = self.delta_blocks(params)?;
        let g_z = self.kxz_kzz_inv.adjoint() * d12 + &self.kzz_inv * params.z.adjoint() * &d22;
        let g_c = params.c.adjoint() * &d22;
        let two = linalg::c(T::lit(2.0));
        Some((g_z.adjoint().map(|v| v * two), g_c.adjoint().map(|v| v * two)))
    }

    /// The full `(2n+m)`-square covariance of `[x; v; z]`.
    pub fn assemble_joint(&self, params: &AttackParameters<T>) -> CMatrix<T> {
        let (n, m) = (self.n(), self.m());
        let mut k = CMatrix::<T>::zeros(2 * n + m, 2 * n + m);
        k.view_mut((0, 0), (2 * n, 2 * n)).copy_from(&self.k_xv(params));
        k.view_mut((0, 2 * n), (n, m)).copy_from(self.k.kxz());
        k.view_mut((2 * n, 0), (m, n)).copy_from(&self.k.kxz().adjoint());
        k.view_mut((n, 2 * n), (n, m)).copy_from(&params.z);
        k.view_mut((2 * n, n), (m, n)).copy_from(&params.z.adjoint());
        k.view_mut((2 * n, 2 * n), (m, m)).copy_from(self.k.kzz());
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::covmodel::{build_identity_scenario, sample_wishart_scenario, Field};
    use crate::gaussian_info::kl_gaussian;
    use crate::linalg::c;
    use num_complex::Complex;

    fn random_params(n: usize, m: usize, seed: u64) -> AttackParameters<f64> {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut draw = |r, cc| CMatrix::<f64>::from_fn(r, cc, |_, _| Complex::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
        AttackParameters { z: draw(n, m), c: draw(n, n) }
    }

    #[test]
    fn cost_matches_kl_of_assembled_blocks() {
        let k = sample_wishart_scenario::<f64>(3, 11, Field::Complex).unwrap().covariance;
        let p = Problem::new(&k).unwrap();
        for seed in 0..5 {
            let params = random_params(3, 3, seed);
            let kl = kl_gaussian(&p.k_xv(&params), &k.k_xy_joint()).unwrap();
            let d = p.divergence_d(&params);
            assert!((kl - d).abs() <= 1e-12 * (1.0 + d.abs()), "{kl} vs {d}");
        }
    }

    #[test]
    fn legitimate_copy_has_zero_divergence() {
        // rho = 1: z = x, so Z = Kyx and C C^H = A reproduce K_[x;y]
        let k = build_identity_scenario::<f64>(2, c(1.0), c(0.6), c(0.6)).unwrap();
        let p = Problem::new(&k).unwrap();
        let params = AttackParameters { z: k.kxy().adjoint(), c: linalg::sqrtm_psd(&p.a) };
        assert!(p.divergence_d(&params).abs() < 1e-14);
        assert!(p.stationarity_residual(&params) < 1e-14);
    }

    #[test]
    fn scalar_independent_attack() {
        // rho = 0, sigma = 0.9, Z = 0, C C^H = 1 - sigma^2
        let k = build_identity_scenario::<f64>(1, c(0.0), c(0.9), c(0.0)).unwrap();
        let p = Problem::new(&k).unwrap();
        let params = AttackParameters { z: CMatrix::zeros(1, 1), c: CMatrix::from_element(1, 1, c(0.19f64.sqrt())) };
        let d = p.divergence_d(&params);
        assert!((d - 0.81 / 0.19).abs() < 1e-12);
    }

    #[test]
    fn delta_blocks_match_dense_inverse() {
        let k = sample_wishart_scenario::<f64>(2, 5, Field::Real).unwrap().covariance;
        let p = Problem::new(&k).unwrap();
        let params = random_params(2, 2, 9);
        let (d12, d22) = p.delta_blocks(&params).unwrap();
        let dense = linalg::inv_hpd(&k.k_xy_joint()).unwrap() - linalg::inv_hpd(&p.k_xv(&params)).unwrap();
        let scale = linalg::frob(&dense);
        assert!(linalg::frob(&(d12 - dense.view((0, 2), (2, 2)))) < 1e-9 * scale);
        assert!(linalg::frob(&(d22 - dense.view((2, 2), (2, 2)))) < 1e-9 * scale);
    }

    #[test]
    fn residual_grows_off_the_fixed_point() {
        let k = build_identity_scenario::<f64>(2, c(1.0), c(0.6), c(0.6)).unwrap();
        let p = Problem::new(&k).unwrap();
        let at = AttackParameters { z: k.kxy().adjoint(), c: linalg::sqrtm_psd(&p.a) };
        let off = AttackParameters { z: at.z.map(|v| v * 1.01), c: at.c.map(|v| v * 0.99) };
        assert!(p.stationarity_residual(&off) > p.stationarity_residual(&at));
        assert!(p.stationarity_residual(&off) > 1e-4);
    }

    #[test]
    fn gradient_matches_central_differences() {
        let k = sample_wishart_scenario::<f64>(2, 3, Field::Complex).unwrap().covariance;
        let p = Problem::new(&k).unwrap();
        let params = random_params(2, 2, 4);
        let (gz, gc) = p.gradient(&params).unwrap();
        let h = 1e-6;
        for (on_z, g) in [(true, &gz), (false, &gc)] {
            for i in 0..2 {
                for j in 0..2 {
                    for dir in [c(h), Complex::new(0.0, h)] {
                        let mut plus = params.clone();
                        let mut minus = params.clone();
                        let (tp, tm) = if on_z { (&mut plus.z, &mut minus.z) } else { (&mut plus.c, &mut minus.c) };
                        tp[(i, j)] += dir;
                        tm[(i, j)] -= dir;
                        let fd = (p.cost_j(&plus) - p.cost_j(&minus)) / (2.0 * h);
                        let an = if dir.im == 0.0 { g[(i, j)].re } else { g[(i, j)].im };
                        assert!((fd - an).abs() < 1e-6 * (1.0 + an.abs()), "{fd} vs {an}");
                    }
                }
            }
        }
    }

    #[test]
    fn assembled_joint_structure() {
        let k = build_identity_scenario::<f64>(2, c(0.5), c(0.9), c(0.45)).unwrap();
        let p = Problem::new(&k).unwrap();
        let params = AttackParameters { z: CMatrix::zeros(2, 2), c: linalg::identity(2) };
        let j = p.assemble_joint(&params);
        assert!(linalg::frob(&j.view((0, 2), (2, 2)).into_owned()) == 0.0);
        assert!(linalg::max_asymmetry(&j) == 0.0);
    }
}
