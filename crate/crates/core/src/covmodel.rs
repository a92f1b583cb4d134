//! Joint second-order model of the legitimate template `x`, the legitimate
//! second-phase estimate `y` and the attacker's observation `z`.
//!
//! The assembled covariance is
//!
//! ```text
//!     [ Kxx    Kxy    Kxz ]
//! K = [ Kxy^H  Kyy    Kyz ]
//!     [ Kxz^H  Kyz^H  Kzz ]
//! ```
//!
//! with `x, y` of dimension `n` and `z` of dimension `m`.

use std::fmt;

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::Error;
use crate::linalg::{self, HermitianEigen};
use crate::scalar::Real;
use crate::CMatrix;

/// Scalar field of a Wishart draw.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Field {
    #[default]
    Real,
    Complex,
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Field::Real => "real",
            Field::Complex => "complex",
        })
    }
}

impl std::str::FromStr for Field {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "real" => Ok(Field::Real),
            "complex" => Ok(Field::Complex),
            other => Err(format!("unknown field '{other}' (expected real|complex)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct JointChannelCovariance<T: Real> {
    n: usize,
    m: usize,
    kxx: CMatrix<T>,
    kxy: CMatrix<T>,
    kxz: CMatrix<T>,
    kyy: CMatrix<T>,
    kyz: CMatrix<T>,
    kzz: CMatrix<T>,
}

fn check_shape<T: Real>(name: &str, m: &CMatrix<T>, rows: usize, cols: usize) -> Result<(), Error<T>> {
    if m.nrows() != rows || m.ncols() != cols {
        return Err(Error::Dimension(format!(
            "{name} is {}x{}, expected {rows}x{cols}",
            m.nrows(),
            m.ncols()
        )));
    }
    Ok(())
}

impl<T: Real> JointChannelCovariance<T> {
    /// Build from the six blocks. Only shapes are checked here; use
    /// [`validate`](Self::validate) for the covariance invariants.
    pub fn from_blocks(
        kxx: CMatrix<T>,
        kxy: CMatrix<T>,
        kxz: CMatrix<T>,
        kyy: CMatrix<T>,
        kyz: CMatrix<T>,
        kzz: CMatrix<T>,
    ) -> Result<Self, Error<T>> {
        let n = kxx.nrows();
        let m = kzz.nrows();
        if n == 0 || m == 0 {
            return Err(Error::Dimension("n and m must be positive".into()));
        }
        check_shape("Kxx", &kxx, n, n)?;
        check_shape("Kxy", &kxy, n, n)?;
        check_shape("Kxz", &kxz, n, m)?;
        check_shape("Kyy", &kyy, n, n)?;
        check_shape("Kyz", &kyz, n, m)?;
        check_shape("Kzz", &kzz, m, m)?;
        Ok(Self { n, m, kxx, kxy, kxz, kyy, kyz, kzz })
    }

    /// Partition a `(2n+m)`-square matrix ordered as `[x; y; z]`.
    pub fn from_assembled(k: &CMatrix<T>, n: usize) -> Result<Self, Error<T>> {
        if k.nrows() != k.ncols() || k.nrows() <= 2 * n || n == 0 {
            return Err(Error::Dimension(format!(
                "assembled matrix {}x{} cannot hold n={n} plus a nonempty z",
                k.nrows(),
                k.ncols()
            )));
        }
        let m = k.nrows() - 2 * n;
        let blk = |r0, c0, r, cc| k.view((r0, c0), (r, cc)).into_owned();
        Self::from_blocks(
            blk(0, 0, n, n),
            blk(0, n, n, n),
            blk(0, 2 * n, n, m),
            blk(n, n, n, n),
            blk(n, 2 * n, n, m),
            blk(2 * n, 2 * n, m, m),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }
    pub fn m(&self) -> usize {
        self.m
    }
    pub fn kxx(&self) -> &CMatrix<T> {
        &self.kxx
    }
    pub fn kxy(&self) -> &CMatrix<T> {
        &self.kxy
    }
    pub fn kxz(&self) -> &CMatrix<T> {
        &self.kxz
    }
    pub fn kyy(&self) -> &CMatrix<T> {
        &self.kyy
    }
    pub fn kyz(&self) -> &CMatrix<T> {
        &self.kyz
    }
    pub fn kzz(&self) -> &CMatrix<T> {
        &self.kzz
    }

    /// The full `(2n+m)`-square covariance of `[x; y; z]`.
    pub fn assembled(&self) -> CMatrix<T> {
        let (n, m) = (self.n, self.m);
        let mut k = CMatrix::<T>::zeros(2 * n + m, 2 * n + m);
        let mut put = |r0: usize, c0: usize, b: &CMatrix<T>| {
            k.view_mut((r0, c0), (b.nrows(), b.ncols())).copy_from(b);
            if r0 != c0 {
                k.view_mut((c0, r0), (b.ncols(), b.nrows())).copy_from(&b.adjoint());
            }
        };
        put(0, 0, &self.kxx);
        put(0, n, &self.kxy);
        put(0, 2 * n, &self.kxz);
        put(n, n, &self.kyy);
        put(n, 2 * n, &self.kyz);
        put(2 * n, 2 * n, &self.kzz);
        k
    }

    /// Covariance of `[x; y]`.
    pub fn k_xy_joint(&self) -> CMatrix<T> {
        two_by_two(&self.kxx, &self.kxy, &self.kyy)
    }

    /// Covariance of `[x; z]`.
    pub fn k_xz_joint(&self) -> CMatrix<T> {
        two_by_two(&self.kxx, &self.kxz, &self.kzz)
    }

    /// Scale-aware PSD tolerance `1e-9 * (1 + max diagonal entry)`.
    pub fn tol_psd(&self) -> T {
        let max_diag = [&self.kxx, &self.kyy, &self.kzz]
            .iter()
            .flat_map(|b| (0..b.nrows()).map(move |i| b[(i, i)].re))
            .fold(T::zero(), |a, v| a.max(v));
        T::lit(1e-9) * (T::one() + max_diag)
    }

    /// True when every block has zero imaginary part.
    pub fn is_real(&self) -> bool {
        [&self.kxx, &self.kxy, &self.kxz, &self.kyy, &self.kyz, &self.kzz]
            .iter()
            .all(|b| b.iter().all(|v| v.im == T::zero()))
    }

    /// Check the covariance invariants; the report is empty iff all hold.
    pub fn validate(&self) -> ValidationReport {
        let tol = self.tol_psd();
        let mut violations = Vec::new();

        for (name, b) in [("Kxx", &self.kxx), ("Kyy", &self.kyy), ("Kzz", &self.kzz)] {
            let asym = linalg::max_asymmetry(b);
            if asym > tol {
                violations.push(Violation::NotHermitian { block: name, max_asymmetry: asym.as_f64() });
            }
            for i in 0..b.nrows() {
                let d = b[(i, i)];
                if d.im.abs() > tol || d.re < -tol {
                    violations.push(Violation::BadDiagonal {
                        block: name,
                        index: i,
                        value: (d.re.as_f64(), d.im.as_f64()),
                    });
                }
            }
        }

        let min_all = HermitianEigen::new(&self.assembled()).min();
        if min_all < -tol {
            violations.push(Violation::NotPsd { min_eigenvalue: min_all.as_f64() });
        }
        for (name, b) in [("Kxx", &self.kxx), ("Kzz", &self.kzz)] {
            let min = HermitianEigen::new(b).min();
            if min <= tol {
                violations.push(Violation::NotPositiveDefinite { block: name, min_eigenvalue: min.as_f64() });
            }
        }
        ValidationReport { violations, tolerance: tol.as_f64() }
    }

    /// Cast to another scalar precision.
    pub fn cast<U: Real>(&self) -> JointChannelCovariance<U> {
        let f = |m: &CMatrix<T>| m.map(|v| Complex::new(U::lit(v.re.as_f64()), U::lit(v.im.as_f64())));
        JointChannelCovariance {
            n: self.n,
            m: self.m,
            kxx: f(&self.kxx),
            kxy: f(&self.kxy),
            kxz: f(&self.kxz),
            kyy: f(&self.kyy),
            kyz: f(&self.kyz),
            kzz: f(&self.kzz),
        }
    }
}

fn two_by_two<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>, d: &CMatrix<T>) -> CMatrix<T> {
    let (p, q) = (a.nrows(), d.nrows());
    let mut k = CMatrix::<T>::zeros(p + q, p + q);
    k.view_mut((0, 0), (p, p)).copy_from(a);
    k.view_mut((0, p), (p, q)).copy_from(b);
    k.view_mut((p, 0), (q, p)).copy_from(&b.adjoint());
    k.view_mut((p, p), (q, q)).copy_from(d);
    k
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NotHermitian { block: &'static str, max_asymmetry: f64 },
    BadDiagonal { block: &'static str, index: usize, value: (f64, f64) },
    NotPsd { min_eigenvalue: f64 },
    /// `Kxx` or `Kzz` is not strictly positive definite.
    NotPositiveDefinite { block: &'static str, min_eigenvalue: f64 },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NotHermitian { block, max_asymmetry } => {
                write!(f, "{block} is not Hermitian (max |M - M^H| = {max_asymmetry:e})")
            }
            Violation::BadDiagonal { block, index, value } => write!(
                f,
                "{block}[{index},{index}] = {}{:+}i is not real and nonnegative",
                value.0, value.1
            ),
            Violation::NotPsd { min_eigenvalue } => {
                write!(f, "joint covariance is not PSD (min eigenvalue {min_eigenvalue:e})")
            }
            Violation::NotPositiveDefinite { block, min_eigenvalue } => {
                write!(f, "{block} is not positive definite (min eigenvalue {min_eigenvalue:e})")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    /// The `tol_psd` the checks were run with.
    pub tolerance: f64,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result<T: Real>(self) -> Result<(), Error<T>> {
        if self.is_valid() {
            return Ok(());
        }
        let msg = self.violations.iter().map(ToString::to_string).collect::<Vec<_>>().join("; ");
        Err(Error::Precondition(msg))
    }
}

/// Defaults for the identity-block scenario when `sigma` / `tau` are not
/// given: `sigma = 0.9`, `tau = rho * sigma`.
pub const DEFAULT_SIGMA: f64 = 0.9;

/// `tau` that makes `y` and `z` conditionally uncorrelated given `x`.
pub fn default_tau<T: Real>(rho: Complex<T>, sigma: Complex<T>) -> Complex<T> {
    sigma.conj() * rho
}

/// `K = [[I, sigma I, rho I], [sigma* I, I, tau I], [rho* I, tau* I, I]]`.
pub fn build_identity_scenario<T: Real>(
    n: usize,
    rho: Complex<T>,
    sigma: Complex<T>,
    tau: Complex<T>,
) -> Result<JointChannelCovariance<T>, Error<T>> {
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    let eye = linalg::identity::<T>(n);
    let scaled = |s: Complex<T>| eye.map(|v| v * s);
    JointChannelCovariance::from_blocks(eye.clone(), scaled(sigma), scaled(rho), eye.clone(), scaled(tau), eye)
}

/// A Wishart draw plus the number of times the `[x;z]` corner had to be
/// resampled.
#[derive(Debug, Clone)]
pub struct WishartDraw<T: Real> {
    pub covariance: JointChannelCovariance<T>,
    pub resamples: u32,
}

const MAX_WISHART_ATTEMPTS: u32 = 100;

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of one trial in a batch, derived from the batch seed:
/// `s(base, n, trial) = h(h(h(base) ^ n) ^ trial)` with `h` the splitmix64
/// finaliser. Trials are independent of how many others run or in which
/// order.
pub fn trial_seed(base: u64, n: usize, trial: u64) -> u64 {
    splitmix64(splitmix64(splitmix64(base) ^ n as u64) ^ trial)
}

/// `W = A A^H` with `A` a `3n x 3n` Gaussian matrix, partitioned with `m = n`.
///
/// The generator is `ChaCha8Rng::seed_from_u64(seed)` with its stream set to
/// the attempt index (0 for the first draw). `A` is filled row-major; real
/// entries are `N(0, 1)`, complex entries draw the real then the imaginary
/// part, each `N(0, 1/2)`.
pub fn sample_wishart_scenario<T: Real>(n: usize, seed: u64, field: Field) -> Result<WishartDraw<T>, Error<T>> {
    if n == 0 {
        return Err(Error::Dimension("n must be positive".into()));
    }
    let d = 3 * n;
    for attempt in 0..MAX_WISHART_ATTEMPTS {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(attempt as u64);
        let mut a = CMatrix::<T>::zeros(d, d);
        for i in 0..d {
            for j in 0..d {
                a[(i, j)] = match field {
                    Field::Real => {
                        let g: f64 = StandardNormal.sample(&mut rng);
                        Complex::new(T::lit(g), T::zero())
                    }
                    Field::Complex => {
                        let re: f64 = StandardNormal.sample(&mut rng);
                        let im: f64 = StandardNormal.sample(&mut rng);
                        let s = std::f64::consts::FRAC_1_SQRT_2;
                        Complex::new(T::lit(re * s), T::lit(im * s))
                    }
                };
            }
        }
        let w = linalg::hermitian_part(&(&a * a.adjoint()));
        let cov = JointChannelCovariance::from_assembled(&w, n)?;
        if HermitianEigen::new(&cov.k_xz_joint()).min() > cov.tol_psd() {
            return Ok(WishartDraw { covariance: cov, resamples: attempt });
        }
    }
    Err(Error::ResampleLimit(MAX_WISHART_ATTEMPTS))
}

/// `A = Kyy - Kxy^H Kxx^-1 Kxy`: residual covariance of `y` given `x`.
pub fn schur_a<T: Real>(k: &JointChannelCovariance<T>) -> Result<CMatrix<T>, Error<T>> {
    let inv = kxx_inverse(k)?;
    Ok(linalg::hermitian_part(&(&k.kyy - k.kxy.adjoint() * inv * &k.kxy)))
}

/// `B = Kzz - Kxz^H Kxx^-1 Kxz`: residual covariance of `z` given `x`.
pub fn schur_b<T: Real>(k: &JointChannelCovariance<T>) -> Result<CMatrix<T>, Error<T>> {
    let inv = kxx_inverse(k)?;
    Ok(linalg::hermitian_part(&(&k.kzz - k.kxz.adjoint() * inv * &k.kxz)))
}

pub(crate) fn kxx_inverse<T: Real>(k: &JointChannelCovariance<T>) -> Result<CMatrix<T>, Error<T>> {
    if HermitianEigen::new(&k.kxx).min() <= k.tol_psd() {
        return Err(Error::Precondition("Kxx is singular".into()));
    }
    linalg::inv_hpd(&k.kxx).ok_or_else(|| Error::Precondition("Kxx is singular".into()))
}

/// A scenario description: a parametric identity-block model, a seeded
/// Wishart draw, or explicit blocks.
#[derive(Debug, Clone, PartialEq)]
pub enum ScenarioSpec<T: Real> {
    IdentityBlock { n: usize, rho: Complex<T>, sigma: Complex<T>, tau: Complex<T> },
    Wishart { n: usize, seed: u64, field: Field },
    Explicit(JointChannelCovariance<T>),
}

impl<T: Real> ScenarioSpec<T> {
    /// Materialise the covariance (plus Wishart resample count, 0 otherwise).
    pub fn build(&self) -> Result<(JointChannelCovariance<T>, u32), Error<T>> {
        match self {
            ScenarioSpec::IdentityBlock { n, rho, sigma, tau } => {
                Ok((build_identity_scenario(*n, *rho, *sigma, *tau)?, 0))
            }
            ScenarioSpec::Wishart { n, seed, field } => {
                let draw = sample_wishart_scenario(*n, *seed, *field)?;
                Ok((draw.covariance, draw.resamples))
            }
            ScenarioSpec::Explicit(k) => Ok((k.clone(), 0)),
        }
    }
}
