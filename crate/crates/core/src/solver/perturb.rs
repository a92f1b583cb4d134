//! Local-minimality probe: random Gaussian perturbations of `(Z, C)` with
//! Frobenius norm `scale * |Z|` and `scale * |C|`.

use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::problem::Problem;
use super::{AttackParameters, AttackSolution};
use crate::gaussian_info::TOL_ROOT;
use crate::linalg;
use crate::scalar::Real;
use crate::CMatrix;

#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationReport<T: Real = f64> {
    pub j_star: T,
    /// Smallest perturbed cost seen (`+inf` if every trial was singular).
    pub min_j_found: T,
    /// Some perturbed cost was below `j_star - tol_root`.
    pub improved: bool,
    /// `J(perturbed) - j_star` per trial; `+inf` for singular trials.
    pub deltas: Vec<T>,
}

impl<T: Real> PerturbationReport<T> {
    /// Largest decrease below `j_star` (0 when nothing improved).
    pub fn max_improvement(&self) -> T {
        (self.j_star - self.min_j_found).max(T::zero())
    }
}

fn gaussian_direction<T: Real>(rows: usize, cols: usize, complex: bool, rng: &mut ChaCha8Rng) -> CMatrix<T> {
    CMatrix::<T>::from_fn(rows, cols, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = if complex { StandardNormal.sample(rng) } else { 0.0 };
        Complex::new(T::lit(re), T::lit(im))
    })
}

fn scaled_to<T: Real>(dir: CMatrix<T>, norm: T) -> CMatrix<T> {
    let len = linalg::frob(&dir);
    if norm == T::zero() || len == T::zero() {
        return CMatrix::<T>::zeros(dir.nrows(), dir.ncols());
    }
    let s = norm / len;
    dir.map(|v| v * linalg::c(s))
}

/// Evaluate the cost at `trials` random perturbations of the solution.
///
/// Directions are i.i.d. Gaussian (complex for complex scenarios, real for
/// real ones) drawn from `ChaCha8Rng::seed_from_u64(seed)`, `δZ` first, then
/// `δC`, trial by trial.
pub fn perturb_and_check<T: Real>(
    p: &Problem<'_, T>,
    solution: &AttackSolution<T>,
    scale: T,
    trials: usize,
    seed: u64,
) -> PerturbationReport<T> {
    let complex = !p.k.is_real();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let base = &solution.params;
    let j_star = p.cost_j(base);
    let z_norm = scale * linalg::frob(&base.z);
    let c_norm = scale * linalg::frob(&base.c);

    let mut deltas = Vec::with_capacity(trials);
    let mut min_j = T::infinity();
    for _ in 0..trials {
        let dz = scaled_to(gaussian_direction::<T>(base.z.nrows(), base.z.ncols(), complex, &mut rng), z_norm);
        let dc = scaled_to(gaussian_direction::<T>(base.c.nrows(), base.c.ncols(), complex, &mut rng), c_norm);
        let trial = AttackParameters { z: &base.z + dz, c: &base.c + dc };
        let j = p.cost_j(&trial);
        if j < min_j {
            min_j = j;
        }
        deltas.push(if j.is_finite() { j - j_star } else { T::infinity() });
    }
    let improved = min_j < j_star - T::lit(TOL_ROOT);
    PerturbationReport { j_star, min_j_found: min_j, improved, deltas }
}
