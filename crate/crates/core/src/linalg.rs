//! Small dense helpers shared by the kernel and the engines.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Seeded `AAᵀ + I/2` with entries of `A` uniform in `(−1, 1)`.
pub fn random_spd(n: usize, seed: u64) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
    &a * a.transpose() + DMatrix::identity(n, n) * 0.5
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

pub fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(symmetrize(m)).eigenvalues.min()
}

/// Checks positive-definiteness through the symmetric eigenvalue decomposition.
pub fn check_spd(m: &DMatrix<f64>, sample: usize) -> Result<()> {
    if m.iter().any(|v| !v.is_finite()) {
        return Err(Error::NotPositiveDefinite {
            sample,
            min_eigenvalue: f64::NAN,
        });
    }
    let min = min_eigenvalue(m);
    if min > 0.0 {
        Ok(())
    } else {
        Err(Error::NotPositiveDefinite {
            sample,
            min_eigenvalue: min,
        })
    }
}

/// Inverse of an SPD matrix; fails with `NotPositiveDefinite` otherwise.
pub fn spd_inverse(m: &DMatrix<f64>, sample: usize) -> Result<DMatrix<f64>> {
    check_spd(m, sample)?;
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite {
        sample,
        min_eigenvalue: min_eigenvalue(m),
    })?;
    Ok(symmetrize(&chol.inverse()))
}

/// Inverse of the lower Cholesky factor of an SPD matrix.
pub fn cholesky_lower_inverse(m: &DMatrix<f64>, sample: usize) -> Result<DMatrix<f64>> {
    let chol = m.clone().cholesky().ok_or(Error::NotPositiveDefinite {
        sample,
        min_eigenvalue: min_eigenvalue(m),
    })?;
    let l = chol.l();
    l.try_inverse().ok_or(Error::NotPositiveDefinite {
        sample,
        min_eigenvalue: 0.0,
    })
}

/// Extreme generalized eigenvalues of `a` relative to `b = L Lᵀ`, given `L⁻¹`.
pub fn relative_eigen_range(a: &DMatrix<f64>, l_inv: &DMatrix<f64>) -> (f64, f64) {
    let c = symmetrize(&(l_inv * a * l_inv.transpose()));
    let eig = SymmetricEigen::new(c).eigenvalues;
    (eig.min(), eig.max())
}

/// Full contraction `a^{ij} s_ij`.
pub fn contract(a: &DMatrix<f64>, s: &DMatrix<f64>) -> f64 {
    a.component_mul(s).sum()
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
