//! Thin wrappers around the dense symmetric eigensolver.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};

/// Absolute tolerance for symmetry checks.
pub const SYMMETRY_TOL: f64 = 1e-12;

pub(crate) fn max_asymmetry(m: &DMatrix<f64>) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn check_symmetric(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch {
            expected: m.nrows(),
            got: m.ncols(),
        });
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("matrix has non-finite entries"));
    }
    let asym = max_asymmetry(m);
    if asym > SYMMETRY_TOL {
        return Err(Error::NotSymmetric(asym));
    }
    Ok(())
}

/// Replaces `m` by `(m + mᵀ)/2`.
pub(crate) fn symmetrize(m: &mut DMatrix<f64>) {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

fn try_eigenvalues(m: DMatrix<f64>) -> Option<Vec<f64>> {
    let dim = m.nrows();
    let budget = 64 * dim.max(2) * dim.max(2);
    SymmetricEigen::try_new(m, f64::EPSILON, budget).map(|e| {
        let mut vals: Vec<f64> = e.eigenvalues.iter().copied().collect();
        vals.sort_by(f64::total_cmp);
        vals
    })
}

/// Eigenvalues of a symmetric matrix in ascending order.
///
/// Only the lower triangle is read. If the QL iteration does not converge the
/// matrix is retried once with its diagonal perturbed by `1e-13 * ‖m‖_F`.
pub fn symmetric_eigenvalues(m: &DMatrix<f64>) -> Result<Vec<f64>> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok(Vec::new());
    }
    if let Some(vals) = try_eigenvalues(m.clone()) {
        return Ok(vals);
    }
    let shift = 1e-13 * m.norm().max(f64::MIN_POSITIVE);
    let mut perturbed = m.clone();
    for i in 0..dim {
        perturbed[(i, i)] += shift * (1.0 + i as f64 / dim as f64);
    }
    try_eigenvalues(perturbed).ok_or(Error::NoConvergence(dim))
}
