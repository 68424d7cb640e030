//! Spatial covariance estimation and conditioning.

use std::borrow::Cow;

use nalgebra::SymmetricEigen;

use crate::array::SnapshotMatrix;
use crate::error::{domain, Error, Result};
use crate::{CMatrix, C64};

/// Hermitian positive semidefinite M x M matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceMatrix {
    data: CMatrix,
}

impl CovarianceMatrix {
    /// Wraps a square matrix after checking it is Hermitian and PSD within
    /// `1e-12` relative (Hermitian) and `-1e-10 * lambda_max` (eigenvalues).
    /// The stored matrix is symmetrized exactly.
    pub fn new(data: CMatrix) -> Result<Self> {
        if !data.is_square() || data.nrows() == 0 {
            return Err(domain(format!(
                "covariance must be square and non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(domain("covariance has non-finite entries"));
        }
        let scale = data.norm().max(f64::MIN_POSITIVE);
        let skew = (&data - data.adjoint()).norm();
        if skew > 1e-12 * scale {
            return Err(domain(format!(
                "covariance is not Hermitian (relative skew {:.3e})",
                skew / scale
            )));
        }
        let data = hermitian_part(&data);
        let eig = SymmetricEigen::new(data.clone()).eigenvalues;
        let max = eig.max();
        let min = eig.min();
        if min < -1e-10 * max.abs().max(f64::MIN_POSITIVE) {
            return Err(domain(format!(
                "covariance is not positive semidefinite (eigenvalues {min:.3e}..{max:.3e})"
            )));
        }
        Ok(Self { data })
    }

    pub(crate) fn from_hermitian_unchecked(data: CMatrix) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn dim(&self) -> usize {
        self.data.nrows()
    }

    pub fn trace(&self) -> f64 {
        self.data.diagonal().iter().map(|z| z.re).sum()
    }

    /// Real eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut v: Vec<f64> = SymmetricEigen::new(self.data.clone())
            .eigenvalues
            .iter()
            .copied()
            .collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Anything a solver can turn into a covariance: a prebuilt matrix or raw
/// snapshots (estimated with [`sample_covariance`]).
pub trait CovarianceSource {
    fn covariance(&self) -> Cow<'_, CovarianceMatrix>;
}

impl CovarianceSource for CovarianceMatrix {
    fn covariance(&self) -> Cow<'_, CovarianceMatrix> {
        Cow::Borrowed(self)
    }
}

impl CovarianceSource for SnapshotMatrix {
    fn covariance(&self) -> Cow<'_, CovarianceMatrix> {
        Cow::Owned(sample_covariance(self))
    }
}

pub(crate) fn hermitian_part(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * C64::from(0.5)
}

/// `(1/K) X X^H`, symmetrized so the result is exactly Hermitian.
pub fn sample_covariance(x: &SnapshotMatrix) -> CovarianceMatrix {
    let k = x.num_snapshots() as f64;
    let raw = x.data() * x.data().adjoint() * C64::from(1.0 / k);
    CovarianceMatrix::from_hermitian_unchecked(hermitian_part(&raw))
}

/// `R + epsilon * tr(R) / M * I`.
pub fn diagonal_load(r: &CovarianceMatrix, epsilon: f64) -> Result<CovarianceMatrix> {
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(domain(format!(
            "diagonal loading must be nonnegative, got {epsilon}"
        )));
    }
    let m = r.dim();
    let shift = epsilon * r.trace() / m as f64;
    let mut data = r.data.clone();
    for i in 0..m {
        data[(i, i)] += C64::from(shift);
    }
    Ok(CovarianceMatrix { data })
}

/// Solves `R x = b` for Hermitian positive definite `R` via Cholesky.
/// Pivots below `M * eps` of the largest diagonal entry count as singular.
pub(crate) fn hermitian_solve(r: &CMatrix, b: &crate::CVector) -> Result<crate::CVector> {
    let singular = || Error::Solver("covariance is numerically singular".into());
    let chol = nalgebra::Cholesky::new(r.clone()).ok_or_else(singular)?;
    let scale = r.diagonal().iter().map(|z| z.re).fold(0.0, f64::max);
    let min_pivot = chol.l_dirty().diagonal().iter().map(|z| z.norm_sqr()).fold(f64::INFINITY, f64::min);
    if !(min_pivot > r.nrows() as f64 * f64::EPSILON * scale) {
        return Err(singular());
    }
    Ok(chol.solve(b))
}
