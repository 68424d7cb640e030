use crate::covariance::{hermitian_solve, CovarianceSource};
use crate::error::{domain, Result};
use crate::{CMatrix, CVector};

use super::{check_len, prepare_covariance, BeamformerWeights, Diagnostics, Method, DEFAULT_DIAGONAL_LOADING};

/// Closed-form MVDR weights `R^-1 a0 / (a0^H R^-1 a0)` with the default
/// diagonal loading.
pub fn mvdr<R: CovarianceSource + ?Sized>(r: &R, a0: &CVector) -> Result<BeamformerWeights> {
    mvdr_loaded(r, a0, DEFAULT_DIAGONAL_LOADING)
}

pub fn mvdr_loaded<R: CovarianceSource + ?Sized>(
    r: &R,
    a0: &CVector,
    loading: f64,
) -> Result<BeamformerWeights> {
    let r = r.covariance();
    check_len("steering vector length", r.dim(), a0.len())?;
    let loaded = prepare_covariance(&r, loading)?;
    let w = distortionless(loaded.data(), a0)?;
    let objective = quadratic_form(loaded.data(), &w);
    Ok(BeamformerWeights {
        diagnostics: Diagnostics {
            iterations: 1,
            final_objective: objective,
            constraint_residual: -(w.dotc(a0) - 1.0).norm(),
            converged: true,
            objective_history: Vec::new(),
        },
        w,
        method: Method::Mvdr,
    })
}

/// `R^-1 a / (a^H R^-1 a)` for an already loaded Hermitian `R`. Dividing by
/// the complex denominator makes `w^H a = 1` hold to rounding.
pub(crate) fn distortionless(r: &CMatrix, a0: &CVector) -> Result<CVector> {
    if a0.iter().all(|z| z.norm() == 0.0) {
        return Err(domain("steering vector is zero"));
    }
    let v = hermitian_solve(r, a0)?;
    let denom = a0.dotc(&v);
    if !(denom.re > 0.0) || !denom.re.is_finite() {
        return Err(crate::Error::Solver(
            "a0^H R^-1 a0 is not positive; covariance is not positive definite".into(),
        ));
    }
    Ok(v / denom)
}

/// Real part of `w^H R w`.
pub(crate) fn quadratic_form(r: &CMatrix, w: &CVector) -> f64 {
    w.dotc(&(r * w)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_vector, ArrayGeometry, Scenario};
    use crate::covariance::CovarianceMatrix;
    use crate::C64;

    fn reference_r() -> (ArrayGeometry, CovarianceMatrix) {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let r = Scenario::reference(0).analytic_covariance(&g).unwrap();
        (g, CovarianceMatrix::new(r).unwrap())
    }

    #[test]
    fn identity_covariance_gives_matched_filter() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let a0 = steering_vector(&g, 17.0).unwrap();
        let r = CovarianceMatrix::new(CMatrix::identity(8, 8)).unwrap();
        let w = mvdr(&r, &a0).unwrap().w;
        let expected = &a0 / C64::from(8.0);
        assert!((w - expected).norm() < 1e-12);
    }

    #[test]
    fn distortionless_constraint_holds() {
        let (g, r) = reference_r();
        for theta in [-40.0, 0.0, 12.5, 55.0] {
            let a0 = steering_vector(&g, theta).unwrap();
            let w = mvdr(&r, &a0).unwrap().w;
            assert!((w.dotc(&a0) - 1.0).norm() < 1e-10);
        }
    }

    #[test]
    fn kkt_stationarity() {
        let (g, r) = reference_r();
        let a0 = steering_vector(&g, 0.0).unwrap();
        let w = mvdr_loaded(&r, &a0, 0.0).unwrap().w;
        let rw = r.data() * &w;
        let lambda = a0.dotc(&rw) / a0.dotc(&a0);
        let resid = (&rw - &a0 * lambda).norm() / rw.norm();
        assert!(resid <= 1e-8, "KKT residual {resid}");
    }

    #[test]
    fn invariant_to_covariance_scale() {
        let (g, r) = reference_r();
        let a0 = steering_vector(&g, 0.0).unwrap();
        let w1 = mvdr(&r, &a0).unwrap().w;
        let scaled = CovarianceMatrix::new(r.data() * C64::from(37.5)).unwrap();
        let w2 = mvdr(&scaled, &a0).unwrap().w;
        assert!((w1 - w2).norm() < 1e-10);
    }

    #[test]
    fn strong_interferer_is_suppressed() {
        let (g, r) = reference_r();
        let a0 = steering_vector(&g, 0.0).unwrap();
        let w = mvdr(&r, &a0).unwrap().w;
        let g70 = w.dotc(&steering_vector(&g, 70.0).unwrap()).norm_sqr();
        let g0 = w.dotc(&a0).norm_sqr();
        assert!(10.0 * (g70 / g0).log10() <= -30.0);
    }

    #[test]
    fn zero_steering_vector_is_rejected() {
        let r = CovarianceMatrix::new(CMatrix::identity(4, 4)).unwrap();
        assert!(mvdr(&r, &CVector::zeros(4)).is_err());
        assert!(mvdr(&r, &CVector::zeros(3)).is_err());
    }

    #[test]
    fn singular_covariance_without_loading_fails() {
        let r = CovarianceMatrix::new(CMatrix::zeros(4, 4)).unwrap();
        let a0 = CVector::from_element(4, C64::from(1.0));
        assert!(mvdr_loaded(&r, &a0, 0.0).is_err());
    }
}
