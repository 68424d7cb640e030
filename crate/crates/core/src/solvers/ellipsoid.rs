//! Uncertainty ellipsoid `{c + E u : ||u|| <= 1}` around an estimated
//! steering vector.

use crate::array::{steering_vector, ArrayGeometry};
use crate::error::{domain, Result};
use crate::{CMatrix, CVector, C64};

/// Singular values below this fraction of the largest are dropped from the
/// shape matrix.
const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Ellipsoid {
    center: CVector,
    shape: CMatrix,
}

impl Ellipsoid {
    /// `shape` must have full column rank (or zero columns).
    pub fn new(center: CVector, shape: CMatrix) -> Result<Self> {
        if shape.nrows() != center.len() {
            return Err(domain(format!(
                "ellipsoid shape has {} rows, center has {}",
                shape.nrows(),
                center.len()
            )));
        }
        if shape.ncols() > shape.nrows() {
            return Err(domain("ellipsoid shape has more columns than rows"));
        }
        if shape.ncols() > 0 {
            let sv = shape.clone().svd(false, false).singular_values;
            let max = sv.max();
            if !(sv.min() > 1e-12 * max) {
                return Err(domain("ellipsoid shape is rank deficient"));
            }
        }
        Ok(Self { center, shape })
    }

    pub fn point(center: CVector) -> Self {
        let m = center.len();
        Self {
            center,
            shape: CMatrix::zeros(m, 0),
        }
    }

    pub fn center(&self) -> &CVector {
        &self.center
    }

    pub fn shape(&self) -> &CMatrix {
        &self.shape
    }

    pub fn rank(&self) -> usize {
        self.shape.ncols()
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    /// `min re(w^H a)` over the ellipsoid: `re(w^H c) - ||E^H w||`.
    pub fn worst_case_gain(&self, w: &CVector) -> f64 {
        w.dotc(&self.center).re - (self.shape.adjoint() * w).norm()
    }

    /// For a candidate vector `a`, returns `(||E^+ (a - c)||, r)` where `r` is
    /// the norm of the part of `a - c` outside the shape's column space.
    /// `a` lies in the ellipsoid when the first is at most 1 and `r` is zero.
    pub fn containment(&self, a: &CVector) -> (f64, f64) {
        let d = a - &self.center;
        if self.rank() == 0 {
            return (0.0, d.norm());
        }
        let svd = self.shape.clone().svd(true, true);
        let eps = 1e-13 * svd.singular_values.max();
        let u = svd.solve(&d, eps).expect("both singular factors computed");
        let off = (&d - &self.shape * &u).norm();
        (u.norm(), off)
    }
}

/// Ellipsoid covering `a(theta)` for `theta` in `[theta0 - half_width,
/// theta0 + half_width]`.
///
/// The center is the mean of `num_samples` equally spaced steering vectors;
/// the shape is their principal axes scaled so the farthest sample sits on
/// the boundary. A zero half-width gives the point `a(theta0)`.
pub fn build_ellipsoid(
    geometry: &ArrayGeometry,
    theta0_deg: f64,
    half_width_deg: f64,
    num_samples: usize,
) -> Result<Ellipsoid> {
    if num_samples < 2 {
        return Err(domain(format!("need at least 2 samples, got {num_samples}")));
    }
    if !(half_width_deg >= 0.0 && half_width_deg.is_finite()) {
        return Err(domain(format!(
            "half width must be nonnegative, got {half_width_deg}"
        )));
    }
    if half_width_deg == 0.0 {
        return Ok(Ellipsoid::point(steering_vector(geometry, theta0_deg)?));
    }

    let m = geometry.num_elements();
    let step = 2.0 * half_width_deg / (num_samples - 1) as f64;
    let samples = (0..num_samples)
        .map(|i| steering_vector(geometry, theta0_deg - half_width_deg + i as f64 * step))
        .collect::<Result<Vec<_>>>()?;
    let center = samples.iter().fold(CVector::zeros(m), |acc, a| acc + a) / C64::from(num_samples as f64);
    let centered = CMatrix::from_columns(
        &samples.iter().map(|a| a - &center).collect::<Vec<_>>(),
    );

    let svd = centered.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sv = &svd.singular_values;
    let smax = sv.max();
    if !(smax > 0.0) {
        return Ok(Ellipsoid::point(center));
    }
    let keep: Vec<usize> = (0..sv.len()).filter(|&j| sv[j] > RANK_TOL * smax).collect();

    // m_j bounds every sample's coordinate on axis j, so any semi-axes with
    // sum_j m_j^2 / s_j^2 <= 1 contain all samples. The smallest total
    // sum_j s_j^2 under that bound is s_j^2 = m_j * sum_k m_k.
    let bounds: Vec<f64> = keep
        .iter()
        .map(|&j| {
            let col = u.column(j);
            samples
                .iter()
                .map(|a| col.dotc(&(a - &center)).norm())
                .fold(0.0, f64::max)
        })
        .collect();
    let total: f64 = bounds.iter().sum();
    let axes = CMatrix::from_columns(
        &keep
            .iter()
            .zip(&bounds)
            .map(|(&j, &m)| u.column(j) * C64::from((m * total).sqrt()))
            .collect::<Vec<_>>(),
    );
    Ellipsoid::new(center, axes)
}
