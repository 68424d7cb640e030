//! Interference-aware penalty weights.
//!
//! Correlating the steering matrix with the data, `C = A^H X`, gives a coarse
//! spatial spectrum of what actually arrives at the array. The squared modulus
//! of each row mean, normalized to unit maximum, becomes the diagonal of the
//! weighting matrix `Q` applied to the sparse beam-pattern penalty.

use crate::array::{SnapshotMatrix, SteeringMatrix};
use crate::error::{domain, Error, Result};
use crate::CMatrix;

/// Diagonal of the N x N weighting matrix `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    diag: Vec<f64>,
}

impl WeightMatrix {
    pub fn new(diag: Vec<f64>) -> Result<Self> {
        if diag.is_empty() {
            return Err(domain("weight matrix must be non-empty"));
        }
        if diag.iter().any(|q| !(q.is_finite() && *q >= 0.0)) {
            return Err(domain("weights must be finite and nonnegative"));
        }
        Ok(Self { diag })
    }

    /// `Q = I`: every direction penalized equally.
    pub fn identity(n: usize) -> Self {
        Self { diag: vec![1.0; n] }
    }

    pub fn zeros(n: usize) -> Self {
        Self { diag: vec![0.0; n] }
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }
}

/// Squared modulus of each row's complex mean, divided by the largest such
/// value. An all-zero input yields the zero vector.
pub fn snm(c: &CMatrix) -> Result<Vec<f64>> {
    let k = c.ncols();
    if k == 0 {
        return Err(domain("snm needs at least one column"));
    }
    let raw: Vec<f64> = c
        .row_iter()
        .map(|row| (row.sum() / k as f64).norm_sqr())
        .collect();
    let max = raw.iter().copied().fold(0.0, f64::max);
    if max > 0.0 {
        Ok(raw.into_iter().map(|v| v / max).collect())
    } else {
        Ok(raw)
    }
}

/// `Q = diag[snm(A^H X)]`. Falls back to `Q = I` when the data carries no
/// energy along any grid direction.
pub fn build_q(a: &SteeringMatrix, x: &SnapshotMatrix) -> Result<WeightMatrix> {
    if a.num_elements() != x.num_elements() {
        return Err(Error::DimensionMismatch {
            what: "snapshot rows vs steering matrix rows",
            expected: a.num_elements(),
            actual: x.num_elements(),
        });
    }
    let c = a.data().adjoint() * x.data();
    let diag = snm(&c)?;
    if diag.iter().all(|&q| q == 0.0) {
        return Ok(WeightMatrix::identity(diag.len()));
    }
    WeightMatrix::new(diag)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{
        generate_snapshots, generate_snapshots_with, steering_matrix, ArrayGeometry, DoaGrid,
        Scenario, SnapshotOverrides,
    };
    use crate::C64;

    #[test]
    fn identical_rows_give_unit_weights() {
        let row = [C64::new(1.0, -2.0), C64::new(0.5, 0.5), C64::new(3.0, 0.0)];
        let c = CMatrix::from_fn(4, 3, |_, j| row[j]);
        assert_eq!(snm(&c).unwrap(), vec![1.0; 4]);
    }

    #[test]
    fn zero_input_gives_zero_vector() {
        assert_eq!(snm(&CMatrix::zeros(5, 3)).unwrap(), vec![0.0; 5]);
        assert!(snm(&CMatrix::zeros(5, 0)).is_err());
    }

    #[test]
    fn single_noiseless_source_peaks_at_its_grid_direction() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let scenario = Scenario {
            soi_doa_deg: 70.0,
            soi_snr_db: 0.0,
            interferers: vec![],
            num_snapshots: 1,
            noise_power: 1.0,
            rng_seed: 0,
        };
        let x = generate_snapshots_with(
            &scenario,
            &g,
            SnapshotOverrides {
                soi_amplitude: Some(C64::new(1.0, 0.0)),
                disable_noise: true,
            },
        )
        .unwrap();
        let grid = DoaGrid::uniform_excluding(0.0, 1.0).unwrap();
        let a = steering_matrix(&g, &grid);
        let q = build_q(&a, &x).unwrap();
        let i70 = grid.nearest_index(70.0);
        assert_eq!(q.diag()[i70], 1.0);
        // |a(70)^H a(70)| = M strictly dominates every other column
        for (i, &v) in q.diag().iter().enumerate() {
            if i != i70 {
                assert!(v < 1.0);
            }
        }
    }

    #[test]
    fn reference_scenario_weights_concentrate_on_strong_interferer() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let grid = DoaGrid::uniform_excluding(0.0, 1.0).unwrap();
        let a = steering_matrix(&g, &grid);
        let x = generate_snapshots(&Scenario::reference(4), &g).unwrap();
        let q = build_q(&a, &x).unwrap();
        assert_eq!(q.len(), 180);
        let imax = q
            .diag()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert!((grid.angles_deg()[imax] - 70.0).abs() <= 3.0);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let g8 = ArrayGeometry::half_wavelength(8).unwrap();
        let g4 = ArrayGeometry::half_wavelength(4).unwrap();
        let grid = DoaGrid::uniform_excluding(0.0, 1.0).unwrap();
        let a = steering_matrix(&g8, &grid);
        let x = generate_snapshots(&Scenario::reference(4), &g4).unwrap();
        assert!(matches!(
            build_q(&a, &x),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn silent_data_falls_back_to_identity() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        let grid = DoaGrid::uniform_excluding(0.0, 10.0).unwrap();
        let a = steering_matrix(&g, &grid);
        let x = SnapshotMatrix::from_matrix(CMatrix::zeros(4, 3)).unwrap();
        assert_eq!(build_q(&a, &x).unwrap(), WeightMatrix::identity(grid.len()));
    }

    #[test]
    fn weights_reject_negative_entries() {
        assert!(WeightMatrix::new(vec![0.5, -0.1]).is_err());
        assert!(WeightMatrix::new(vec![]).is_err());
    }
}
