//! Uniform linear array model: geometry, steering vectors, and synthetic
//! narrowband snapshots.
//!
//! Element `m` (zero based) of the steering vector toward `theta` is
//! `exp(j * m * phi)` with `phi = 2 * pi * (d / lambda) * sin(theta)`.
//! Angles are degrees from broadside at every public boundary.

use std::f64::consts::PI;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result};
use crate::{CMatrix, CVector, C64};

/// Tolerance used when comparing grid angles against the SOI direction.
const ANGLE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayGeometry {
    num_elements: usize,
    spacing_wavelengths: f64,
}

impl ArrayGeometry {
    pub fn new(num_elements: usize, spacing_wavelengths: f64) -> Result<Self> {
        if num_elements < 2 {
            return Err(domain(format!(
                "array needs at least 2 elements, got {num_elements}"
            )));
        }
        if !(spacing_wavelengths > 0.0 && spacing_wavelengths.is_finite()) {
            return Err(domain(format!(
                "element spacing must be positive, got {spacing_wavelengths}"
            )));
        }
        Ok(Self {
            num_elements,
            spacing_wavelengths,
        })
    }

    /// Half-wavelength spaced ULA.
    pub fn half_wavelength(num_elements: usize) -> Result<Self> {
        Self::new(num_elements, 0.5)
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn spacing_wavelengths(&self) -> f64 {
        self.spacing_wavelengths
    }

    /// Inter-element phase progression for a plane wave from `theta_deg`.
    pub fn phase_step(&self, theta_deg: f64) -> f64 {
        2.0 * PI * self.spacing_wavelengths * theta_deg.to_radians().sin()
    }
}

fn check_angle(theta_deg: f64) -> Result<()> {
    if !theta_deg.is_finite() || theta_deg.abs() > 90.0 + ANGLE_EPS {
        return Err(domain(format!(
            "angle {theta_deg} deg outside [-90, 90]"
        )));
    }
    Ok(())
}

/// Array response `a(theta)` of a unit plane wave.
pub fn steering_vector(geometry: &ArrayGeometry, theta_deg: f64) -> Result<CVector> {
    check_angle(theta_deg)?;
    Ok(steering_vector_unchecked(geometry, theta_deg))
}

pub(crate) fn steering_vector_unchecked(geometry: &ArrayGeometry, theta_deg: f64) -> CVector {
    let phi = geometry.phase_step(theta_deg);
    CVector::from_iterator(
        geometry.num_elements(),
        (0..geometry.num_elements()).map(|m| C64::from_polar(1.0, m as f64 * phi)),
    )
}

/// Ordered set of candidate interference directions used by the sparse
/// penalty. Never contains the steering direction itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaGrid {
    angles_deg: Vec<f64>,
}

impl DoaGrid {
    /// Validates an explicit list of angles against the steering direction.
    pub fn new(angles_deg: Vec<f64>, soi_deg: f64) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(domain("DOA grid is empty"));
        }
        for &a in &angles_deg {
            check_angle(a)?;
            if (a - soi_deg).abs() <= ANGLE_EPS {
                return Err(domain(format!(
                    "DOA grid contains the steering angle {soi_deg} deg"
                )));
            }
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("DOA grid must be strictly increasing"));
        }
        Ok(Self { angles_deg })
    }

    /// Uniform grid over [-90, 90] with `step_deg` spacing, skipping the
    /// steering direction. A 1 degree step around a 0 degree SOI gives the
    /// 180 directions [-90, 0) and (0, 90].
    pub fn uniform_excluding(soi_deg: f64, step_deg: f64) -> Result<Self> {
        check_angle(soi_deg)?;
        if !(step_deg > 0.0 && step_deg <= 180.0) {
            return Err(domain(format!("grid step must be in (0, 180], got {step_deg}")));
        }
        let count = (180.0 / step_deg + ANGLE_EPS).floor() as usize + 1;
        let angles = (0..count)
            .map(|i| -90.0 + i as f64 * step_deg)
            .filter(|a| (a - soi_deg).abs() > ANGLE_EPS)
            .collect();
        Self::new(angles, soi_deg)
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    /// Index of the grid angle closest to `theta_deg`.
    pub fn nearest_index(&self, theta_deg: f64) -> usize {
        self.angles_deg
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - theta_deg).abs().total_cmp(&(b.1 - theta_deg).abs()))
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// M x N matrix whose columns are the steering vectors of a [`DoaGrid`].
#[derive(Debug, Clone)]
pub struct SteeringMatrix {
    data: CMatrix,
    grid: DoaGrid,
}

impl SteeringMatrix {
    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn grid(&self) -> &DoaGrid {
        &self.grid
    }

    pub fn num_elements(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_directions(&self) -> usize {
        self.data.ncols()
    }
}

pub fn steering_matrix(geometry: &ArrayGeometry, grid: &DoaGrid) -> SteeringMatrix {
    let m = geometry.num_elements();
    let mut data = CMatrix::zeros(m, grid.len());
    for (n, &theta) in grid.angles_deg().iter().enumerate() {
        data.set_column(n, &steering_vector_unchecked(geometry, theta));
    }
    SteeringMatrix {
        data,
        grid: grid.clone(),
    }
}

/// A narrowband interferer: direction and interference-to-noise ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interferer {
    pub doa_deg: f64,
    pub inr_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub soi_doa_deg: f64,
    pub soi_snr_db: f64,
    pub interferers: Vec<Interferer>,
    pub num_snapshots: usize,
    pub noise_power: f64,
    pub rng_seed: u64,
}

impl Scenario {
    /// Eight-element study: SOI at broadside with 10 dB SNR, interferers at
    /// -30 and 30 degrees (20 dB INR) and 70 degrees (40 dB INR), 100
    /// snapshots, unit noise power.
    pub fn reference(rng_seed: u64) -> Self {
        Self {
            soi_doa_deg: 0.0,
            soi_snr_db: 10.0,
            interferers: vec![
                Interferer { doa_deg: -30.0, inr_db: 20.0 },
                Interferer { doa_deg: 30.0, inr_db: 20.0 },
                Interferer { doa_deg: 70.0, inr_db: 40.0 },
            ],
            num_snapshots: 100,
            noise_power: 1.0,
            rng_seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        check_angle(self.soi_doa_deg)?;
        if self.num_snapshots == 0 {
            return Err(domain("num_snapshots must be at least 1"));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(domain(format!(
                "noise_power must be positive, got {}",
                self.noise_power
            )));
        }
        for (j, intf) in self.interferers.iter().enumerate() {
            check_angle(intf.doa_deg)?;
            if (intf.doa_deg - self.soi_doa_deg).abs() <= ANGLE_EPS {
                return Err(domain(format!(
                    "interferer {j} shares the SOI direction {} deg",
                    self.soi_doa_deg
                )));
            }
            if self.interferers[..j]
                .iter()
                .any(|o| (o.doa_deg - intf.doa_deg).abs() <= ANGLE_EPS)
            {
                return Err(domain(format!(
                    "interferer {j} duplicates direction {} deg",
                    intf.doa_deg
                )));
            }
        }
        Ok(())
    }

    /// SOI power relative to the scenario's noise power.
    pub fn soi_power(&self) -> f64 {
        self.noise_power * db_to_linear(self.soi_snr_db)
    }

    pub fn interferer_powers(&self) -> Vec<f64> {
        self.interferers
            .iter()
            .map(|i| self.noise_power * db_to_linear(i.inr_db))
            .collect()
    }

    /// Expected covariance `sigma^2 I + sum_l p_l a(theta_l) a(theta_l)^H`.
    pub fn analytic_covariance(&self, geometry: &ArrayGeometry) -> Result<CMatrix> {
        self.validate()?;
        let m = geometry.num_elements();
        let mut r = CMatrix::identity(m, m) * C64::from(self.noise_power);
        let a0 = steering_vector_unchecked(geometry, self.soi_doa_deg);
        r += &a0 * a0.adjoint() * C64::from(self.soi_power());
        for (intf, p) in self.interferers.iter().zip(self.interferer_powers()) {
            let a = steering_vector_unchecked(geometry, intf.doa_deg);
            r += &a * a.adjoint() * C64::from(p);
        }
        Ok(r)
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Testing hooks that strip the stochastic parts out of the signal model.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SnapshotOverrides {
    /// Replace the random SOI amplitude with this constant at every snapshot.
    pub soi_amplitude: Option<C64>,
    /// Drop the additive noise term.
    pub disable_noise: bool,
}

/// M x K matrix of array snapshots, one column per time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct SnapshotMatrix {
    data: CMatrix,
}

impl SnapshotMatrix {
    pub fn from_matrix(data: CMatrix) -> Result<Self> {
        if data.ncols() == 0 || data.nrows() == 0 {
            return Err(domain("snapshot matrix must be non-empty"));
        }
        Ok(Self { data })
    }

    pub fn data(&self) -> &CMatrix {
        &self.data
    }

    pub fn num_elements(&self) -> usize {
        self.data.nrows()
    }

    pub fn num_snapshots(&self) -> usize {
        self.data.ncols()
    }
}

/// Draw `K` snapshots `x(k) = s(k) a(theta0) + sum_j beta_j(k) a(theta_j) + n(k)`.
///
/// Sources and noise are i.i.d. zero-mean circular complex Gaussians; their
/// variances follow from SNR/INR relative to `noise_power`. Output is a pure
/// function of `(scenario, geometry)`.
pub fn generate_snapshots(scenario: &Scenario, geometry: &ArrayGeometry) -> Result<SnapshotMatrix> {
    generate_snapshots_with(scenario, geometry, SnapshotOverrides::default())
}

pub fn generate_snapshots_with(
    scenario: &Scenario,
    geometry: &ArrayGeometry,
    overrides: SnapshotOverrides,
) -> Result<SnapshotMatrix> {
    scenario.validate()?;
    let m = geometry.num_elements();
    let k = scenario.num_snapshots;
    let mut rng = ChaCha8Rng::seed_from_u64(scenario.rng_seed);

    let mut sources: Vec<(CVector, f64)> = Vec::with_capacity(scenario.interferers.len() + 1);
    sources.push((
        steering_vector_unchecked(geometry, scenario.soi_doa_deg),
        scenario.soi_power(),
    ));
    for (intf, p) in scenario.interferers.iter().zip(scenario.interferer_powers()) {
        sources.push((steering_vector_unchecked(geometry, intf.doa_deg), p));
    }

    let mut data = CMatrix::zeros(m, k);
    for col in 0..k {
        let mut x = CVector::zeros(m);
        for (l, (a, power)) in sources.iter().enumerate() {
            // draw even when overridden so the stream layout does not depend on hooks
            let drawn = complex_gaussian(&mut rng, *power);
            let amp = match (l, overrides.soi_amplitude) {
                (0, Some(fixed)) => fixed,
                _ => drawn,
            };
            x.axpy(amp, a, C64::from(1.0));
        }
        for xm in x.iter_mut() {
            let n = complex_gaussian(&mut rng, scenario.noise_power);
            if !overrides.disable_noise {
                *xm += n;
            }
        }
        data.set_column(col, &x);
    }
    Ok(SnapshotMatrix { data })
}

fn complex_gaussian(rng: &mut ChaCha8Rng, power: f64) -> C64 {
    let scale = (power / 2.0).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(scale * re, scale * im)
}
