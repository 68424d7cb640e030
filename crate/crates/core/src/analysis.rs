//! Beam patterns and the scalar metrics used to compare beamformers.
//!
//! All dB quantities are floored at [`DB_FLOOR`] so that exact pattern zeros
//! stay finite and comparable.

use crate::array::{steering_vector, steering_vector_unchecked, ArrayGeometry, Scenario};
use crate::error::{domain, Result};
use crate::{CVector, C64};

pub const DB_FLOOR: f64 = -200.0;

/// Default sampling of patterns used for metrics.
pub const METRIC_RESOLUTION_DEG: f64 = 0.1;

const GRID_EPS: f64 = 1e-9;

pub fn to_db(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Normalized beam pattern sampled on an increasing angle grid.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamPattern {
    angles_deg: Vec<f64>,
    gain_db: Vec<f64>,
    raw_gain: Vec<f64>,
}

impl BeamPattern {
    /// Builds a pattern from raw power gains; the peak is normalized to 0 dB.
    pub fn from_raw(angles_deg: Vec<f64>, raw_gain: Vec<f64>) -> Result<Self> {
        if angles_deg.len() != raw_gain.len() || angles_deg.is_empty() {
            return Err(domain("pattern angles and gains must be non-empty and equal length"));
        }
        if angles_deg.windows(2).any(|w| w[1] <= w[0]) {
            return Err(domain("pattern angles must be strictly increasing"));
        }
        if raw_gain.iter().any(|g| !(g.is_finite() && *g >= 0.0)) {
            return Err(domain("pattern gains must be finite and nonnegative"));
        }
        let peak = raw_gain.iter().copied().fold(0.0, f64::max);
        if !(peak > 0.0) {
            return Err(domain("pattern is identically zero"));
        }
        let gain_db = raw_gain
            .iter()
            .map(|&g| if g == peak { 0.0 } else { to_db(g / peak) })
            .collect();
        Ok(Self {
            angles_deg,
            gain_db,
            raw_gain,
        })
    }

    pub fn angles_deg(&self) -> &[f64] {
        &self.angles_deg
    }

    pub fn gain_db(&self) -> &[f64] {
        &self.gain_db
    }

    pub fn raw_gain(&self) -> &[f64] {
        &self.raw_gain
    }

    pub fn len(&self) -> usize {
        self.angles_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.angles_deg.is_empty()
    }

    fn nearest_index(&self, theta_deg: f64) -> usize {
        let mut best = 0;
        for (i, a) in self.angles_deg.iter().enumerate() {
            if (a - theta_deg).abs() < (self.angles_deg[best] - theta_deg).abs() {
                best = i;
            }
        }
        best
    }

    /// Normalized gain at the grid sample nearest to `theta_deg`.
    pub fn gain_db_at(&self, theta_deg: f64) -> f64 {
        self.gain_db[self.nearest_index(theta_deg)]
    }

    fn contains(&self, theta_deg: f64) -> bool {
        let first = self.angles_deg[0];
        let last = self.angles_deg[self.len() - 1];
        theta_deg >= first - GRID_EPS && theta_deg <= last + GRID_EPS
    }
}

/// Complex response `w^H a(theta)`.
pub fn response(w: &CVector, geometry: &ArrayGeometry, theta_deg: f64) -> Result<C64> {
    if w.len() != geometry.num_elements() {
        return Err(domain("weight vector length does not match the array"));
    }
    Ok(w.dotc(&steering_vector(geometry, theta_deg)?))
}

/// Pattern of `w` over `[-90, 90]` at `resolution_deg` spacing. The
/// resolution must divide 180 and be at most 1 degree.
pub fn beam_pattern(w: &CVector, geometry: &ArrayGeometry, resolution_deg: f64) -> Result<BeamPattern> {
    if !(resolution_deg > 0.0 && resolution_deg <= 1.0) {
        return Err(domain(format!(
            "pattern resolution must lie in (0, 1] deg, got {resolution_deg}"
        )));
    }
    let steps = 180.0 / resolution_deg;
    if (steps - steps.round()).abs() > 1e-6 {
        return Err(domain(format!(
            "pattern resolution {resolution_deg} deg does not divide 180"
        )));
    }
    let steps = steps.round() as usize;
    let angles = (0..=steps)
        .map(|i| (-90.0 + i as f64 * resolution_deg).clamp(-90.0, 90.0))
        .collect();
    beam_pattern_on(w, geometry, angles)
}

/// Pattern of `w` on an arbitrary increasing set of angles.
pub fn beam_pattern_on(w: &CVector, geometry: &ArrayGeometry, angles_deg: Vec<f64>) -> Result<BeamPattern> {
    if w.len() != geometry.num_elements() {
        return Err(domain("weight vector length does not match the array"));
    }
    if w.iter().all(|z| z.norm() == 0.0) {
        return Err(domain("weight vector is zero"));
    }
    if angles_deg.iter().any(|a| !a.is_finite() || a.abs() > 90.0 + GRID_EPS) {
        return Err(domain("pattern angles must lie in [-90, 90]"));
    }
    let raw = angles_deg
        .iter()
        .map(|&t| w.dotc(&steering_vector_unchecked(geometry, t)).norm_sqr())
        .collect();
    BeamPattern::from_raw(angles_deg, raw)
}

/// Deepest normalized gain within `window_deg` of `theta_deg`.
pub fn null_depth(pattern: &BeamPattern, theta_deg: f64, window_deg: f64) -> Result<f64> {
    if !(window_deg > 0.0) {
        return Err(domain(format!("null window must be positive, got {window_deg}")));
    }
    if !pattern.contains(theta_deg) {
        return Err(domain(format!("{theta_deg} deg is outside the pattern grid")));
    }
    pattern
        .angles_deg
        .iter()
        .zip(&pattern.gain_db)
        .filter(|(a, _)| (**a - theta_deg).abs() <= window_deg + GRID_EPS)
        .map(|(_, g)| *g)
        .reduce(f64::min)
        .ok_or_else(|| domain("no pattern samples inside the null window"))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SidelobeLevel {
    /// Highest gain outside the main lobe, or the larger edge value when the
    /// main lobe spans the whole grid.
    pub level_db: f64,
    pub mainlobe_deg: (f64, f64),
    pub has_sidelobes: bool,
}

/// Peak sidelobe relative to the main lobe around `mainlobe_center_deg`.
///
/// The main lobe is the local maximum within 2 degrees of the center,
/// extended on each side to the first local minimum.
pub fn sidelobe_level(pattern: &BeamPattern, mainlobe_center_deg: f64) -> Result<SidelobeLevel> {
    let g = &pattern.gain_db;
    let n = g.len();
    let is_local_max = |i: usize| {
        (i == 0 || g[i] >= g[i - 1]) && (i + 1 == n || g[i] >= g[i + 1])
    };
    let peak = (0..n)
        .filter(|&i| (pattern.angles_deg[i] - mainlobe_center_deg).abs() <= 2.0 + GRID_EPS)
        .filter(|&i| is_local_max(i))
        .min_by(|&a, &b| {
            let da = (pattern.angles_deg[a] - mainlobe_center_deg).abs();
            let db = (pattern.angles_deg[b] - mainlobe_center_deg).abs();
            da.total_cmp(&db)
        })
        .ok_or_else(|| {
            domain(format!(
                "no local maximum within 2 deg of {mainlobe_center_deg} deg"
            ))
        })?;

    let mut lo = peak;
    while lo > 0 && g[lo - 1] <= g[lo] {
        lo -= 1;
    }
    let mut hi = peak;
    while hi + 1 < n && g[hi + 1] <= g[hi] {
        hi += 1;
    }
    let outside = g[..lo].iter().chain(&g[hi + 1..]).copied().reduce(f64::max);
    let mainlobe_deg = (pattern.angles_deg[lo], pattern.angles_deg[hi]);
    Ok(match outside {
        Some(level_db) => SidelobeLevel {
            level_db,
            mainlobe_deg,
            has_sidelobes: true,
        },
        None => SidelobeLevel {
            level_db: g[0].max(g[n - 1]),
            mainlobe_deg,
            has_sidelobes: false,
        },
    })
}

/// Angle of the pattern peak minus `true_doa_deg`. Samples within 1e-12
/// relative of the peak tie; the one closest to the true direction wins.
pub fn pointing_error(pattern: &BeamPattern, true_doa_deg: f64) -> f64 {
    let peak = pattern.raw_gain.iter().copied().fold(0.0, f64::max);
    pattern
        .angles_deg
        .iter()
        .zip(&pattern.raw_gain)
        .filter(|(_, &g)| g >= peak * (1.0 - 1e-12))
        .map(|(a, _)| a - true_doa_deg)
        .min_by(|a, b| a.abs().total_cmp(&b.abs()))
        .unwrap_or(0.0)
}

/// Output SINR in dB from the scenario's true source powers:
/// `p0 |w^H a0|^2 / (sum_j pj |w^H aj|^2 + sigma^2 ||w||^2)`.
pub fn output_sinr(w: &CVector, scenario: &Scenario, geometry: &ArrayGeometry) -> Result<f64> {
    scenario.validate()?;
    let signal = scenario.soi_power() * response(w, geometry, scenario.soi_doa_deg)?.norm_sqr();
    let mut denom = scenario.noise_power * w.norm_squared();
    for (intf, p) in scenario.interferers.iter().zip(scenario.interferer_powers()) {
        denom += p * response(w, geometry, intf.doa_deg)?.norm_sqr();
    }
    if !(denom > 0.0) {
        return Err(domain("weight vector is zero"));
    }
    Ok(to_db(signal / denom))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::Interferer;

    fn uniform(m: usize) -> (ArrayGeometry, CVector) {
        let g = ArrayGeometry::half_wavelength(m).unwrap();
        let w = steering_vector(&g, 0.0).unwrap() / C64::from(m as f64);
        (g, w)
    }

    #[test]
    fn matched_filter_peaks_at_broadside() {
        let (g, w) = uniform(8);
        let p = beam_pattern(&w, &g, 0.1).unwrap();
        assert_eq!(p.len(), 1801);
        assert_eq!(p.gain_db_at(0.0), 0.0);
        assert_eq!(pointing_error(&p, 0.0), 0.0);
        assert_eq!(p.gain_db().iter().copied().fold(f64::MIN, f64::max), 0.0);
    }

    #[test]
    fn uniform_taper_first_nulls() {
        let (g, w) = uniform(8);
        let null = (2.0f64 / 8.0).asin().to_degrees();
        for theta in [-null, null] {
            let gain = response(&w, &g, theta).unwrap().norm_sqr();
            assert!(gain < 1e-20, "gain {gain} at {theta}");
        }
        let p = beam_pattern_on(&w, &g, vec![-30.0, -null, -5.0, 0.0, 5.0, null, 30.0]).unwrap();
        assert!(null_depth(&p, null, 1.0).unwrap() <= -100.0);
    }

    #[test]
    fn conjugate_weights_mirror_the_pattern() {
        let g = ArrayGeometry::half_wavelength(6).unwrap();
        let w = CVector::from_vec(
            (0..6).map(|i| C64::new(0.3 * i as f64 - 0.4, 0.1 + 0.05 * (i * i) as f64)).collect(),
        );
        let wc = w.map(|z| z.conj());
        let p = beam_pattern(&w, &g, 0.5).unwrap();
        let pc = beam_pattern(&wc, &g, 0.5).unwrap();
        let n = p.len();
        for i in 0..n {
            let a = p.raw_gain()[i];
            let b = pc.raw_gain()[n - 1 - i];
            assert!((a - b).abs() <= 1e-12 * a.max(1.0));
        }
    }

    #[test]
    fn zero_weights_rejected() {
        let g = ArrayGeometry::half_wavelength(4).unwrap();
        assert!(beam_pattern(&CVector::zeros(4), &g, 1.0).is_err());
        let (g, w) = uniform(4);
        assert!(beam_pattern(&w, &g, 2.0).is_err());
        assert!(beam_pattern(&w, &g, 0.7).is_err());
    }

    #[test]
    fn null_depth_floors_exact_zero() {
        let p = BeamPattern::from_raw(vec![-1.0, 0.0, 1.0], vec![1.0, 0.0, 0.5]).unwrap();
        assert_eq!(null_depth(&p, 0.0, 1.0).unwrap(), -200.0);
        assert!(null_depth(&p, 5.0, 1.0).is_err());
        assert!(null_depth(&p, 0.0, 0.0).is_err());
    }

    #[test]
    fn flat_pattern_has_no_null() {
        let p = BeamPattern::from_raw(vec![-2.0, -1.0, 0.0, 1.0, 2.0], vec![3.0; 5]).unwrap();
        assert_eq!(null_depth(&p, 0.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn null_depth_never_exceeds_gain_at_center() {
        let (g, w) = uniform(8);
        let p = beam_pattern(&w, &g, 0.1).unwrap();
        for theta in [-70.0, -14.5, 3.3, 40.0] {
            assert!(null_depth(&p, theta, 1.0).unwrap() <= p.gain_db_at(theta));
        }
    }

    #[test]
    fn two_element_quarter_wave_has_no_sidelobes() {
        let g = ArrayGeometry::new(2, 0.25).unwrap();
        let w = steering_vector(&g, 0.0).unwrap() / C64::from(2.0);
        let p = beam_pattern(&w, &g, 0.1).unwrap();
        let sll = sidelobe_level(&p, 0.0).unwrap();
        assert!(!sll.has_sidelobes);
        assert_eq!(sll.mainlobe_deg, (-90.0, 90.0));
        assert_eq!(sll.level_db, p.gain_db()[0].max(p.gain_db()[p.len() - 1]));
        assert!(sll.level_db <= 0.0);
    }

    #[test]
    fn sidelobe_requires_nearby_peak() {
        let (g, w) = uniform(8);
        let p = beam_pattern(&w, &g, 0.1).unwrap();
        // 8 deg sits on the main lobe's flank, far from any local maximum
        assert!(sidelobe_level(&p, 8.0).is_err());
    }

    #[test]
    fn pointing_error_follows_steer() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let w = steering_vector(&g, 3.0).unwrap() / C64::from(8.0);
        let p = beam_pattern(&w, &g, 0.1).unwrap();
        assert!((pointing_error(&p, 0.0) - 3.0).abs() <= 0.1);
    }

    #[test]
    fn pointing_error_tie_prefers_closest() {
        let p = BeamPattern::from_raw(vec![-2.0, -1.0, 0.0, 1.0, 2.0], vec![1.0, 0.2, 0.1, 0.2, 1.0]).unwrap();
        assert_eq!(pointing_error(&p, 1.5), 0.5);
        assert!((pointing_error(&p, -1.9) + 0.1).abs() < 1e-12);
        // symmetric plateau: both candidates are equally close
        assert_eq!(pointing_error(&p, 0.0).abs(), 2.0);
    }

    #[test]
    fn matched_filter_sinr_is_snr_plus_array_gain() {
        let (g, w) = uniform(8);
        let s = Scenario {
            soi_doa_deg: 0.0,
            soi_snr_db: 10.0,
            interferers: vec![],
            num_snapshots: 1,
            noise_power: 1.0,
            rng_seed: 0,
        };
        let sinr = output_sinr(&w, &s, &g).unwrap();
        assert!((sinr - (10.0 + 10.0 * 8f64.log10())).abs() < 1e-10);
        let scaled = &w * C64::new(-2.0, 0.7);
        assert!((output_sinr(&scaled, &s, &g).unwrap() - sinr).abs() < 1e-10);
    }

    #[test]
    fn orthogonal_weights_floor_sinr() {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        // a(14.4775 deg) is orthogonal to a(0) for M = 8
        let null = (0.25f64).asin().to_degrees();
        let w = steering_vector(&g, null).unwrap();
        let s = Scenario {
            soi_doa_deg: 0.0,
            soi_snr_db: 10.0,
            interferers: vec![Interferer { doa_deg: 40.0, inr_db: 10.0 }],
            num_snapshots: 1,
            noise_power: 1.0,
            rng_seed: 0,
        };
        assert_eq!(output_sinr(&w, &s, &g).unwrap(), DB_FLOOR);
    }
}
