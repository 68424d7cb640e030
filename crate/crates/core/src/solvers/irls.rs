//! Sparse-penalized beamformers via iteratively reweighted least squares.
//!
//! With `u = w^H A Q` the penalty `sum_i |u_i|^p` is smoothed to
//! `sum_i (|u_i|^2 + eps)^(p/2)`. That function is concave in `|u_i|^2`, so
//! its tangent at the current iterate majorizes it:
//!
//! ```text
//! (s + eps)^(p/2) <= const + d_i * s,   d_i = (p/2) (s_i + eps)^((p-2)/2)
//! ```
//!
//! Minimizing the majorizer is a constrained quadratic problem with effective
//! covariance `R + gamma * A Q D Q A^H`, solved exactly each step. The smoothed
//! objective therefore never increases. `eps` is annealed by 10x every 10
//! iterations down to `1e-12`.

use crate::array::SteeringMatrix;
use crate::covariance::CovarianceSource;
use crate::error::Result;
use crate::weighting::WeightMatrix;
use crate::{CMatrix, CVector, C64};

use super::mvdr::{distortionless, quadratic_form};
use super::socp::robust_solve;
use super::{
    check_len, prepare_covariance, BeamformerWeights, Diagnostics, Ellipsoid, Method, SolverOptions,
};

const EPS_FLOOR: f64 = 1e-12;
const EPS_DECAY: f64 = 0.1;
const EPS_PERIOD: usize = 10;

/// Sparse-constraint beamformer: every grid direction penalized equally.
pub fn solve_sc<R: CovarianceSource + ?Sized>(
    r: &R,
    a: &SteeringMatrix,
    a0: &CVector,
    opts: &SolverOptions,
) -> Result<BeamformerWeights> {
    let q = WeightMatrix::identity(a.num_directions());
    let mut out = penalized(r, a, &q, Constraint::Distortionless(a0), opts)?;
    out.method = Method::Sc;
    Ok(out)
}

/// Weighted sparse-constraint beamformer with penalty `||w^H A Q||_p^p`.
pub fn solve_wsc<R: CovarianceSource + ?Sized>(
    r: &R,
    a: &SteeringMatrix,
    q: &WeightMatrix,
    a0: &CVector,
    opts: &SolverOptions,
) -> Result<BeamformerWeights> {
    let mut out = penalized(r, a, q, Constraint::Distortionless(a0), opts)?;
    out.method = Method::Wsc;
    Ok(out)
}

/// Robust weighted sparse-constraint beamformer: the weighted penalty under
/// the worst-case unit-gain constraint over `ellipsoid`.
pub fn solve_rwsc<R: CovarianceSource + ?Sized>(
    r: &R,
    a: &SteeringMatrix,
    q: &WeightMatrix,
    ellipsoid: &Ellipsoid,
    opts: &SolverOptions,
) -> Result<BeamformerWeights> {
    let mut out = penalized(r, a, q, Constraint::Ellipsoid(ellipsoid), opts)?;
    out.method = Method::Rwsc;
    Ok(out)
}

#[derive(Clone, Copy)]
enum Constraint<'a> {
    Distortionless(&'a CVector),
    Ellipsoid(&'a Ellipsoid),
}

impl Constraint<'_> {
    fn dim(&self) -> usize {
        match self {
            Constraint::Distortionless(a0) => a0.len(),
            Constraint::Ellipsoid(e) => e.dim(),
        }
    }

    fn solve(&self, r_eff: &CMatrix) -> Result<CVector> {
        match self {
            Constraint::Distortionless(a0) => distortionless(r_eff, a0),
            Constraint::Ellipsoid(e) => Ok(robust_solve(r_eff, e)?.w),
        }
    }

    fn residual(&self, w: &CVector) -> f64 {
        match self {
            Constraint::Distortionless(a0) => -(w.dotc(a0) - 1.0).norm(),
            Constraint::Ellipsoid(e) => e.worst_case_gain(w) - 1.0,
        }
    }
}

struct Penalty {
    /// `A Q`: steering columns scaled by their weights.
    basis: CMatrix,
    gamma: f64,
    p: f64,
}

impl Penalty {
    fn responses(&self, w: &CVector) -> CVector {
        // conj(w^H b_i); only the moduli matter
        self.basis.adjoint() * w
    }

    fn value(&self, w: &CVector, eps: f64) -> f64 {
        self.responses(w)
            .iter()
            .map(|u| (u.norm_sqr() + eps).powf(self.p / 2.0))
            .sum::<f64>()
            * self.gamma
    }

    /// `gamma * B D B^H` with the majorizer weights at `w`.
    fn curvature(&self, w: &CVector, eps: f64) -> CMatrix {
        let u = self.responses(w);
        let half_p = self.p / 2.0;
        let mut scaled = self.basis.clone();
        for (j, ui) in u.iter().enumerate() {
            let d = half_p * (ui.norm_sqr() + eps).powf(half_p - 1.0);
            scaled.column_mut(j).scale_mut(self.gamma * d);
        }
        let mut out = scaled * self.basis.adjoint();
        // exact Hermitian symmetry for the factorization
        out = (&out + out.adjoint()) * C64::from(0.5);
        out
    }
}

fn smoothing_at(iteration: usize, eps0: f64) -> f64 {
    let stage = (iteration.saturating_sub(1) / EPS_PERIOD) as i32;
    (eps0 * EPS_DECAY.powi(stage)).max(EPS_FLOOR.min(eps0))
}

fn penalized<R: CovarianceSource + ?Sized>(
    r: &R,
    a: &SteeringMatrix,
    q: &WeightMatrix,
    constraint: Constraint<'_>,
    opts: &SolverOptions,
) -> Result<BeamformerWeights> {
    opts.validate()?;
    let r = r.covariance();
    check_len("constraint dimension", r.dim(), constraint.dim())?;
    check_len("steering matrix rows", r.dim(), a.num_elements())?;
    check_len("weight matrix size", a.num_directions(), q.len())?;

    let loaded = prepare_covariance(&r, opts.diagonal_loading)?;
    let rl = loaded.data();

    let mut basis = a.data().clone();
    for (j, &qj) in q.diag().iter().enumerate() {
        basis.column_mut(j).scale_mut(qj);
    }
    let penalty = Penalty {
        basis,
        gamma: opts.gamma,
        p: opts.p,
    };
    let objective = |w: &CVector, eps: f64| quadratic_form(rl, w) + penalty.value(w, eps);

    let mut w = constraint.solve(rl)?;
    let mut history = vec![objective(&w, smoothing_at(1, opts.irls_epsilon))];
    let mut converged = opts.gamma == 0.0;
    let mut iterations = 0;

    if !converged {
        for it in 1..=opts.max_iterations {
            let eps = smoothing_at(it, opts.irls_epsilon);
            let before = objective(&w, eps);
            let r_eff = rl + penalty.curvature(&w, eps);
            let next = constraint.solve(&r_eff)?;
            let after = objective(&next, eps);
            iterations = it;
            // an inexact inner solve must not be allowed to undo progress
            if after <= before {
                w = next;
                history.push(after);
            } else {
                history.push(before);
            }
            let change = (before - after).abs() / after.abs().max(f64::MIN_POSITIVE);
            if change < opts.objective_tolerance {
                converged = true;
                break;
            }
        }
    }

    let final_eps = smoothing_at(iterations.max(1), opts.irls_epsilon);
    Ok(BeamformerWeights {
        diagnostics: Diagnostics {
            iterations,
            final_objective: objective(&w, final_eps),
            constraint_residual: constraint.residual(&w),
            converged,
            objective_history: history,
        },
        w,
        method: Method::Sc,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::array::{steering_matrix, steering_vector, ArrayGeometry, DoaGrid, Scenario};
    use crate::covariance::CovarianceMatrix;
    use crate::solvers::{mvdr, solve_rmvb};

    fn setup() -> (ArrayGeometry, CovarianceMatrix, SteeringMatrix, CVector) {
        let g = ArrayGeometry::half_wavelength(8).unwrap();
        let r = CovarianceMatrix::new(Scenario::reference(0).analytic_covariance(&g).unwrap()).unwrap();
        let grid = DoaGrid::uniform_excluding(0.0, 1.0).unwrap();
        let a = steering_matrix(&g, &grid);
        let a0 = steering_vector(&g, 0.0).unwrap();
        (g, r, a, a0)
    }

    #[test]
    fn zero_gamma_reduces_to_mvdr() {
        let (_, r, a, a0) = setup();
        let opts = SolverOptions { gamma: 0.0, ..Default::default() };
        let sc = solve_sc(&r, &a, &a0, &opts).unwrap();
        let mv = mvdr(&r, &a0).unwrap();
        assert!((sc.w - mv.w).norm() < 1e-10);
    }

    #[test]
    fn zero_weights_reduce_to_mvdr() {
        let (_, r, a, a0) = setup();
        let wsc = solve_wsc(&r, &a, &WeightMatrix::zeros(a.num_directions()), &a0, &SolverOptions::default()).unwrap();
        let mv = mvdr(&r, &a0).unwrap();
        assert!((wsc.w - mv.w).norm() < 1e-10);
    }

    #[test]
    fn identity_weights_reduce_to_sc() {
        let (_, r, a, a0) = setup();
        let opts = SolverOptions::default();
        let sc = solve_sc(&r, &a, &a0, &opts).unwrap();
        let wsc = solve_wsc(&r, &a, &WeightMatrix::identity(a.num_directions()), &a0, &opts).unwrap();
        let max_diff = (&sc.w - &wsc.w).iter().map(|z| z.norm()).fold(0.0, f64::max);
        assert!(max_diff < 1e-8);
    }

    #[test]
    fn objective_history_is_monotone_and_constraint_holds() {
        let (_, r, a, a0) = setup();
        let sc = solve_sc(&r, &a, &a0, &SolverOptions::default()).unwrap();
        let h = &sc.diagnostics.objective_history;
        assert!(h.len() >= 2);
        for pair in h.windows(2) {
            assert!(pair[1] <= pair[0] + 1e-9, "{} -> {}", pair[0], pair[1]);
        }
        assert!((sc.w.dotc(&a0) - 1.0).norm() <= 1e-8);
    }

    #[test]
    fn rwsc_zero_gamma_matches_rmvb() {
        let (g, r, a, _) = setup();
        let e = crate::solvers::build_ellipsoid(&g, 0.0, 3.0, 13).unwrap();
        let opts = SolverOptions { gamma: 0.0, ..Default::default() };
        let rw = solve_rwsc(&r, &a, &WeightMatrix::identity(a.num_directions()), &e, &opts).unwrap();
        let rm = solve_rmvb(&r, &e, &opts).unwrap();
        assert!((rw.w - rm.w).norm() < 1e-8);
    }

    #[test]
    fn rwsc_point_ellipsoid_matches_sc() {
        let (_, r, a, a0) = setup();
        let opts = SolverOptions::default();
        let rw = solve_rwsc(&r, &a, &WeightMatrix::identity(a.num_directions()), &Ellipsoid::point(a0.clone()), &opts).unwrap();
        let sc = solve_sc(&r, &a, &a0, &opts).unwrap();
        assert!((rw.w - sc.w).norm() < 1e-6);
    }

    #[test]
    fn smoothing_schedule() {
        assert_eq!(smoothing_at(1, 1e-8), 1e-8);
        assert_eq!(smoothing_at(10, 1e-8), 1e-8);
        assert!((smoothing_at(11, 1e-8) - 1e-9).abs() < 1e-24);
        assert_eq!(smoothing_at(1000, 1e-8), 1e-12);
    }

    #[test]
    fn invalid_options_rejected() {
        let (_, r, a, a0) = setup();
        let bad = SolverOptions { p: 1.5, ..Default::default() };
        assert!(solve_sc(&r, &a, &a0, &bad).is_err());
        let bad = SolverOptions { gamma: -1.0, ..Default::default() };
        assert!(solve_sc(&r, &a, &a0, &bad).is_err());
    }
}
