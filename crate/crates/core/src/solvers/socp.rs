//! Robust minimum-variance beamforming over an ellipsoidal uncertainty set.
//!
//! `min w^H R w  s.t.  re(w^H c) - ||E^H w|| >= 1` is a second-order cone
//! program. It is solved on the real embedding `x = [re w; im w]` with a
//! log-barrier interior-point method, then polished by Newton's method on the
//! KKT system of the active constraint.

use nalgebra::{DMatrix, DVector};

use crate::covariance::CovarianceSource;
use crate::error::{Error, Result};
use crate::{CMatrix, CVector, C64};

use super::mvdr::quadratic_form;
use super::{check_len, prepare_covariance, BeamformerWeights, Diagnostics, Ellipsoid, Method, SolverOptions};

type RMatrix = DMatrix<f64>;
type RVector = DVector<f64>;

/// Barrier parameter of one second-order cone.
const CONE_DEGREE: f64 = 2.0;
const DUALITY_GAP: f64 = 1e-9;
const NEWTON_TOL: f64 = 1e-10;
const BARRIER_GROWTH: f64 = 10.0;
const MAX_NEWTON_STEPS: usize = 100;
const MAX_POLISH_STEPS: usize = 30;

pub fn solve_rmvb<R: CovarianceSource + ?Sized>(
    r: &R,
    ellipsoid: &Ellipsoid,
    opts: &SolverOptions,
) -> Result<BeamformerWeights> {
    opts.validate()?;
    let r = r.covariance();
    check_len("ellipsoid dimension", r.dim(), ellipsoid.dim())?;
    let loaded = prepare_covariance(&r, opts.diagonal_loading)?;
    let sol = robust_solve(loaded.data(), ellipsoid)?;
    Ok(BeamformerWeights {
        diagnostics: Diagnostics {
            iterations: sol.newton_steps,
            final_objective: quadratic_form(loaded.data(), &sol.w),
            constraint_residual: ellipsoid.worst_case_gain(&sol.w) - 1.0,
            converged: sol.converged,
            objective_history: Vec::new(),
        },
        w: sol.w,
        method: Method::Rmvb,
    })
}

pub(crate) struct RobustSolution {
    pub w: CVector,
    pub newton_steps: usize,
    pub converged: bool,
}

/// Solves the robust problem for an already loaded Hermitian `r`.
pub(crate) fn robust_solve(r: &CMatrix, ellipsoid: &Ellipsoid) -> Result<RobustSolution> {
    let c = ellipsoid.center();
    if ellipsoid.rank() == 0 {
        // point set: the linear constraint re(w^H c) >= 1 is active, giving
        // R^-1 c / re(c^H R^-1 c)
        let v = crate::covariance::hermitian_solve(r, c)?;
        let denom = c.dotc(&v).re;
        if !(denom > 0.0) {
            return Err(Error::Solver("c^H R^-1 c is not positive".into()));
        }
        return Ok(RobustSolution {
            w: v / C64::from(denom),
            newton_steps: 0,
            converged: true,
        });
    }

    let problem = ConeProblem::new(r, ellipsoid);
    let x0 = problem.strictly_feasible_start(r, ellipsoid)?;
    let (x, steps, converged) = problem.barrier(x0)?;
    let x = problem.polish(&x).unwrap_or(x);
    Ok(RobustSolution {
        w: from_real(&x),
        newton_steps: steps,
        converged,
    })
}

/// `min x^T H x  s.t.  g^T x - 1 >= ||G x||`.
struct ConeProblem {
    h: RMatrix,
    g: RVector,
    big_g: RMatrix,
}

impl ConeProblem {
    fn new(r: &CMatrix, ellipsoid: &Ellipsoid) -> Self {
        let m = r.nrows();
        let mut h = RMatrix::zeros(2 * m, 2 * m);
        for i in 0..m {
            for j in 0..m {
                let z = r[(i, j)];
                h[(i, j)] = z.re;
                h[(i + m, j + m)] = z.re;
                h[(i, j + m)] = -z.im;
                h[(i + m, j)] = z.im;
            }
        }
        let g = to_real(ellipsoid.center());
        // E^H w in real coordinates: [Er^T Ei^T; -Ei^T Er^T] x
        let e = ellipsoid.shape();
        let k = e.ncols();
        let mut big_g = RMatrix::zeros(2 * k, 2 * m);
        for i in 0..m {
            for j in 0..k {
                let z = e[(i, j)];
                big_g[(j, i)] = z.re;
                big_g[(j, i + m)] = z.im;
                big_g[(j + k, i)] = -z.im;
                big_g[(j + k, i + m)] = z.re;
            }
        }
        Self { h, g, big_g }
    }

    fn objective(&self, x: &RVector) -> f64 {
        x.dot(&(&self.h * x))
    }

    /// Cone slack `(s, y)` with `s = g^T x - 1`, `y = G x`.
    fn slack(&self, x: &RVector) -> (f64, RVector) {
        (self.g.dot(x) - 1.0, &self.big_g * x)
    }

    fn interior(&self, x: &RVector) -> bool {
        let (s, y) = self.slack(x);
        s > 0.0 && s * s - y.norm_squared() > 0.0
    }

    fn strictly_feasible_start(&self, r: &CMatrix, ellipsoid: &Ellipsoid) -> Result<RVector> {
        let c = ellipsoid.center();
        let e = ellipsoid.shape();
        let mut candidates = vec![c.clone()];
        // c with its component in range(E) removed, so E^H v = 0
        let svd = e.clone().svd(true, false);
        if let Some(u) = svd.u {
            let mut v = c.clone();
            for j in 0..u.ncols() {
                let col = u.column(j);
                v -= col * col.dotc(c);
            }
            candidates.push(v);
        }
        if let Ok(v) = crate::covariance::hermitian_solve(r, c) {
            candidates.push(v);
        }
        for v in candidates {
            let margin = ellipsoid.worst_case_gain(&v);
            if margin > 1e-12 * v.norm() * c.norm() {
                let x = to_real(&(v * C64::from(2.0 / margin)));
                if self.interior(&x) {
                    return Ok(x);
                }
            }
        }
        Err(Error::Solver(
            "infeasible: no weight vector reaches unit gain over the whole ellipsoid".into(),
        ))
    }

    /// Value, gradient and Hessian of `t x^T H x - log(s^2 - ||y||^2)`.
    fn centering_terms(&self, x: &RVector, t: f64) -> Option<(f64, RVector, RMatrix)> {
        let (s, y) = self.slack(x);
        let delta = s * s - y.norm_squared();
        if !(s > 0.0 && delta > 0.0) {
            return None;
        }
        let hx = &self.h * x;
        let gty = self.big_g.transpose() * &y;
        // d(delta)/dx = 2 s g - 2 G^T y
        let dd = (&self.g * (2.0 * s)) - &gty * 2.0;
        let value = t * x.dot(&hx) - delta.ln();
        let grad = &hx * (2.0 * t) - &dd / delta;
        let gtg = self.big_g.transpose() * &self.big_g;
        let d2 = (&self.g * self.g.transpose()) * 2.0 - gtg * 2.0;
        let hess = &self.h * (2.0 * t) - d2 / delta + (&dd * dd.transpose()) / (delta * delta);
        Some((value, grad, hess))
    }

    fn barrier(&self, mut x: RVector) -> Result<(RVector, usize, bool)> {
        let mut t = 1.0;
        let mut steps = 0;
        let mut converged = true;
        loop {
            let mut centered = false;
            for _ in 0..MAX_NEWTON_STEPS {
                let (value, grad, hess) = self
                    .centering_terms(&x, t)
                    .ok_or_else(|| Error::Solver("barrier iterate left the cone".into()))?;
                let dx = newton_direction(hess, &grad)?;
                let decrement = -grad.dot(&dx);
                steps += 1;
                // below the rounding level of the barrier value nothing more can be gained
                let floor = 16.0 * f64::EPSILON * value.abs();
                if decrement / 2.0 <= NEWTON_TOL.max(floor) {
                    centered = true;
                    break;
                }
                let mut step = 1.0;
                let mut accepted = false;
                let mut stalled = false;
                while step > 1e-14 {
                    let cand = &x + &dx * step;
                    if let Some((v, _, _)) = self.centering_terms(&cand, t) {
                        if v <= value - 0.25 * step * decrement {
                            stalled = value - v <= floor;
                            x = cand;
                            accepted = true;
                            break;
                        }
                    }
                    step *= 0.5;
                }
                if !accepted || stalled {
                    // no further progress at this precision
                    centered = true;
                    break;
                }
            }
            converged &= centered;
            if CONE_DEGREE / t < DUALITY_GAP {
                break;
            }
            t *= BARRIER_GROWTH;
        }
        Ok((x, steps, converged))
    }

    /// Newton's method on `2 H x = lambda grad h(x)`, `h(x) = 0`, with
    /// `h(x) = g^T x - ||G x|| - 1`. Returns `None` when the refined point is
    /// not an improvement.
    fn polish(&self, x0: &RVector) -> Option<RVector> {
        let n = x0.len();
        let kkt_residual = |x: &RVector, lambda: f64| -> Option<(RVector, RVector, f64, RMatrix)> {
            let y = &self.big_g * x;
            let ny = y.norm();
            if ny <= 1e-300 {
                return None;
            }
            let gty = self.big_g.transpose() * &y;
            let grad_h = &self.g - &gty / ny;
            let h = self.g.dot(x) - ny - 1.0;
            let mut res = RVector::zeros(n + 1);
            let stat = &self.h * x * 2.0 - &grad_h * lambda;
            res.rows_mut(0, n).copy_from(&stat);
            res[n] = h;
            // Hessian of h: -(G^T G / ||y|| - G^T y y^T G / ||y||^3)
            let gtg = self.big_g.transpose() * &self.big_g;
            let hess_h = -(gtg / ny - (&gty * gty.transpose()) / (ny * ny * ny));
            Some((res, grad_h, h, hess_h))
        };

        let hx2 = &self.h * x0 * 2.0;
        let (_, grad_h0, _, _) = kkt_residual(x0, 0.0)?;
        let mut lambda = grad_h0.dot(&hx2) / grad_h0.norm_squared();
        if !(lambda > 0.0) {
            return None;
        }
        let mut x = x0.clone();
        let (start_res, ..) = kkt_residual(&x, lambda)?;
        let mut best = start_res.norm();
        for _ in 0..MAX_POLISH_STEPS {
            let (res, grad_h, _, hess_h) = kkt_residual(&x, lambda)?;
            if res.norm() <= 1e-15 * (1.0 + lambda) {
                break;
            }
            let mut jac = RMatrix::zeros(n + 1, n + 1);
            let top = &self.h * 2.0 - hess_h * lambda;
            jac.view_mut((0, 0), (n, n)).copy_from(&top);
            jac.view_mut((0, n), (n, 1)).copy_from(&(-&grad_h));
            jac.view_mut((n, 0), (1, n)).copy_from(&grad_h.transpose());
            let step = jac.lu().solve(&(-&res))?;
            let cand_x = &x + step.rows(0, n);
            let cand_l = lambda + step[n];
            let (cand_res, ..) = kkt_residual(&cand_x, cand_l)?;
            if cand_res.norm() >= best {
                break;
            }
            best = cand_res.norm();
            x = cand_x;
            lambda = cand_l;
        }
        let (_, _, h, _) = kkt_residual(&x, lambda)?;
        let feasible = h >= -1e-12;
        let no_worse = self.objective(&x) <= self.objective(x0) * (1.0 + 1e-9);
        (lambda > 0.0 && feasible && no_worse).then_some(x)
    }
}

fn newton_direction(hess: RMatrix, grad: &RVector) -> Result<RVector> {
    let rhs = -grad;
    if let Some(chol) = hess.clone().cholesky() {
        return Ok(chol.solve(&rhs));
    }
    hess.lu()
        .solve(&rhs)
        .ok_or_else(|| Error::Solver("singular Newton system in barrier solve".into()))
}

fn to_real(v: &CVector) -> RVector {
    let m = v.len();
    RVector::from_fn(2 * m, |i, _| if i < m { v[i].re } else { v[i - m].im })
}

fn from_real(x: &RVector) -> CVector {
    let m = x.len() / 2;
    CVector::from_fn(m, |i, _| C64::new(x[i], x[i + m]))
}
