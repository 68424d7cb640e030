//! Beamformer weight computation.
//!
//! | method | problem |
//! |--------|---------|
//! | `mvdr` | `min w^H R w` s.t. `w^H a0 = 1` |
//! | `sc`   | `min w^H R w + gamma ||w^H A||_p^p` s.t. `w^H a0 = 1` |
//! | `wsc`  | `min w^H R w + gamma ||w^H A Q||_p^p` s.t. `w^H a0 = 1` |
//! | `rmvb` | `min w^H R w` s.t. `re(w^H a) >= 1` for every `a` in an ellipsoid |
//! | `rwsc` | `min w^H R w + gamma ||w^H A Q||_p^p` under the ellipsoid constraint |
//!
//! The penalized problems are solved by iteratively reweighted least squares:
//! each step folds the current penalty majorizer into an effective covariance
//! and solves the corresponding constrained quadratic problem exactly.

mod ellipsoid;
mod irls;
mod mvdr;
mod socp;

use std::fmt;
use std::str::FromStr;

pub use ellipsoid::{build_ellipsoid, Ellipsoid};
pub use irls::{solve_rwsc, solve_sc, solve_wsc};
pub use mvdr::{mvdr, mvdr_loaded};
pub use socp::solve_rmvb;

use crate::covariance::{diagonal_load, hermitian_part, CovarianceMatrix};
use crate::error::{domain, Error, Result};
use crate::CVector;

pub const DEFAULT_DIAGONAL_LOADING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Method {
    Mvdr,
    Sc,
    Wsc,
    Rmvb,
    Rwsc,
}

impl Method {
    pub const ALL: [Method; 5] = [Method::Mvdr, Method::Sc, Method::Wsc, Method::Rmvb, Method::Rwsc];

    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Mvdr => "mvdr",
            Method::Sc => "sc",
            Method::Wsc => "wsc",
            Method::Rmvb => "rmvb",
            Method::Rwsc => "rwsc",
        }
    }

    /// Whether the method constrains the gain over an uncertainty ellipsoid.
    pub fn is_robust(&self) -> bool {
        matches!(self, Method::Rmvb | Method::Rwsc)
    }

    /// Whether the method uses the data-derived weighting `Q`.
    pub fn is_weighted(&self) -> bool {
        matches!(self, Method::Wsc | Method::Rwsc)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| domain(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Diagnostics {
    pub iterations: usize,
    pub final_objective: f64,
    /// Worst-case `re(w^H a) - 1` over the constraint set. Equality-constrained
    /// methods report `-|w^H a0 - 1|`.
    pub constraint_residual: f64,
    pub converged: bool,
    /// Smoothed objective after every IRLS update, starting from the initial
    /// point. Empty for the non-iterative solvers.
    pub objective_history: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub w: CVector,
    pub method: Method,
    pub diagnostics: Diagnostics,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverOptions {
    /// Penalty weight `gamma`.
    pub gamma: f64,
    /// Penalty exponent, `0 < p <= 1`.
    pub p: f64,
    pub max_iterations: usize,
    /// Relative change of the smoothed objective that ends the IRLS loop.
    pub objective_tolerance: f64,
    /// Initial IRLS smoothing `eps` in `(|u|^2 + eps)^(p/2)`.
    pub irls_epsilon: f64,
    pub diagonal_loading: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            gamma: 2.0,
            p: 1.0,
            max_iterations: 100,
            objective_tolerance: 1e-8,
            irls_epsilon: 1e-8,
            diagonal_loading: DEFAULT_DIAGONAL_LOADING,
        }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 0.0 && self.p <= 1.0) {
            return Err(domain(format!("p must lie in (0, 1], got {}", self.p)));
        }
        if !(self.gamma >= 0.0 && self.gamma.is_finite()) {
            return Err(domain(format!("gamma must be nonnegative, got {}", self.gamma)));
        }
        if self.max_iterations == 0 {
            return Err(domain("max_iterations must be at least 1"));
        }
        if !(self.objective_tolerance > 0.0) {
            return Err(domain("objective_tolerance must be positive"));
        }
        if !(self.irls_epsilon > 0.0) {
            return Err(domain("irls_epsilon must be positive"));
        }
        if !(self.diagonal_loading >= 0.0 && self.diagonal_loading.is_finite()) {
            return Err(domain("diagonal_loading must be nonnegative"));
        }
        Ok(())
    }
}

/// Symmetrize and diagonally load a covariance before factorization.
pub(crate) fn prepare_covariance(r: &CovarianceMatrix, loading: f64) -> Result<CovarianceMatrix> {
    let sym = CovarianceMatrix::from_hermitian_unchecked(hermitian_part(r.data()));
    diagonal_load(&sym, loading)
}

pub(crate) fn check_len(what: &'static str, expected: usize, actual: usize) -> Result<()> {
    if expected != actual {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            actual,
        });
    }
    Ok(())
}
