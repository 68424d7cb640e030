//! Narrowband adaptive beamformers for uniform linear arrays.
//!
//! The crate covers the full chain of a simulation study:
//!
//! * [`array`]: ULA geometry, steering vectors and matrices, synthetic snapshots.
//! * [`covariance`]: sample covariance estimation and diagonal loading.
//! * [`weighting`]: the interference-aware penalty weights built from the
//!   correlation of the steering matrix with the data.
//! * [`solvers`]: MVDR, sparse-constraint (SC), weighted-sparse-constraint
//!   (WSC), robust ellipsoid-constrained (RMVB) and the robust weighted-sparse
//!   (RWSC) beamformer.
//! * [`analysis`]: beam patterns and scalar quality metrics.
//! * [`experiment`]: configuration parsing, Monte-Carlo runner and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod array;
pub mod covariance;
pub mod error;
pub mod experiment;
pub mod solvers;
pub mod weighting;

pub use error::{Error, Result};

/// Complex double used throughout the crate.
pub type C64 = num_complex::Complex64;
/// Dense complex column vector.
pub type CVector = nalgebra::DVector<C64>;
/// Dense complex matrix.
pub type CMatrix = nalgebra::DMatrix<C64>;
