//! Low-rank matrix sensing at desk scale.
//!
//! This crate implements the pieces needed to study nuclear-norm-penalized
//! matrix recovery empirically:
//!
//! * [`matrix`] / [`linalg`] — dense matrices and the SVD-based operators
//!   (soft/hard singular value thresholding, tangent-space projections,
//!   block decompositions) that every solver builds on;
//! * [`sensing`] — linear measurement operators, problem generation with
//!   calibrated noise, empirical restricted-isometry estimation, and the
//!   JSON problem-file format;
//! * [`solvers`] — the convex ISTA baseline, rank-projected proximal
//!   gradient descent, a generic constrained proximal-gradient driver, and
//!   Burer-Monteiro factored gradient descent with second-order
//!   criticality certification;
//! * [`certificate`] — subgradient optimality certificates, singular-value
//!   censuses, and the rank-bound condition quantities.
//!
//! All randomness flows from explicit 64-bit seeds (see [`rng`]), so every
//! generated object is reproducible bit-for-bit within a build.

pub mod certificate;
pub mod error;
pub mod linalg;
pub mod matrix;
pub mod rng;
pub mod sensing;
pub mod solvers;

pub use error::{Error, Result};
pub use matrix::DenseMatrix;
