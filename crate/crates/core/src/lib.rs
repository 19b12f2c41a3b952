//! Sparse recovery with orthogonal matching pursuit and residual ratio
//! thresholding (RRT).
//!
//! RRT picks the OMP iteration count without knowing either the noise
//! variance or the sparsity: it compares each residual ratio
//! `‖r^k‖ / ‖r^{k-1}‖` against a deterministic threshold built from the
//! inverse regularized incomplete Beta function and keeps the last iteration
//! that falls below it.
//!
//! Module map:
//!
//! - [`special`]: incomplete Beta function, its inverse and series.
//! - [`linalg`], [`lsq`], [`seed`]: design matrices, incremental least
//!   squares, seeded sampling.
//! - [`omp`]: traced OMP runs.
//! - [`rrt`]: threshold schedule, selection and closed-form bounds.
//! - [`baselines`]: OMP with known sparsity, noise-level stopping and
//!   cross-validation.
//! - [`io`]: numeric CSV matrices.
//! - [`experiments`]: Monte-Carlo harness, guarantee checks and outlier
//!   detection for robust regression.

pub mod baselines;
pub mod error;
pub mod experiments;
pub mod io;
pub mod linalg;
pub mod lsq;
pub mod omp;
pub mod rrt;
pub mod seed;
pub mod special;

pub use error::{Error, Result};
