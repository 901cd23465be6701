//! Universal sampling recovery of multivariate periodic functions in the
//! uniform norm.
//!
//! The crate provides the building blocks and the experiment harness:
//!
//! - [`torus`]: exact torus-point arithmetic and frequency-domain
//!   combinatorics (rectangles, hyperbolic crosses, shape enumeration);
//! - [`kernels`]: Dirichlet, Fejér and de la Vallée Poussin kernels with
//!   exact Fourier coefficients;
//! - [`lattices`]: Fibonacci and Korobov rank-1 point sets, generator search,
//!   binary-net construction and verification;
//! - [`cubature`]: equal-weight lattice cubature and arithmetic exactness
//!   certification on hyperbolic crosses;
//! - [`recovery`]: kernel-convolution recovery, discrete Chebyshev (minimax)
//!   fitting and the nonlinear universal selectors built on both;
//! - [`discretization`]: empirical estimation of uniform-norm discretization
//!   constants for point sets against shape collections;
//! - [`classes`]: Bernoulli-kernel test functions with known anisotropic
//!   smoothness and best-approximation oracles;
//! - [`bench`]: reproducible experiment drivers (rate tables, operator-norm
//!   tables, exactness sweeps, universality comparisons).

pub mod bench;
pub mod classes;
pub mod cubature;
pub mod discretization;
pub mod error;
pub mod eval;
pub mod kernels;
pub mod lattices;
pub mod minimax;
pub mod recovery;
pub mod torus;

pub use error::{Error, Result};
