//! Coherent-state path integrals on an imaginary-time lattice.
//!
//! The crate collects everything needed to check, numerically and in exact
//! arithmetic, how the choice of time-lattice prescription fixes the value of
//! a continuum coherent-state path integral:
//!
//! * [`fock`]: truncated Fock-space matrices and the exact partition-function oracle.
//! * [`symbols`]: normal ordering plus Wick, anti-Wick and Weyl symbols in exact rationals.
//! * [`gaussian`]: the Gaussian path integral, its Green function and lattice determinants.
//! * [`quadrature`]: Gauss-Laguerre and Gauss-Legendre rules.
//! * [`lattice`]: transfer-matrix evaluation of lattice path integrals on a phase-space grid.
//! * [`spin`]: SU(2) coherent-state symbols.

pub mod error;
pub mod fock;
pub mod gaussian;
pub mod lattice;
pub mod quadrature;
pub mod spin;
pub mod symbols;

pub use error::{Error, Result};

/// Complex scalar used for all matrices.
pub type C64 = num_complex::Complex64;
