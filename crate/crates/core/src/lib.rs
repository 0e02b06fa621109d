//! Truncated Fock-space toolkit for a reduced weak-interaction model.
//!
//! The crate assembles the free and interacting Hamiltonians on a finite momentum
//! grid with capped occupations, then checks the spectral inequalities of the
//! model numerically: relative bounds, ground-state bounds, the gap cascade along
//! the infrared scale ladder, the factorization of cutoff spectral functions,
//! Mourre positivity and weighted resolvent bounds.

pub mod error;
pub mod experiment;
pub mod fock;
pub mod kernels;
pub mod report;
pub mod scales;
pub mod spectral;
pub mod verify;

pub use error::{Error, Result};
pub use fock::{FockBasis, SparseOperator};
pub use kernels::{DiscreteKernel, KernelGrids};
pub use num_complex::Complex64;
pub use report::{CheckReport, Status};
pub use scales::{ModelParams, ScaleLadder, Species};
