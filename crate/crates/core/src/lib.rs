//! Linearized gate set tomography for Clifford gate sets.
//!
//! The crate builds sparse error-generator models, propagates their generators through
//! random Clifford circuits, assembles first-order design matrices for Z-type observables and
//! inverts them: a pseudoinverse for Hamiltonian rates and non-negative least squares for
//! stochastic rates. A dense and a Taylor-expansion simulator provide synthetic data.

pub mod circuit;
pub mod design;
pub mod error;
pub mod exec;
pub mod experiments;
pub mod io;
pub mod model;
pub mod pauli;
pub mod propagation;
pub mod simulator;
pub mod solver;

pub use error::{Error, Result};
pub use exec::Execution;
