//! Symplectic Pauli algebra, Clifford tableaus and stabilizer states.

pub mod gates;
mod stabilizer;
mod string;
mod tableau;

pub use stabilizer::{apply_layer, stabilizer_sign, StabilizerSign, StabilizerState};
pub use string::{commutes, pauli_mul, Pauli, PauliString, Words};
pub use tableau::{conjugate, CliffordTableau};
