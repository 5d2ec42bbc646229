//! Registry of the named Clifford gates a circuit may use.
//!
//! Each gate carries two independent descriptions: a signed tableau (used by propagation and
//! design) and a dense unitary (used only by the dense simulator). Tests check that they agree.

use std::f64::consts::FRAC_1_SQRT_2;

use nalgebra::{Complex, DMatrix};

use crate::pauli::{CliffordTableau, PauliString};

type C = Complex<f64>;

/// Names accepted in circuit and model files.
pub const GATE_NAMES: &[&str] = &["Gi", "Gxpi2", "Gypi2", "Gzpi2", "Gh", "Gs", "Gcz", "Gcnot"];

pub fn gate_arity(name: &str) -> Option<usize> {
    match name {
        "Gi" | "Gxpi2" | "Gypi2" | "Gzpi2" | "Gh" | "Gs" => Some(1),
        "Gcz" | "Gcnot" => Some(2),
        _ => None,
    }
}

/// Local tableau on `arity` qubits, in target order.
pub fn gate_tableau(name: &str) -> Option<CliffordTableau> {
    let (x, z): (&[&str], &[&str]) = match name {
        "Gi" => (&["X"], &["Z"]),
        // exp(-iπ/4 X)
        "Gxpi2" => (&["X"], &["-Y"]),
        // exp(-iπ/4 Y)
        "Gypi2" => (&["-Z"], &["X"]),
        // exp(-iπ/4 Z), equal to S up to global phase
        "Gzpi2" | "Gs" => (&["Y"], &["Z"]),
        "Gh" => (&["Z"], &["X"]),
        "Gcz" => (&["XZ", "ZX"], &["ZI", "IZ"]),
        // control is the first target
        "Gcnot" => (&["XX", "IX"], &["ZI", "ZZ"]),
        _ => return None,
    };
    let parse = |v: &[&str]| v.iter().map(|s| s.parse::<PauliString>().expect("static label")).collect();
    Some(CliffordTableau::from_images(parse(x), parse(z)).expect("registry tableau is symplectic"))
}

/// Dense unitary on `arity` qubits. Qubit 0 (first target) is the most significant bit of the
/// basis index, matching the left-to-right string order.
pub fn gate_unitary(name: &str) -> Option<DMatrix<C>> {
    let r = |v: f64| C::new(v, 0.0);
    let i = |v: f64| C::new(0.0, v);
    let h = FRAC_1_SQRT_2;
    let m = match name {
        "Gi" => DMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), r(1.0)]),
        "Gxpi2" => DMatrix::from_row_slice(2, 2, &[r(h), i(-h), i(-h), r(h)]),
        "Gypi2" => DMatrix::from_row_slice(2, 2, &[r(h), r(-h), r(h), r(h)]),
        "Gzpi2" => DMatrix::from_row_slice(2, 2, &[C::new(h, -h), r(0.0), r(0.0), C::new(h, h)]),
        "Gs" => DMatrix::from_row_slice(2, 2, &[r(1.0), r(0.0), r(0.0), i(1.0)]),
        "Gh" => DMatrix::from_row_slice(2, 2, &[r(h), r(h), r(h), r(-h)]),
        "Gcz" => {
            let mut m = DMatrix::identity(4, 4);
            m[(3, 3)] = r(-1.0);
            m
        }
        "Gcnot" => {
            let mut m = DMatrix::zeros(4, 4);
            m[(0, 0)] = r(1.0);
            m[(1, 1)] = r(1.0);
            m[(2, 3)] = r(1.0);
            m[(3, 2)] = r(1.0);
            m
        }
        _ => return None,
    };
    Some(m)
}
