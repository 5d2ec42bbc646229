//! Dense state-vector reference built from first principles, shared by the integration tests.
//! Qubit 0 is the most significant bit of a basis index.

#![allow(dead_code)]

use lgst_core::circuit::{Circuit, GateOp};
use lgst_core::pauli::{Pauli, PauliString};
use num_complex::Complex64 as C;
use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub dim: usize,
    pub a: Vec<C>,
}

impl Mat {
    pub fn zeros(dim: usize) -> Self {
        Self { dim, a: vec![C::new(0.0, 0.0); dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.a[i * dim + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn from_rows(rows: &[&[C]]) -> Self {
        let dim = rows.len();
        Self { dim, a: rows.iter().flat_map(|r| r.iter().copied()).collect() }
    }

    pub fn at(&self, i: usize, j: usize) -> C {
        self.a[i * self.dim + j]
    }

    pub fn mul(&self, o: &Mat) -> Mat {
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let v = self.at(i, k);
                if v == C::new(0.0, 0.0) {
                    continue;
                }
                for j in 0..d {
                    out.a[i * d + j] += v * o.at(k, j);
                }
            }
        }
        out
    }

    pub fn adjoint(&self) -> Mat {
        let d = self.dim;
        let mut out = Mat::zeros(d);
        for i in 0..d {
            for j in 0..d {
                out.a[j * d + i] = self.at(i, j).conj();
            }
        }
        out
    }

    pub fn scale(&self, s: C) -> Mat {
        Mat { dim: self.dim, a: self.a.iter().map(|v| v * s).collect() }
    }

    pub fn add(&self, o: &Mat) -> Mat {
        Mat { dim: self.dim, a: self.a.iter().zip(&o.a).map(|(x, y)| x + y).collect() }
    }

    pub fn kron(&self, o: &Mat) -> Mat {
        let (d1, d2) = (self.dim, o.dim);
        let mut out = Mat::zeros(d1 * d2);
        for i in 0..d1 {
            for j in 0..d1 {
                for k in 0..d2 {
                    for l in 0..d2 {
                        out.a[(i * d2 + k) * d1 * d2 + j * d2 + l] = self.at(i, j) * o.at(k, l);
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[C]) -> Vec<C> {
        (0..self.dim).map(|i| (0..self.dim).map(|j| self.at(i, j) * v[j]).sum()).collect()
    }

    /// `Tr(self† o) / dim`.
    pub fn overlap(&self, o: &Mat) -> C {
        self.a.iter().zip(&o.a).map(|(x, y)| x.conj() * y).sum::<C>() / self.dim as f64
    }
}

fn c(re: f64, im: f64) -> C {
    C::new(re, im)
}

pub fn letter(p: Pauli) -> Mat {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    match p {
        Pauli::I => Mat::from_rows(&[&[o, z], &[z, o]]),
        Pauli::X => Mat::from_rows(&[&[z, o], &[o, z]]),
        Pauli::Y => Mat::from_rows(&[&[z, c(0.0, -1.0)], &[c(0.0, 1.0), z]]),
        Pauli::Z => Mat::from_rows(&[&[o, z], &[z, -o]]),
    }
}

/// `i^phase · P_0 ⊗ P_1 ⊗ …`.
pub fn pauli_matrix(p: &PauliString) -> Mat {
    let mut m = Mat::identity(1);
    for q in 0..p.num_qubits() {
        m = m.kron(&letter(p.get(q)));
    }
    m.scale(C::i().powu(u32::from(p.phase_exp())))
}

/// `exp(-iπ/4 P) = (I - iP)/√2`.
fn quarter_turn(p: Pauli) -> Mat {
    Mat::identity(2).add(&letter(p).scale(c(0.0, -1.0))).scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0))
}

pub fn gate_matrix(name: &str) -> Mat {
    let (o, z) = (c(1.0, 0.0), c(0.0, 0.0));
    match name {
        "Gi" => Mat::identity(2),
        "Gxpi2" => quarter_turn(Pauli::X),
        "Gypi2" => quarter_turn(Pauli::Y),
        "Gzpi2" => quarter_turn(Pauli::Z),
        "Gs" => Mat::from_rows(&[&[o, z], &[z, c(0.0, 1.0)]]),
        "Gh" => letter(Pauli::X).add(&letter(Pauli::Z)).scale(c(std::f64::consts::FRAC_1_SQRT_2, 0.0)),
        "Gcz" => {
            let mut m = Mat::identity(4);
            m.a[15] = -o;
            m
        }
        "Gcnot" => {
            // |0⟩⟨0| ⊗ I + |1⟩⟨1| ⊗ X
            let p0 = Mat::from_rows(&[&[o, z], &[z, z]]);
            let p1 = Mat::from_rows(&[&[z, z], &[z, o]]);
            p0.kron(&Mat::identity(2)).add(&p1.kron(&letter(Pauli::X)))
        }
        other => panic!("no reference matrix for {other}"),
    }
}

/// `local` acting on `targets` (first target is the most significant local bit).
pub fn embed(local: &Mat, targets: &[usize], n: usize) -> Mat {
    let dim = 1 << n;
    let k = targets.len();
    let mut out = Mat::zeros(dim);
    let bit = |idx: usize, q: usize| (idx >> (n - 1 - q)) & 1;
    for col in 0..dim {
        let lc = targets.iter().fold(0, |acc, &t| (acc << 1) | bit(col, t));
        for lr in 0..(1 << k) {
            let v = local.at(lr, lc);
            if v == c(0.0, 0.0) {
                continue;
            }
            let mut row = col;
            for (d, &t) in targets.iter().enumerate() {
                let b = (lr >> (k - 1 - d)) & 1;
                let mask = 1 << (n - 1 - t);
                row = if b == 1 { row | mask } else { row & !mask };
            }
            out.a[row * dim + col] += v;
        }
    }
    out
}

pub fn circuit_unitary(circuit: &Circuit) -> Mat {
    let n = circuit.num_qubits();
    let mut u = Mat::identity(1 << n);
    for layer in circuit.layers() {
        for op in layer {
            u = embed(&gate_matrix(&op.gate), &op.targets, n).mul(&u);
        }
    }
    u
}

/// `U|0…0⟩`.
pub fn circuit_state(circuit: &Circuit) -> Vec<C> {
    let u = circuit_unitary(circuit);
    (0..u.dim).map(|i| u.at(i, 0)).collect()
}

pub fn expectation(psi: &[C], m: &Mat) -> C {
    let mv = m.apply(psi);
    psi.iter().zip(&mv).map(|(a, b)| a.conj() * b).sum()
}

/// Every `n`-qubit Pauli with phase 0, in a fixed order.
pub fn all_paulis(n: usize) -> Vec<PauliString> {
    let letters = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];
    (0..4usize.pow(n as u32))
        .map(|code| {
            let terms: Vec<(usize, Pauli)> = (0..n).map(|q| (q, letters[(code >> (2 * q)) & 3])).collect();
            PauliString::from_sparse(n, &terms)
        })
        .collect()
}

/// Reads a matrix back as `i^k · P` if it is one, with the largest deviation seen.
pub fn decode_pauli(m: &Mat, n: usize) -> Option<(PauliString, f64)> {
    for p in all_paulis(n) {
        let ov = pauli_matrix(&p).overlap(m);
        if ov.norm() > 0.5 {
            let k = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)]
                .iter()
                .position(|&ph| (ov - ph).norm() < 1e-6)?;
            let cand = p.with_phase(k as u8);
            let dev = pauli_matrix(&cand).a.iter().zip(&m.a).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
            return Some((cand, dev));
        }
    }
    None
}

/// Random circuit over the whole gate registry with two-qubit gates on arbitrary pairs.
pub fn random_registry_circuit<R: Rng>(n: usize, depth: usize, rng: &mut R) -> Circuit {
    let names = lgst_core::pauli::gates::GATE_NAMES;
    let mut layers = Vec::with_capacity(depth);
    for _ in 0..depth {
        let mut free: Vec<usize> = (0..n).collect();
        let mut ops = Vec::new();
        while !free.is_empty() {
            let q = free.swap_remove(rng.random_range(0..free.len()));
            if rng.random_bool(0.2) {
                continue;
            }
            let name = names[rng.random_range(0..names.len())];
            if lgst_core::pauli::gates::gate_arity(name) == Some(2) {
                if free.is_empty() {
                    continue;
                }
                let r = free.swap_remove(rng.random_range(0..free.len()));
                ops.push(GateOp { gate: name.into(), targets: vec![q, r] });
            } else {
                ops.push(GateOp { gate: name.into(), targets: vec![q] });
            }
        }
        layers.push(ops);
    }
    Circuit::new(n, layers).expect("valid random circuit")
}
