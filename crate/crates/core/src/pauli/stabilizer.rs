use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{CliffordTableau, Pauli, PauliString};

/// Result of a stabilizer-group membership query.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum StabilizerSign {
    Plus,
    Minus,
    NotInGroup,
}

impl StabilizerSign {
    /// `⟨ψ|p|ψ⟩` for a stabilizer state: ±1 for members, 0 otherwise.
    pub fn expectation(self) -> f64 {
        match self {
            StabilizerSign::Plus => 1.0,
            StabilizerSign::Minus => -1.0,
            StabilizerSign::NotInGroup => 0.0,
        }
    }
}

/// Pure stabilizer state given by `n` commuting, independent, signed generators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StabilizerState {
    n: usize,
    gens: Vec<PauliString>,
}

impl StabilizerState {
    /// `|0…0⟩`, stabilized by `+Z_j` for every qubit.
    pub fn zero(n: usize) -> Self {
        Self { n, gens: (0..n).map(|j| PauliString::single(n, j, Pauli::Z)).collect() }
    }

    pub fn from_generators(gens: Vec<PauliString>) -> Result<Self> {
        let n = gens.len();
        for g in &gens {
            if g.num_qubits() != n {
                return Err(Error::Dimension { left: n, right: g.num_qubits() });
            }
            if g.sign().is_none() {
                return Err(Error::NonHermitian(g.to_string()));
            }
        }
        for (i, a) in gens.iter().enumerate() {
            if gens[i + 1..].iter().any(|b| a.anticommutes_unchecked(b)) {
                return Err(Error::Circuit("stabilizer generators must commute".into()));
            }
        }
        let state = Self { n, gens };
        if state.reduced().len() != n {
            return Err(Error::Circuit("stabilizer generators are not independent".into()));
        }
        Ok(state)
    }

    /// `U|0…0⟩` for the Clifford `U`.
    pub fn from_clifford(u: &CliffordTableau) -> Self {
        Self::zero(u.num_qubits()).apply_layer_unchecked(u)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.gens
    }

    fn apply_layer_unchecked(&self, t: &CliffordTableau) -> Self {
        Self { n: self.n, gens: self.gens.iter().map(|g| t.conjugate_unchecked(g)).collect() }
    }

    pub fn apply_layer(&self, t: &CliffordTableau) -> Result<Self> {
        if t.num_qubits() != self.n {
            return Err(Error::Dimension { left: self.n, right: t.num_qubits() });
        }
        Ok(self.apply_layer_unchecked(t))
    }

    /// Generators brought to reduced row-echelon form over the columns `x_0..x_{n-1}, z_0..z_{n-1}`,
    /// paired with their pivot columns. Row products keep exact signs.
    fn reduced(&self) -> Vec<(usize, PauliString)> {
        let n = self.n;
        let mut rows = self.gens.clone();
        let bit = |p: &PauliString, c: usize| if c < n { p.x_bit(c) } else { p.z_bit(c - n) };
        let mut pivots = Vec::with_capacity(n);
        let mut r = 0;
        for c in 0..2 * n {
            if r == rows.len() {
                break;
            }
            let Some(k) = (r..rows.len()).find(|&k| bit(&rows[k], c)) else { continue };
            rows.swap(r, k);
            let piv = rows[r].clone();
            for (i, row) in rows.iter_mut().enumerate() {
                if i != r && bit(row, c) {
                    row.mul_assign_unchecked(&piv);
                }
            }
            pivots.push(c);
            r += 1;
        }
        pivots.into_iter().zip(rows).collect()
    }

    /// Whether `+p`, `-p`, or neither lies in the stabilizer group.
    pub fn stabilizer_sign(&self, p: &PauliString) -> Result<StabilizerSign> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { left: self.n, right: p.num_qubits() });
        }
        if !p.is_hermitian() {
            return Err(Error::NonHermitian(p.to_string()));
        }
        if self.gens.iter().any(|g| g.anticommutes_unchecked(p)) {
            return Ok(StabilizerSign::NotInGroup);
        }
        let n = self.n;
        let mut acc = PauliString::identity(n);
        for (c, row) in self.reduced() {
            let set = if c < n { p.x_bit(c) } else { p.z_bit(c - n) };
            if set {
                acc.mul_assign_unchecked(&row);
            }
        }
        if acc.unsigned() != p.unsigned() {
            return Ok(StabilizerSign::NotInGroup);
        }
        Ok(if acc.phase_exp() == p.phase_exp() { StabilizerSign::Plus } else { StabilizerSign::Minus })
    }

    pub fn expectation(&self, p: &PauliString) -> Result<f64> {
        Ok(self.stabilizer_sign(p)?.expectation())
    }

    /// Bit `i` is set when `p` anticommutes with generator `i`. The expectation of a Hermitian
    /// `p` is nonzero exactly when the syndrome is empty.
    pub fn syndrome(&self, p: &PauliString) -> Vec<bool> {
        self.gens.iter().map(|g| g.anticommutes_unchecked(p)).collect()
    }
}

pub fn stabilizer_sign(state: &StabilizerState, p: &PauliString) -> Result<StabilizerSign> {
    state.stabilizer_sign(p)
}

pub fn apply_layer(state: &StabilizerState, t: &CliffordTableau) -> Result<StabilizerState> {
    state.apply_layer(t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pauli::gates::gate_tableau;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn zero_state_signs() {
        let s = StabilizerState::zero(1);
        assert_eq!(s.stabilizer_sign(&p("Z")).unwrap(), StabilizerSign::Plus);
        assert_eq!(s.stabilizer_sign(&p("-Z")).unwrap(), StabilizerSign::Minus);
        assert_eq!(s.stabilizer_sign(&p("X")).unwrap(), StabilizerSign::NotInGroup);
        assert!(matches!(s.stabilizer_sign(&p("iZ")), Err(Error::NonHermitian(_))));
    }

    #[test]
    fn hadamard_then_cz_gives_graph_state() {
        let mut h0 = CliffordTableau::identity(2);
        h0.set_local(&[0], &gate_tableau("Gh").unwrap()).unwrap();
        let mut h1 = CliffordTableau::identity(2);
        h1.set_local(&[1], &gate_tableau("Gh").unwrap()).unwrap();
        let cz = gate_tableau("Gcz").unwrap();
        let s = StabilizerState::zero(2).apply_layer(&h0).unwrap().apply_layer(&h1).unwrap().apply_layer(&cz).unwrap();
        assert_eq!(s.stabilizer_sign(&p("XZ")).unwrap(), StabilizerSign::Plus);
        assert_eq!(s.stabilizer_sign(&p("ZX")).unwrap(), StabilizerSign::Plus);
        assert_eq!(s.stabilizer_sign(&p("YY")).unwrap(), StabilizerSign::Plus);
        assert_eq!(s.stabilizer_sign(&p("XX")).unwrap(), StabilizerSign::NotInGroup);
    }

    #[test]
    fn identity_layer_is_noop() {
        let s = StabilizerState::zero(3);
        assert_eq!(s.apply_layer(&CliffordTableau::identity(3)).unwrap(), s);
    }

    #[test]
    fn generator_validation() {
        assert!(StabilizerState::from_generators(vec![p("XI"), p("ZI")]).is_err());
        assert!(StabilizerState::from_generators(vec![p("ZZ"), p("-ZZ")]).is_err());
        assert!(StabilizerState::from_generators(vec![p("XX"), p("-ZZ")]).is_ok());
    }

    #[test]
    fn products_of_generators_are_found() {
        let s = StabilizerState::from_generators(vec![p("XXI"), p("-ZZI"), p("IIZ")]).unwrap();
        // (XXI)(-ZZI) = -(XZ)(XZ) = -(-iY)(-iY) = YY
        assert_eq!(s.stabilizer_sign(&p("YYI")).unwrap(), StabilizerSign::Plus);
        assert_eq!(s.stabilizer_sign(&p("ZZZ")).unwrap(), StabilizerSign::Minus);
        assert!(s.syndrome(&p("ZZZ")).iter().all(|b| !b));
        assert!(s.syndrome(&p("XII")).iter().any(|&b| b));
    }
}
