use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use smallvec::{smallvec, SmallVec};

use crate::error::{Error, Result};

/// Bit storage for one symplectic half; inline up to 128 qubits.
pub type Words = SmallVec<[u64; 2]>;

#[inline]
pub(crate) fn word_count(n: usize) -> usize {
    n.div_ceil(64).max(1)
}

/// Single-qubit Pauli letter. The derived ordering is the canonical one, `I < X < Y < Z`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    pub fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(c: char) -> Option<Self> {
        match c {
            'I' | '_' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }
}

/// An n-qubit Pauli operator `i^phase · σ_0 ⊗ σ_1 ⊗ … ⊗ σ_{n-1}` in bit-packed symplectic form.
///
/// Each `σ_j` is one of the Hermitian letters `I, X, Y, Z` selected by the bit pair
/// `(x_j, z_j)`; in particular `Y` is stored as `(1, 1)` with no extra phase. With that
/// convention the operator is Hermitian exactly when `phase` is even, and `phase ∈ {0, 2}`
/// is the real sign `±1`.
///
/// Qubit 0 is the leftmost character of the string form, e.g. `"+XIZ"` is `X` on qubit 0.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct PauliString {
    n: usize,
    x: Words,
    z: Words,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Self {
        let w = word_count(n);
        Self { n, x: smallvec![0; w], z: smallvec![0; w], phase: 0 }
    }

    /// Builds from raw words. Bits above `n` must be clear.
    pub fn from_words(n: usize, x: Words, z: Words, phase: u8) -> Self {
        debug_assert_eq!(x.len(), word_count(n));
        debug_assert_eq!(z.len(), word_count(n));
        Self { n, x, z, phase: phase & 3 }
    }

    pub fn single(n: usize, qubit: usize, p: Pauli) -> Self {
        let mut out = Self::identity(n);
        out.set(qubit, p);
        out
    }

    /// Unsigned Pauli from `(qubit, letter)` pairs; later entries overwrite earlier ones.
    pub fn from_sparse(n: usize, terms: &[(usize, Pauli)]) -> Self {
        let mut out = Self::identity(n);
        for &(q, p) in terms {
            out.set(q, p);
        }
        out
    }

    /// Product of `Z` on the given qubits.
    pub fn z_type(n: usize, qubits: &[usize]) -> Self {
        let mut out = Self::identity(n);
        for &q in qubits {
            out.set(q, Pauli::Z);
        }
        out
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn x_words(&self) -> &[u64] {
        &self.x
    }

    pub fn z_words(&self) -> &[u64] {
        &self.z
    }

    pub fn x_bit(&self, q: usize) -> bool {
        (self.x[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn z_bit(&self, q: usize) -> bool {
        (self.z[q / 64] >> (q % 64)) & 1 == 1
    }

    pub fn get(&self, q: usize) -> Pauli {
        Pauli::from_bits(self.x_bit(q), self.z_bit(q))
    }

    pub fn set(&mut self, q: usize, p: Pauli) {
        assert!(q < self.n, "qubit {q} out of range for {} qubits", self.n);
        let (xb, zb) = p.bits();
        let mask = 1u64 << (q % 64);
        let w = q / 64;
        if xb {
            self.x[w] |= mask;
        } else {
            self.x[w] &= !mask;
        }
        if zb {
            self.z[w] |= mask;
        } else {
            self.z[w] &= !mask;
        }
    }

    pub fn weight(&self) -> usize {
        self.x.iter().zip(&self.z).map(|(x, z)| (x | z).count_ones() as usize).sum()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.n).filter(|&q| self.x_bit(q) || self.z_bit(q)).collect()
    }

    /// Identity up to phase.
    pub fn is_identity(&self) -> bool {
        self.x.iter().chain(&self.z).all(|&w| w == 0)
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// `true` when the operator is a product of `I` and `Z` only.
    pub fn is_z_type(&self) -> bool {
        self.x.iter().all(|&w| w == 0)
    }

    /// `Some(±1)` for Hermitian operators, `None` otherwise.
    pub fn sign(&self) -> Option<i8> {
        match self.phase {
            0 => Some(1),
            2 => Some(-1),
            _ => None,
        }
    }

    /// Same letters, phase reset to `+1`.
    pub fn unsigned(&self) -> Self {
        Self { phase: 0, ..self.clone() }
    }

    pub fn with_phase(mut self, phase: u8) -> Self {
        self.phase = phase & 3;
        self
    }

    pub fn negated(&self) -> Self {
        Self { phase: (self.phase + 2) & 3, ..self.clone() }
    }

    /// Multiplies by `i^k`.
    pub fn times_i_pow(mut self, k: u8) -> Self {
        self.phase = (self.phase + k) & 3;
        self
    }

    fn check_dims(&self, other: &Self) -> Result<()> {
        if self.n != other.n {
            return Err(Error::Dimension { left: self.n, right: other.n });
        }
        Ok(())
    }

    /// Symplectic inner product mod 2; `false` means the operators commute.
    pub(crate) fn anticommutes_unchecked(&self, other: &Self) -> bool {
        let mut acc = 0u32;
        for i in 0..self.x.len() {
            acc ^= ((self.x[i] & other.z[i]) ^ (self.z[i] & other.x[i])).count_ones();
        }
        acc & 1 == 1
    }

    pub fn commutes(&self, other: &Self) -> Result<bool> {
        self.check_dims(other)?;
        Ok(!self.anticommutes_unchecked(other))
    }

    /// Phase-exact product `self · other`.
    pub(crate) fn mul_unchecked(&self, other: &Self) -> Self {
        // Rewrite each factor as i^(p + |x∧z|) X^x Z^z, multiply the X^x Z^z forms
        // (one sign per Z moved past an X), then convert back.
        let mut phase = u32::from(self.phase) + u32::from(other.phase);
        let mut x: Words = smallvec![0; self.x.len()];
        let mut z: Words = smallvec![0; self.x.len()];
        for i in 0..self.x.len() {
            let (x1, z1, x2, z2) = (self.x[i], self.z[i], other.x[i], other.z[i]);
            let x3 = x1 ^ x2;
            let z3 = z1 ^ z2;
            phase += (x1 & z1).count_ones() + (x2 & z2).count_ones() + 2 * (z1 & x2).count_ones();
            phase += 4 * 64 - (x3 & z3).count_ones();
            x[i] = x3;
            z[i] = z3;
        }
        Self { n: self.n, x, z, phase: (phase & 3) as u8 }
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        self.check_dims(other)?;
        Ok(self.mul_unchecked(other))
    }

    /// In-place `self ← self · other`.
    pub(crate) fn mul_assign_unchecked(&mut self, other: &Self) {
        *self = self.mul_unchecked(other);
    }

    pub fn to_label(&self) -> String {
        (0..self.n).map(|q| self.get(q).letter()).collect()
    }

    pub fn parse_unsigned(s: &str) -> Result<Self> {
        let p: PauliString = s.parse()?;
        if p.phase != 0 {
            return Err(Error::ParsePauli {
                input: s.to_string(),
                reason: "a negative or imaginary sign is not allowed here".into(),
            });
        }
        Ok(p)
    }
}

pub fn pauli_mul(a: &PauliString, b: &PauliString) -> Result<PauliString> {
    a.mul(b)
}

pub fn commutes(a: &PauliString, b: &PauliString) -> Result<bool> {
    a.commutes(b)
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = match self.phase {
            0 => "+",
            1 => "+i",
            2 => "-",
            _ => "-i",
        };
        write!(f, "{sign}{}", self.to_label())
    }
}

impl fmt::Debug for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PauliString({self})")
    }
}

impl FromStr for PauliString {
    type Err = Error;

    /// Accepts an optional sign prefix (`+`, `-`, `i`, `+i`, `-i`) followed by one letter
    /// from `IXYZ` per qubit.
    fn from_str(s: &str) -> Result<Self> {
        let err = |reason: &str| Error::ParsePauli { input: s.to_string(), reason: reason.to_string() };
        let t = s.trim();
        let (phase, body) = if let Some(rest) = t.strip_prefix("+i").or_else(|| t.strip_prefix("+j")) {
            (1, rest)
        } else if let Some(rest) = t.strip_prefix("-i").or_else(|| t.strip_prefix("-j")) {
            (3, rest)
        } else if let Some(rest) = t.strip_prefix('+') {
            (0, rest)
        } else if let Some(rest) = t.strip_prefix('-') {
            (2, rest)
        } else if let Some(rest) = t.strip_prefix('i') {
            (1, rest)
        } else {
            (0, t)
        };
        if body.is_empty() {
            return Err(err("no qubits"));
        }
        let n = body.chars().count();
        let mut out = PauliString::identity(n);
        for (q, c) in body.chars().enumerate() {
            let p = Pauli::from_letter(c).ok_or_else(|| err("letters must be one of I, X, Y, Z"))?;
            out.set(q, p);
        }
        out.phase = phase;
        Ok(out)
    }
}

impl PartialOrd for PauliString {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for PauliString {
    /// Lexicographic over the letter string (`I < X < Y < Z`, qubit 0 first), then phase.
    fn cmp(&self, other: &Self) -> Ordering {
        self.n
            .cmp(&other.n)
            .then_with(|| {
                (0..self.n)
                    .map(|q| self.get(q).cmp(&other.get(q)))
                    .find(|o| o.is_ne())
                    .unwrap_or(Ordering::Equal)
            })
            .then_with(|| self.phase.cmp(&other.phase))
    }
}

impl serde::Serialize for PauliString {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_string())
    }
}

impl<'de> serde::Deserialize<'de> for PauliString {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn x_times_z_is_minus_i_y() {
        let prod = pauli_mul(&p("X"), &p("Z")).unwrap();
        assert_eq!(prod.get(0), Pauli::Y);
        assert_eq!(prod.phase_exp(), 3);
        assert_eq!(prod.to_string(), "-iY");
    }

    #[test]
    fn single_qubit_table() {
        // σ_a σ_b = i ε_abc σ_c
        assert_eq!(pauli_mul(&p("X"), &p("Y")).unwrap(), p("iZ"));
        assert_eq!(pauli_mul(&p("Y"), &p("Z")).unwrap(), p("iX"));
        assert_eq!(pauli_mul(&p("Z"), &p("X")).unwrap(), p("iY"));
        assert_eq!(pauli_mul(&p("Y"), &p("X")).unwrap(), p("-iZ"));
        assert_eq!(pauli_mul(&p("Z"), &p("Y")).unwrap(), p("-iX"));
    }

    #[test]
    fn hermitian_squares_to_identity() {
        for s in ["X", "Y", "Z", "XYZ", "-YYI", "ZZZZ"] {
            let a = p(s);
            let sq = pauli_mul(&a, &a).unwrap();
            assert!(sq.is_identity());
            assert_eq!(sq.phase_exp(), 0, "{s}");
        }
    }

    #[test]
    fn commutation() {
        assert!(!commutes(&p("X"), &p("Z")).unwrap());
        assert!(commutes(&p("XX"), &p("ZZ")).unwrap());
        assert!(commutes(&p("XI"), &p("IZ")).unwrap());
    }

    #[test]
    fn dimension_mismatch() {
        assert!(matches!(pauli_mul(&p("X"), &p("XX")), Err(Error::Dimension { .. })));
        assert!(commutes(&p("X"), &p("XX")).is_err());
    }

    #[test]
    fn weight_and_parse() {
        assert_eq!(p("IXYZ").weight(), 3);
        assert_eq!(p("IIII").weight(), 0);
        assert!(p("III").is_identity());
        assert_eq!(p("-XZ").sign(), Some(-1));
        assert!("XQ".parse::<PauliString>().is_err());
        assert!("".parse::<PauliString>().is_err());
        assert!(PauliString::parse_unsigned("-X").is_err());
    }

    #[test]
    fn canonical_order() {
        let mut v = [p("ZI"), p("IZ"), p("XY"), p("YI"), p("II")];
        v.sort();
        let labels: Vec<_> = v.iter().map(|q| q.to_label()).collect();
        assert_eq!(labels, ["II", "IZ", "XY", "YI", "ZI"]);
    }

    #[test]
    fn wide_strings_span_words() {
        let mut a = PauliString::identity(130);
        a.set(0, Pauli::X);
        a.set(129, Pauli::Z);
        let mut b = PauliString::identity(130);
        b.set(129, Pauli::X);
        assert!(!a.commutes(&b).unwrap());
        let prod = a.mul(&b).unwrap();
        assert_eq!(prod.get(129), Pauli::Y);
        assert_eq!(prod.get(0), Pauli::X);
        assert_eq!(prod.phase_exp(), 1);
        assert_eq!(prod.to_string().len(), 132);
    }
}
