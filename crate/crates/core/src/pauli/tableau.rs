use std::fmt;

use crate::error::{Error, Result};
use crate::pauli::{Pauli, PauliString};

/// A Clifford unitary `U` stored as the signed images `U X_j U†` and `U Z_j U†`.
#[derive(Clone, PartialEq, Eq)]
pub struct CliffordTableau {
    n: usize,
    x_img: Vec<PauliString>,
    z_img: Vec<PauliString>,
}

impl CliffordTableau {
    pub fn identity(n: usize) -> Self {
        Self {
            n,
            x_img: (0..n).map(|j| PauliString::single(n, j, Pauli::X)).collect(),
            z_img: (0..n).map(|j| PauliString::single(n, j, Pauli::Z)).collect(),
        }
    }

    /// Builds a tableau from explicit images, checking Hermiticity and the symplectic
    /// commutation relations.
    pub fn from_images(x_img: Vec<PauliString>, z_img: Vec<PauliString>) -> Result<Self> {
        let n = x_img.len();
        if z_img.len() != n {
            return Err(Error::Dimension { left: n, right: z_img.len() });
        }
        for p in x_img.iter().chain(&z_img) {
            if p.num_qubits() != n {
                return Err(Error::Dimension { left: n, right: p.num_qubits() });
            }
            if !p.is_hermitian() {
                return Err(Error::NonHermitian(p.to_string()));
            }
        }
        let t = Self { n, x_img, z_img };
        if !t.is_symplectic() {
            return Err(Error::Circuit("tableau images violate the commutation relations".into()));
        }
        Ok(t)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn x_image(&self, j: usize) -> &PauliString {
        &self.x_img[j]
    }

    pub fn z_image(&self, j: usize) -> &PauliString {
        &self.z_img[j]
    }

    /// Images of `X_j` and `Z_j` pairwise anticommute for equal `j` and commute otherwise.
    pub fn is_symplectic(&self) -> bool {
        for a in 0..self.n {
            for b in 0..self.n {
                let want = a == b;
                if self.x_img[a].anticommutes_unchecked(&self.z_img[b]) != want {
                    return false;
                }
                if a < b
                    && (self.x_img[a].anticommutes_unchecked(&self.x_img[b])
                        || self.z_img[a].anticommutes_unchecked(&self.z_img[b]))
                {
                    return false;
                }
            }
        }
        true
    }

    /// `U p U†`, phase-exact. Works for any Pauli, Hermitian or not.
    pub(crate) fn conjugate_unchecked(&self, p: &PauliString) -> PauliString {
        let mut out = PauliString::identity(self.n).with_phase(p.phase_exp());
        for (wi, (&xw, &zw)) in p.x_words().iter().zip(p.z_words()).enumerate() {
            let mut bits = xw | zw;
            while bits != 0 {
                let b = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                let j = wi * 64 + b;
                let (xb, zb) = ((xw >> b) & 1 == 1, (zw >> b) & 1 == 1);
                if xb {
                    out.mul_assign_unchecked(&self.x_img[j]);
                }
                if zb {
                    out.mul_assign_unchecked(&self.z_img[j]);
                }
                if xb && zb {
                    // Y = i X Z
                    out = out.times_i_pow(1);
                }
            }
        }
        out
    }

    pub fn conjugate(&self, p: &PauliString) -> Result<PauliString> {
        if p.num_qubits() != self.n {
            return Err(Error::Dimension { left: self.n, right: p.num_qubits() });
        }
        Ok(self.conjugate_unchecked(p))
    }

    /// Tableau of `outer ∘ self`, i.e. `self` is applied first.
    pub fn then(&self, outer: &CliffordTableau) -> Result<CliffordTableau> {
        outer.compose(self)
    }

    /// Tableau of `self · inner` as unitaries: `P ↦ U_self (U_inner P U_inner†) U_self†`.
    pub fn compose(&self, inner: &CliffordTableau) -> Result<CliffordTableau> {
        if inner.n != self.n {
            return Err(Error::Dimension { left: self.n, right: inner.n });
        }
        Ok(CliffordTableau {
            n: self.n,
            x_img: inner.x_img.iter().map(|p| self.conjugate_unchecked(p)).collect(),
            z_img: inner.z_img.iter().map(|p| self.conjugate_unchecked(p)).collect(),
        })
    }

    pub fn inverse(&self) -> CliffordTableau {
        let n = self.n;
        // The preimage of a Pauli A is fixed by symplectic products with the images:
        // ⟨R, Z_k⟩ = ⟨A, img Z_k⟩ picks the x bit of R at k, ⟨R, X_k⟩ = ⟨A, img X_k⟩ the z bit.
        let preimage = |a: &PauliString| -> PauliString {
            let mut r = PauliString::identity(n);
            for k in 0..n {
                let xb = a.anticommutes_unchecked(&self.z_img[k]);
                let zb = a.anticommutes_unchecked(&self.x_img[k]);
                r.set(k, Pauli::from_bits(xb, zb));
            }
            let fwd = self.conjugate_unchecked(&r);
            debug_assert_eq!(fwd.unsigned(), a.unsigned());
            if fwd.phase_exp() == a.phase_exp() {
                r
            } else {
                r.negated()
            }
        };
        CliffordTableau {
            n,
            x_img: (0..n).map(|j| preimage(&PauliString::single(n, j, Pauli::X))).collect(),
            z_img: (0..n).map(|j| preimage(&PauliString::single(n, j, Pauli::Z))).collect(),
        }
    }

    /// Embeds a `k`-qubit tableau acting on `targets` into this tableau's `n` qubits, replacing
    /// the action on those qubits. Meant for assembling a layer from gates on disjoint targets.
    pub fn set_local(&mut self, targets: &[usize], local: &CliffordTableau) -> Result<()> {
        if targets.len() != local.n {
            return Err(Error::Dimension { left: local.n, right: targets.len() });
        }
        let lift = |p: &PauliString| -> PauliString {
            let mut out = PauliString::identity(self.n).with_phase(p.phase_exp());
            for (i, &t) in targets.iter().enumerate() {
                out.set(t, p.get(i));
            }
            out
        };
        for (i, &t) in targets.iter().enumerate() {
            if t >= self.n {
                return Err(Error::Circuit(format!("target {t} out of range for {} qubits", self.n)));
            }
            self.x_img[t] = lift(&local.x_img[i]);
            self.z_img[t] = lift(&local.z_img[i]);
        }
        Ok(())
    }
}

pub fn conjugate(t: &CliffordTableau, p: &PauliString) -> Result<PauliString> {
    t.conjugate(p)
}

impl fmt::Debug for CliffordTableau {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CliffordTableau({} qubits)", self.n)?;
        for j in 0..self.n {
            writeln!(f, "  X{j} -> {}   Z{j} -> {}", self.x_img[j], self.z_img[j])?;
        }
        Ok(())
    }
}
