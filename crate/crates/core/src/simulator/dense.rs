//! Exact simulation in the Pauli-transfer picture.
//!
//! The state is the real vector `r_A = Tr[A ρ]` over all `4ⁿ` Pauli strings `A`. Index bits
//! `2q` and `2q + 1` hold the x and z bit of qubit `q`, so the letter product is a XOR of
//! indices. Ideal gates act as signed permutations that are read off the gates' dense
//! unitaries; each layer's error generator is exponentiated exactly. This path shares no
//! Pauli algebra with the symplectic core, which keeps it usable as an oracle.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use nalgebra::{Complex, DMatrix, DVector};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::model::{layer_lindbladian, ErrorModel, GeneratorKind, RateVector};
use crate::pauli::{gates, PauliString};

type C = Complex<f64>;

/// Qubit limit unless the caller raises it.
pub const DEFAULT_MAX_QUBITS: usize = 5;
/// Relative truncation tolerance of the exponential.
pub const EXPM_TOLERANCE: f64 = 1e-13;
/// Up to this many qubits the layer exponential is a dense Padé `exp`.
pub const FULL_EXPM_MAX_QUBITS: usize = 3;

// Single-qubit letters in (x, z) bit order: I, X, Z, Y.
const CODE_I: usize = 0;
const CODE_X: usize = 1;
const CODE_Z: usize = 2;
const CODE_Y: usize = 3;

/// `σ_a σ_b = i^p σ_c` for two-bit letter codes, written out from the Pauli algebra.
const LETTER_PRODUCT_PHASE: [[u8; 4]; 4] = {
    let mut t = [[0u8; 4]; 4];
    // X Z = -i Y, Z X = i Y, X Y = i Z, Y X = -i Z, Z Y = -i X, Y Z = i X
    t[CODE_X][CODE_Z] = 3;
    t[CODE_Z][CODE_X] = 1;
    t[CODE_X][CODE_Y] = 1;
    t[CODE_Y][CODE_X] = 3;
    t[CODE_Z][CODE_Y] = 3;
    t[CODE_Y][CODE_Z] = 1;
    t
};

fn letter_matrix(code: usize) -> DMatrix<C> {
    let o = C::new(0.0, 0.0);
    let l = C::new(1.0, 0.0);
    let i = C::new(0.0, 1.0);
    match code {
        CODE_I => DMatrix::from_row_slice(2, 2, &[l, o, o, l]),
        CODE_X => DMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        CODE_Z => DMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
        _ => DMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
    }
}

/// Dense `k`-qubit Pauli; local digit 0 is the most significant tensor factor.
fn local_pauli(k: usize, idx: usize) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, C::new(1.0, 0.0));
    for d in 0..k {
        m = m.kronecker(&letter_matrix((idx >> (2 * d)) & 3));
    }
    m
}

/// Heisenberg action of a gate on local Paulis: `U† σ_a U = sign[a] · σ_{perm[a]}`.
#[derive(Debug, Clone)]
struct LocalAction {
    perm: Vec<usize>,
    sign: Vec<f64>,
}

/// Actions are derived once per gate name and cached.
fn local_action(name: &str) -> Result<Arc<LocalAction>> {
    static CACHE: OnceLock<Mutex<HashMap<String, Arc<LocalAction>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    if let Some(a) = cache.lock().expect("cache lock").get(name) {
        return Ok(a.clone());
    }
    let a = Arc::new(derive_local_action(name)?);
    cache.lock().expect("cache lock").insert(name.to_string(), a.clone());
    Ok(a)
}

fn derive_local_action(name: &str) -> Result<LocalAction> {
    let u = gates::gate_unitary(name).ok_or_else(|| Error::Simulator(format!("no unitary for {name}")))?;
    let k = gates::gate_arity(name).expect("registry gate");
    let dim = 1usize << k;
    let paulis: Vec<DMatrix<C>> = (0..1 << (2 * k)).map(|a| local_pauli(k, a)).collect();
    let mut perm = Vec::with_capacity(paulis.len());
    let mut sign = Vec::with_capacity(paulis.len());
    for pa in &paulis {
        let img = u.adjoint() * pa * &u;
        // Coefficients Tr[σ_b img]/2^k are real for Hermitian img; a Clifford hits exactly one b.
        let coeffs: Vec<f64> = paulis.iter().map(|pb| (pb * &img).trace().re / dim as f64).collect();
        let (b, &c) = coeffs.iter().enumerate().max_by(|x, y| x.1.abs().total_cmp(&y.1.abs())).expect("nonempty");
        let rest: f64 = coeffs.iter().map(|v| v.abs()).sum::<f64>() - c.abs();
        if (c.abs() - 1.0).abs() > 1e-9 || rest > 1e-9 {
            return Err(Error::Simulator(format!("{name} is not Clifford")));
        }
        perm.push(b);
        sign.push(c.signum());
    }
    Ok(LocalAction { perm, sign })
}

/// Converts a symplectic Pauli into this module's index (letters only, sign dropped).
pub fn pauli_index(p: &PauliString) -> usize {
    (0..p.num_qubits()).fold(0, |acc, q| {
        let code = usize::from(p.x_bit(q)) | (usize::from(p.z_bit(q)) << 1);
        acc | (code << (2 * q))
    })
}

fn anticommute_and_phase(n: usize, a: usize, p: usize) -> (bool, u8) {
    let mut anti = false;
    let mut phase = 0u8;
    for q in 0..n {
        let (ca, cp) = ((a >> (2 * q)) & 3, (p >> (2 * q)) & 3);
        if ca != 0 && cp != 0 && ca != cp {
            anti = !anti;
        }
        phase = (phase + LETTER_PRODUCT_PHASE[ca][cp]) & 3;
    }
    (anti, phase)
}

/// `(Lr)_A` for one layer: each `H_P` term reads `r_{A⊕P}` scaled by `coef[A]`, and the `S`
/// terms give a diagonal.
struct LayerGenerator {
    h_terms: Vec<(usize, Vec<f64>)>,
    diag: Vec<f64>,
    norm1: f64,
}

impl LayerGenerator {
    fn new(n: usize, terms: &[(usize, GeneratorKind, f64)]) -> Self {
        let dim = 1usize << (2 * n);
        let mut h_terms = Vec::new();
        let mut diag = vec![0.0; dim];
        for &(p, kind, rate) in terms {
            if rate == 0.0 {
                continue;
            }
            match kind {
                GeneratorKind::H => {
                    // Tr[A H_P(ρ)] = -i Tr[[A,P] ρ]; for anticommuting A, P with AP = i^m σ this
                    // is +2 r_σ when m = 1 and -2 r_σ when m = 3.
                    let coef: Vec<f64> = (0..dim)
                        .map(|a| match anticommute_and_phase(n, a, p) {
                            (true, 1) => 2.0 * rate,
                            (true, _) => -2.0 * rate,
                            (false, _) => 0.0,
                        })
                        .collect();
                    h_terms.push((p, coef));
                }
                _ => {
                    for (a, d) in diag.iter_mut().enumerate() {
                        if anticommute_and_phase(n, a, p).0 {
                            *d -= 2.0 * rate;
                        }
                    }
                }
            }
        }
        // Column sums bound the induced 1-norm.
        let mut col = vec![0.0; dim];
        for (p, coef) in &h_terms {
            for (a, c) in coef.iter().enumerate() {
                col[a ^ p] += c.abs();
            }
        }
        let norm1 = col.iter().zip(&diag).map(|(c, d)| c + d.abs()).fold(0.0, f64::max);
        Self { h_terms, diag, norm1 }
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for ((o, d), x) in out.iter_mut().zip(&self.diag).zip(v) {
            *o = d * x;
        }
        for (p, coef) in &self.h_terms {
            for (a, (o, c)) in out.iter_mut().zip(coef).enumerate() {
                *o += c * v[a ^ p];
            }
        }
    }

    fn to_dense(&self) -> DMatrix<f64> {
        let dim = self.diag.len();
        let mut m = DMatrix::from_diagonal(&DVector::from_column_slice(&self.diag));
        for (p, coef) in &self.h_terms {
            for a in 0..dim {
                m[(a, a ^ p)] += coef[a];
            }
        }
        m
    }

    /// `exp(L) v` by a scaled Taylor series, each step with norm at most 1.
    fn expmv(&self, v: &mut Vec<f64>) {
        if self.norm1 == 0.0 {
            return;
        }
        let steps = self.norm1.ceil().max(1.0) as usize;
        let scale = 1.0 / steps as f64;
        let dim = v.len();
        let mut term = vec![0.0; dim];
        let mut next = vec![0.0; dim];
        for _ in 0..steps {
            term.copy_from_slice(v);
            let base = v.iter().map(|x| x.abs()).fold(0.0, f64::max).max(f64::MIN_POSITIVE);
            for k in 1..=60 {
                self.apply(&term, &mut next);
                let f = scale / k as f64;
                let mut tmax: f64 = 0.0;
                for (t, nx) in term.iter_mut().zip(&next) {
                    *t = nx * f;
                    tmax = tmax.max(t.abs());
                }
                for (x, t) in v.iter_mut().zip(&term) {
                    *x += t;
                }
                if tmax <= EXPM_TOLERANCE * 1e-3 * base {
                    break;
                }
            }
        }
    }
}

/// Dense result for one circuit: `r_Q` for every requested observable plus the Z-basis
/// outcome distribution (index bit `q` is the outcome of qubit `q`).
#[derive(Debug, Clone, PartialEq)]
pub struct DenseOutcome {
    pub expectations: Vec<f64>,
    pub z_distribution: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct DenseOptions {
    pub max_qubits: usize,
    /// Use the dense Padé exponential at or below this many qubits.
    pub full_expm_max_qubits: usize,
}

impl Default for DenseOptions {
    fn default() -> Self {
        Self { max_qubits: DEFAULT_MAX_QUBITS, full_expm_max_qubits: FULL_EXPM_MAX_QUBITS }
    }
}

pub fn simulate_dense(
    circuit: &Circuit,
    model: &ErrorModel,
    rates: &RateVector,
    observables: &[PauliString],
    opts: DenseOptions,
) -> Result<DenseOutcome> {
    let n = circuit.num_qubits();
    if n > opts.max_qubits {
        return Err(Error::Simulator(format!("dense backend limited to {} qubits, circuit has {n}", opts.max_qubits)));
    }
    if n != model.num_qubits() {
        return Err(Error::Dimension { left: model.num_qubits(), right: n });
    }
    let dim = 1usize << (2 * n);
    // |0…0⟩: r_A = 1 on the 2ⁿ strings made of I and Z.
    let mut r: Vec<f64> =
        (0..dim).map(|a| if (0..n).all(|q| (a >> (2 * q)) & 1 == 0) { 1.0 } else { 0.0 }).collect();
    let full = n <= opts.full_expm_max_qubits;

    let apply_error = |r: &mut Vec<f64>, l: usize| -> Result<()> {
        let lind = layer_lindbladian(model, rates, &circuit.error_layer(l))?;
        let terms: Vec<(usize, GeneratorKind, f64)> =
            lind.iter().map(|(g, rate)| (pauli_index(&g.label), g.kind, *rate)).collect();
        let gen = LayerGenerator::new(n, &terms);
        if gen.norm1 == 0.0 {
            return Ok(());
        }
        if full {
            let e = gen.to_dense().exp();
            let out = e * DVector::from_column_slice(r);
            r.copy_from_slice(out.as_slice());
        } else {
            gen.expmv(r);
        }
        Ok(())
    };

    apply_error(&mut r, 0)?;
    for (li, layer) in circuit.layers().iter().enumerate() {
        // r'_A = Tr[U† A U ρ], gate by gate.
        for op in layer {
            let act = local_action(&op.gate)?;
            let mut next = vec![0.0; dim];
            for (a, nx) in next.iter_mut().enumerate() {
                let mut local = 0;
                for (d, &t) in op.targets.iter().enumerate() {
                    local |= ((a >> (2 * t)) & 3) << (2 * d);
                }
                let img = act.perm[local];
                let mut b = a;
                for (d, &t) in op.targets.iter().enumerate() {
                    b = (b & !(3 << (2 * t))) | (((img >> (2 * d)) & 3) << (2 * t));
                }
                *nx = act.sign[local] * r[b];
            }
            r = next;
        }
        apply_error(&mut r, li + 1)?;
    }
    apply_error(&mut r, circuit.depth() + 1)?;

    let expectations = observables
        .iter()
        .map(|q| {
            if q.num_qubits() != n {
                return Err(Error::Dimension { left: n, right: q.num_qubits() });
            }
            let s = match q.sign() {
                Some(s) => f64::from(s),
                None => return Err(Error::NonHermitian(q.to_string())),
            };
            Ok(s * r[pauli_index(q)])
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(DenseOutcome { expectations, z_distribution: z_distribution(n, &r) })
}

/// `P(b) = 2⁻ⁿ Σ_{S} (-1)^{|b ∧ S|} r_{Z_S}` by a fast Walsh-Hadamard transform.
fn z_distribution(n: usize, r: &[f64]) -> Vec<f64> {
    let size = 1usize << n;
    let mut f: Vec<f64> = (0..size)
        .map(|s| {
            let idx = (0..n).filter(|q| s >> q & 1 == 1).fold(0, |acc, q| acc | (CODE_Z << (2 * q)));
            r[idx]
        })
        .collect();
    let mut h = 1;
    while h < size {
        for i in (0..size).step_by(2 * h) {
            for j in i..i + h {
                let (a, b) = (f[j], f[j + h]);
                f[j] = a + b;
                f[j + h] = a - b;
            }
        }
        h *= 2;
    }
    f.iter().map(|v| (v / size as f64).max(0.0)).collect()
}
