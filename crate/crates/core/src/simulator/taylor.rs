//! Order-`k` expansion of the propagated product of layer exponentials.
//!
//! With every layer generator moved to the end of the circuit, the noisy expectation is
//! `Tr[Q e^{L'_{d+1}} ⋯ e^{L'_0} (UρU†)]`. In the Heisenberg picture the adjoint generators act
//! on `Q` from the meas layer down to prep; expanding each exponential and keeping every product
//! of total degree `≤ k` in the rates gives a finite sum of Pauli terms. All Paulis are pulled
//! back by `U†(·)U`, so a term contributes only when it has no X part, and then its sign.
//!
//! The adjoint actions on a Pauli `A` are `H_P†(A) = -2i·AP` and `S_P†(A) = -2A` when `A` and
//! `P` anticommute, and zero otherwise.

use std::collections::{BTreeMap, HashMap};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::model::{ErrorModel, GeneratorKind, RateVector};
use crate::pauli::PauliString;
use crate::propagation::propagate_all;

/// Packed Pauli for up to 64 qubits: `i^phase · letters(x, z)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
struct Packed {
    x: u64,
    z: u64,
    phase: u8,
}

impl Packed {
    fn from_pauli(p: &PauliString) -> Self {
        Self { x: p.x_words()[0], z: p.z_words()[0], phase: p.phase_exp() }
    }

    #[inline]
    fn anticommutes(self, o: Self) -> bool {
        ((self.x & o.z) ^ (self.z & o.x)).count_ones() & 1 == 1
    }

    #[inline]
    fn mul(self, o: Self) -> Self {
        let x = self.x ^ o.x;
        let z = self.z ^ o.z;
        let ph = u32::from(self.phase)
            + u32::from(o.phase)
            + (self.x & self.z).count_ones()
            + (o.x & o.z).count_ones()
            + 2 * (self.z & o.x).count_ones()
            + 4 * 64
            - (x & z).count_ones();
        Self { x, z, phase: (ph & 3) as u8 }
    }

    /// `i · self · o`.
    #[inline]
    fn h_image(self, o: Self) -> Self {
        let mut p = self.mul(o);
        p.phase = (p.phase + 1) & 3;
        p
    }

    /// `⟨0|·|0⟩` of a Hermitian term.
    #[inline]
    fn vacuum(self) -> f64 {
        if self.x != 0 {
            0.0
        } else if self.phase == 0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TaylorStrategy {
    /// `PauliMap` up to [`PAULI_MAP_MAX_QUBITS`] qubits, `Enumerate` above.
    #[default]
    Auto,
    /// Layer-by-layer sparse Heisenberg evolution; memory grows with the number of distinct
    /// Paulis, which is bounded by `4ⁿ`.
    PauliMap,
    /// Depth-first enumeration of generator sequences; memory is `O(k)`.
    Enumerate,
}

pub const PAULI_MAP_MAX_QUBITS: usize = 6;
/// Limit of the packed representation.
pub const TAYLOR_MAX_QUBITS: usize = 64;

#[derive(Debug, Clone, Copy)]
struct Gen {
    p: Packed,
    layer: usize,
    /// Rate times the action's scalar: `-2γh` for `H`, `-2s` for `S`.
    coef: f64,
    is_h: bool,
}

/// Per-circuit data shared by every observable: the pulled-back generators sorted by layer,
/// meas first.
pub struct TaylorCircuit {
    n: usize,
    k: usize,
    u_inv: crate::pauli::CliffordTableau,
    gens: Vec<Gen>,
    /// First generator index of each error layer (layers are stored in descending order).
    block_start: Vec<usize>,
    /// H generators keyed by X part, index-sorted.
    h_by_x: HashMap<u64, Vec<usize>>,
    s_idx: Vec<usize>,
}

impl TaylorCircuit {
    pub fn new(circuit: &Circuit, model: &ErrorModel, rates: &RateVector, k: usize) -> Result<Self> {
        let n = circuit.num_qubits();
        if k == 0 {
            return Err(Error::Simulator("Taylor order must be at least 1".into()));
        }
        if n > TAYLOR_MAX_QUBITS {
            return Err(Error::Simulator(format!("Taylor backend limited to {TAYLOR_MAX_QUBITS} qubits, circuit has {n}")));
        }
        if rates.len() != model.kappa() {
            return Err(Error::Dimension { left: model.kappa(), right: rates.len() });
        }
        let prop = propagate_all(circuit, model)?;
        let u_inv = circuit.tableau().inverse();
        let mut gens: Vec<Gen> = prop
            .iter()
            .filter_map(|g| {
                let rate = rates.values()[g.source_param];
                if rate == 0.0 {
                    return None;
                }
                let p = Packed::from_pauli(&u_inv.conjugate_unchecked(&g.label_out));
                let is_h = g.kind == GeneratorKind::H;
                let coef = if is_h { -2.0 * rate * f64::from(g.sign) } else { -2.0 * rate };
                Some(Gen { p, layer: g.layer, coef, is_h })
            })
            .collect();
        // Stable, so ties keep parameter order.
        gens.sort_by(|a, b| b.layer.cmp(&a.layer));
        let layers = circuit.num_error_layers();
        let mut block_start = vec![gens.len(); layers];
        for (i, g) in gens.iter().enumerate().rev() {
            block_start[g.layer] = i;
        }
        let mut h_by_x: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut s_idx = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            if g.is_h {
                h_by_x.entry(g.p.x).or_default().push(i);
            } else {
                s_idx.push(i);
            }
        }
        Ok(Self { n, k, u_inv, gens, block_start, h_by_x, s_idx })
    }

    pub fn num_generators(&self) -> usize {
        self.gens.len()
    }

    fn pull_back(&self, q: &PauliString) -> Result<Packed> {
        if q.num_qubits() != self.n {
            return Err(Error::Dimension { left: self.n, right: q.num_qubits() });
        }
        if !q.is_hermitian() {
            return Err(Error::NonHermitian(q.to_string()));
        }
        Ok(Packed::from_pauli(&self.u_inv.conjugate_unchecked(q)))
    }

    /// `⟨Q⟩` split by order: entry `m` is the degree-`m` contribution, entry 0 the ideal value.
    pub fn orders(&self, q: &PauliString, strategy: TaylorStrategy) -> Result<Vec<f64>> {
        let a = self.pull_back(q)?;
        let use_map = match strategy {
            TaylorStrategy::Auto => self.n <= PAULI_MAP_MAX_QUBITS,
            TaylorStrategy::PauliMap => true,
            TaylorStrategy::Enumerate => false,
        };
        Ok(if use_map { self.orders_map(a) } else { self.orders_enumerate(a) })
    }

    pub fn expectation(&self, q: &PauliString, strategy: TaylorStrategy) -> Result<f64> {
        Ok(self.orders(q, strategy)?.iter().sum())
    }

    fn orders_map(&self, a: Packed) -> Vec<f64> {
        let k = self.k;
        // Hermitian terms keyed by letters; signs live in the coefficients.
        let mut map: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
        let mut init = vec![0.0; k + 1];
        init[0] = if a.phase == 0 { 1.0 } else { -1.0 };
        map.insert((a.x, a.z), init);
        let mut start = 0;
        while start < self.gens.len() {
            let layer = self.gens[start].layer;
            let end = start + self.gens[start..].iter().take_while(|g| g.layer == layer).count();
            let block = &self.gens[start..end];
            // e^{L†} = Σ_m (L†)^m / m!, each power raising the degree by one.
            let mut term = map.clone();
            for m in 1..=k {
                let mut next: BTreeMap<(u64, u64), Vec<f64>> = BTreeMap::new();
                for (&(x, z), c) in &term {
                    if c[..k].iter().all(|&v| v == 0.0) {
                        continue;
                    }
                    let p = Packed { x, z, phase: 0 };
                    for g in block {
                        if !p.anticommutes(g.p) {
                            continue;
                        }
                        let (key, sign) = if g.is_h {
                            let img = p.h_image(g.p);
                            ((img.x, img.z), if img.phase == 0 { 1.0 } else { -1.0 })
                        } else {
                            ((x, z), 1.0)
                        };
                        let f = sign * g.coef / m as f64;
                        let e = next.entry(key).or_insert_with(|| vec![0.0; k + 1]);
                        for d in 0..k {
                            e[d + 1] += f * c[d];
                        }
                    }
                }
                for (key, c) in &next {
                    let e = map.entry(*key).or_insert_with(|| vec![0.0; k + 1]);
                    for d in 0..=k {
                        e[d] += c[d];
                    }
                }
                term = next;
                if term.is_empty() {
                    break;
                }
            }
            start = end;
        }
        let mut out = vec![0.0; k + 1];
        for (&(x, _), c) in &map {
            if x == 0 {
                for d in 0..=k {
                    out[d] += c[d];
                }
            }
        }
        out
    }

    fn orders_enumerate(&self, a: Packed) -> Vec<f64> {
        let mut out = vec![0.0; self.k + 1];
        out[0] = a.vacuum();
        self.dfs(a, 1.0, 0, 0, usize::MAX, 0, &mut out);
        out
    }

    /// Extends a sequence of `depth` generators whose current operator is `a` with weight `w`.
    /// Later generators come from the current layer (any order) or lower layers.
    #[allow(clippy::too_many_arguments)]
    fn dfs(&self, a: Packed, w: f64, depth: usize, start: usize, layer: usize, run: usize, out: &mut [f64]) {
        let step = |g: &Gen| -> (f64, usize) {
            if g.layer == layer {
                (w * g.coef / (run + 1) as f64, run + 1)
            } else {
                (w * g.coef, 1)
            }
        };
        if depth + 1 == self.k {
            // Last factor: only terms that end with no X part matter.
            if let Some(bucket) = self.h_by_x.get(&a.x) {
                let from = bucket.partition_point(|&i| i < start);
                for &i in &bucket[from..] {
                    let g = &self.gens[i];
                    if a.anticommutes(g.p) {
                        out[self.k] += step(g).0 * a.h_image(g.p).vacuum();
                    }
                }
            }
            if a.x == 0 {
                let from = self.s_idx.partition_point(|&i| i < start);
                for &i in &self.s_idx[from..] {
                    let g = &self.gens[i];
                    if a.anticommutes(g.p) {
                        out[self.k] += step(g).0 * a.vacuum();
                    }
                }
            }
            return;
        }
        for i in start..self.gens.len() {
            let g = &self.gens[i];
            if !a.anticommutes(g.p) {
                continue;
            }
            let (w2, run2) = step(g);
            let b = if g.is_h { a.h_image(g.p) } else { a };
            out[depth + 1] += w2 * b.vacuum();
            self.dfs(b, w2, depth + 1, self.block_start[g.layer], g.layer, run2, out);
        }
    }
}

/// `⟨Q⟩` for each observable, truncated at total degree `k` in the rates.
pub fn simulate_taylor(
    circuit: &Circuit,
    model: &ErrorModel,
    rates: &RateVector,
    k: usize,
    observables: &[PauliString],
) -> Result<Vec<f64>> {
    let tc = TaylorCircuit::new(circuit, model, rates, k)?;
    observables.iter().map(|q| tc.expectation(q, TaylorStrategy::Auto)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{sample_random_circuit, LayerSampler};
    use crate::model::build_paper_model;
    use crate::propagation::CircuitSensitivity;
    use crate::simulator::dense::{simulate_dense, DenseOptions};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;

    fn obs(n: usize) -> Vec<PauliString> {
        crate::design::enumerate_observables(n, 2).unwrap()
    }

    #[test]
    fn first_order_is_design_row() {
        let (m, r) = build_paper_model(4, None, 3, 1.0, Default::default()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(1);
        for _ in 0..5 {
            let c = sample_random_circuit(4, 6, &LayerSampler::ring(4), &mut rng).unwrap();
            let cs = CircuitSensitivity::new(&c, &m).unwrap();
            let tc = TaylorCircuit::new(&c, &m, &r, 1).unwrap();
            for q in obs(4) {
                let row = cs.row(&q).unwrap();
                let lin = f64::from(row.ideal) + row.dot(r.values());
                for s in [TaylorStrategy::PauliMap, TaylorStrategy::Enumerate] {
                    assert!((tc.expectation(&q, s).unwrap() - lin).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn strategies_agree_at_higher_order() {
        let (m, r) = build_paper_model(3, None, 9, 3.0, Default::default()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(2);
        let c = sample_random_circuit(3, 4, &LayerSampler::ring(3), &mut rng).unwrap();
        let tc = TaylorCircuit::new(&c, &m, &r, 3).unwrap();
        for q in obs(3) {
            let a = tc.orders(&q, TaylorStrategy::PauliMap).unwrap();
            let b = tc.orders(&q, TaylorStrategy::Enumerate).unwrap();
            for (x, y) in a.iter().zip(&b) {
                assert!((x - y).abs() < 1e-13, "{a:?} vs {b:?}");
            }
        }
    }

    #[test]
    fn converges_to_dense() {
        let (m, r) = build_paper_model(2, None, 4, 1.0, Default::default()).unwrap();
        let mut rng = ChaCha20Rng::seed_from_u64(3);
        let c = sample_random_circuit(2, 8, &LayerSampler::ring(2), &mut rng).unwrap();
        let o = obs(2);
        let exact = simulate_dense(&c, &m, &r, &o, DenseOptions::default()).unwrap().expectations;
        let approx = simulate_taylor(&c, &m, &r, 8, &o).unwrap();
        for (x, y) in exact.iter().zip(&approx) {
            assert!((x - y).abs() < 1e-10, "{x} vs {y}");
        }
    }

    #[test]
    fn rejects_order_zero() {
        let (m, r) = build_paper_model(2, None, 4, 1.0, Default::default()).unwrap();
        assert!(TaylorCircuit::new(&Circuit::empty(2), &m, &r, 0).is_err());
    }
}
