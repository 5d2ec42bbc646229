//! Propagation of layer error generators to the end of a circuit, and the first-order
//! sensitivity of Z-type observables to every model parameter.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::circuit::Circuit;
use crate::error::{Error, Result};
use crate::model::{ErrorModel, GeneratorKind};
use crate::pauli::{CliffordTableau, PauliString, StabilizerState, Words};

/// A model generator moved through the ideal layers that follow it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PropagatedGenerator {
    /// Error layer it came from: 0 is prep, `depth + 1` is meas.
    pub layer: usize,
    pub source_param: usize,
    pub kind: GeneratorKind,
    /// Unsigned image `P'` of the original label.
    pub label_out: PauliString,
    /// `γ(U, P)`, the sign of `U P U†` relative to `P'`; always `+1` for `S`.
    pub sign: i8,
}

/// Propagates every generator of every error layer to the end of the circuit with one backward
/// sweep over the suffix unitary. Output is ordered by layer, then parameter index.
pub fn propagate_all(circuit: &Circuit, model: &ErrorModel) -> Result<Vec<PropagatedGenerator>> {
    if circuit.num_qubits() != model.num_qubits() {
        return Err(Error::Dimension { left: model.num_qubits(), right: circuit.num_qubits() });
    }
    let n = circuit.num_qubits();
    let d = circuit.depth();
    let mut suffix = CliffordTableau::identity(n);
    let mut by_layer: Vec<Vec<PropagatedGenerator>> = vec![Vec::new(); d + 2];
    for l in (0..d + 2).rev() {
        for gate in circuit.error_layer(l) {
            let (off, gens) = model.gate_params(&gate)?;
            for (j, g) in gens.iter().enumerate() {
                let img = suffix.conjugate_unchecked(&g.label);
                let sign = match (g.kind, img.phase_exp()) {
                    (GeneratorKind::S, _) | (_, 0) => 1,
                    _ => -1,
                };
                by_layer[l].push(PropagatedGenerator {
                    layer: l,
                    source_param: off + j,
                    kind: g.kind,
                    label_out: img.unsigned(),
                    sign,
                });
            }
        }
        if (1..=d).contains(&l) {
            suffix = suffix.compose(&circuit.layer_tableau(l - 1))?;
        }
    }
    let mut out: Vec<PropagatedGenerator> = by_layer.into_iter().flatten().collect();
    out.sort_by_key(|g| (g.layer, g.source_param));
    Ok(out)
}

fn check_dims(q: &PauliString, p: &PauliString, psi: &StabilizerState) -> Result<()> {
    for x in [q, p] {
        if x.num_qubits() != psi.num_qubits() {
            return Err(Error::Dimension { left: psi.num_qubits(), right: x.num_qubits() });
        }
    }
    Ok(())
}

/// `Tr[Q H_P(|ψ⟩⟨ψ|)] = -i⟨ψ|[Q, P]|ψ⟩`, one of `-2, 0, 2`.
pub fn h_trace(q: &PauliString, p: &PauliString, psi: &StabilizerState) -> Result<f64> {
    check_dims(q, p, psi)?;
    if q.commutes(p)? {
        return Ok(0.0);
    }
    // [Q, P] = 2QP with QP = i^m σ, m odd and σ Hermitian.
    let qp = q.mul(p)?;
    let m = qp.phase_exp();
    let sigma = qp.unsigned();
    let e = psi.expectation(&sigma)?;
    Ok(if m == 1 { 2.0 * e } else { -2.0 * e })
}

/// `Tr[Q S_P(|ψ⟩⟨ψ|)] = ⟨PQP⟩ - ⟨Q⟩`, one of `-2, 0, 2`.
pub fn s_trace(q: &PauliString, p: &PauliString, psi: &StabilizerState) -> Result<f64> {
    check_dims(q, p, psi)?;
    if q.commutes(p)? {
        return Ok(0.0);
    }
    Ok(-2.0 * psi.expectation(q)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RowKind {
    H,
    S,
}

/// First-order sensitivity of one observable on one circuit: `Δ⟨Q⟩ = Σ entries · ε`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensitivityRow {
    pub circuit_id: String,
    pub observable: PauliString,
    pub kind: RowKind,
    /// `⟨Q⟩` in the ideal circuit: -1, 0 or 1.
    pub ideal: i8,
    /// Sorted by parameter index; no zero entries.
    pub entries: Vec<(usize, f64)>,
}

impl SensitivityRow {
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, v)| v * x[i]).sum()
    }
}

pub fn check_observable(q: &PauliString, n: usize) -> Result<()> {
    if q.num_qubits() != n {
        return Err(Error::Dimension { left: n, right: q.num_qubits() });
    }
    if !q.is_z_type() || q.phase_exp() != 0 {
        return Err(Error::Design(format!("observable {q} must be an unsigned Z-type Pauli")));
    }
    if q.weight() == 0 {
        return Err(Error::Design("observable must have weight >= 1".into()));
    }
    Ok(())
}

fn merge_entries(mut raw: Vec<(usize, f64)>) -> Vec<(usize, f64)> {
    raw.sort_by_key(|e| e.0);
    let mut out: Vec<(usize, f64)> = Vec::with_capacity(raw.len());
    for (i, v) in raw {
        match out.last_mut() {
            Some(last) if last.0 == i => last.1 += v,
            _ => out.push((i, v)),
        }
    }
    out.retain(|e| e.1 != 0.0);
    out
}

/// Sensitivity row computed literally from the stabilizer state of the ideal circuit with
/// [`h_trace`] and [`s_trace`]. [`CircuitSensitivity`] gives the same rows much faster.
pub fn sensitivity_row(circuit: &Circuit, q: &PauliString, model: &ErrorModel) -> Result<SensitivityRow> {
    check_observable(q, circuit.num_qubits())?;
    let gens = propagate_all(circuit, model)?;
    let psi = StabilizerState::from_clifford(&circuit.tableau());
    let ideal = psi.expectation(q)?;
    let kind = if ideal == 0.0 { RowKind::H } else { RowKind::S };
    let mut raw = Vec::new();
    for g in &gens {
        let v = match (kind, g.kind) {
            (RowKind::H, GeneratorKind::H) => f64::from(g.sign) * h_trace(q, &g.label_out, &psi)?,
            (RowKind::S, GeneratorKind::S) => s_trace(q, &g.label_out, &psi)?,
            _ => 0.0,
        };
        if v != 0.0 {
            raw.push((g.source_param, v));
        }
    }
    Ok(SensitivityRow { circuit_id: circuit.id(), observable: q.clone(), kind, ideal: ideal as i8, entries: merge_entries(raw) })
}

/// Per-circuit data shared by all observables of that circuit.
///
/// Everything is pulled back to the frame of the initial state: with `U` the whole circuit,
/// `⟨ψ|A|ψ⟩ = ⟨0|U†AU|0⟩`, which is the sign of `U†AU` when it has no X part and 0 otherwise.
/// H generators are bucketed by the X part of their pulled-back label, since `Q''P''` has no X
/// part exactly when the X parts agree.
pub struct CircuitSensitivity {
    circuit_id: String,
    n: usize,
    u_inv: CliffordTableau,
    gens: Vec<PropagatedGenerator>,
    pulled: Vec<PauliString>,
    h_buckets: HashMap<Words, Vec<usize>>,
    s_gens: Vec<usize>,
}

impl CircuitSensitivity {
    pub fn new(circuit: &Circuit, model: &ErrorModel) -> Result<Self> {
        let gens = propagate_all(circuit, model)?;
        let u_inv = circuit.tableau().inverse();
        let mut pulled = Vec::with_capacity(gens.len());
        let mut h_buckets: HashMap<Words, Vec<usize>> = HashMap::new();
        let mut s_gens = Vec::new();
        for (i, g) in gens.iter().enumerate() {
            let pp = u_inv.conjugate_unchecked(&g.label_out);
            match g.kind {
                GeneratorKind::H => h_buckets.entry(Words::from_slice(pp.x_words())).or_default().push(i),
                _ => s_gens.push(i),
            }
            pulled.push(pp);
        }
        Ok(Self { circuit_id: circuit.id(), n: circuit.num_qubits(), u_inv, gens, pulled, h_buckets, s_gens })
    }

    pub fn circuit_id(&self) -> &str {
        &self.circuit_id
    }

    pub fn generators(&self) -> &[PropagatedGenerator] {
        &self.gens
    }

    /// Ideal `⟨Q⟩` for any Hermitian `Q`.
    pub fn ideal_expectation(&self, q: &PauliString) -> i8 {
        let qq = self.u_inv.conjugate_unchecked(q);
        if qq.is_z_type() {
            if qq.phase_exp() == 0 {
                1
            } else {
                -1
            }
        } else {
            0
        }
    }

    pub fn row(&self, q: &PauliString) -> Result<SensitivityRow> {
        check_observable(q, self.n)?;
        let qq = self.u_inv.conjugate_unchecked(q);
        let mut raw = Vec::new();
        let (kind, ideal) = if qq.is_z_type() {
            let ideal: i8 = if qq.phase_exp() == 0 { 1 } else { -1 };
            for &i in &self.s_gens {
                if q.anticommutes_unchecked(&self.gens[i].label_out) {
                    raw.push((self.gens[i].source_param, -2.0 * f64::from(ideal)));
                }
            }
            (RowKind::S, ideal)
        } else {
            if let Some(bucket) = self.h_buckets.get(qq.x_words()) {
                for &i in bucket {
                    let pp = &self.pulled[i];
                    if qq.anticommutes_unchecked(pp) {
                        // Q''P'' = i^t L with L diagonal, so -i⟨[Q,P']⟩ = -2i·i^t.
                        let t = qq.mul_unchecked(pp).phase_exp();
                        let v = if t == 1 { 2.0 } else { -2.0 };
                        raw.push((self.gens[i].source_param, f64::from(self.gens[i].sign) * v));
                    }
                }
            }
            (RowKind::H, 0)
        };
        Ok(SensitivityRow {
            circuit_id: self.circuit_id.clone(),
            observable: q.clone(),
            kind,
            ideal,
            entries: merge_entries(raw),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::GateOp;
    use crate::model::{ElementaryGenerator, GateErrorSpec, GateId};
    use crate::pauli::Pauli;

    fn p(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn trace_kernels() {
        let zero = StabilizerState::zero(1);
        assert_eq!(h_trace(&p("X"), &p("Y"), &zero).unwrap(), 2.0);
        assert_eq!(h_trace(&p("Z"), &p("Z"), &zero).unwrap(), 0.0);
        assert_eq!(s_trace(&p("Z"), &p("X"), &zero).unwrap(), -2.0);
        assert_eq!(s_trace(&p("Z"), &p("Z"), &zero).unwrap(), 0.0);
        assert!(h_trace(&p("ZZ"), &p("X"), &zero).is_err());
    }

    fn spam_model(n: usize) -> ErrorModel {
        let g = |id| GateErrorSpec {
            id,
            generators: (0..n).map(|j| ElementaryGenerator::s(PauliString::single(n, j, Pauli::X))).collect(),
        };
        ErrorModel::new(n, vec![g(GateId::prep()), g(GateId::meas())]).unwrap()
    }

    #[test]
    fn depth_zero_propagation_is_identity() {
        let m = spam_model(2);
        let c = Circuit::empty(2);
        let gens = propagate_all(&c, &m).unwrap();
        assert_eq!(gens.len(), 4);
        for g in &gens {
            assert_eq!(&g.label_out, &m.key(g.source_param).label);
            assert_eq!(g.sign, 1);
        }
        let row = sensitivity_row(&c, &p("ZI"), &m).unwrap();
        assert_eq!(row.kind, RowKind::S);
        // prep/S_X0 and meas/S_X0
        let prep_x0 = m.index_of(&crate::model::ParamKey { gate: GateId::prep(), kind: GeneratorKind::S, label: p("XI") }).unwrap();
        assert!(row.entries.contains(&(prep_x0, -2.0)));
        assert_eq!(row.entries.len(), 2);
    }

    #[test]
    fn hadamard_moves_prep_error() {
        let m = ErrorModel::new(
            1,
            vec![
                GateErrorSpec { id: GateId::prep(), generators: vec![ElementaryGenerator::h(p("Z"))] },
                GateErrorSpec { id: GateId::new("Gh", vec![0]), generators: vec![] },
            ],
        )
        .unwrap();
        let c = Circuit::new(1, vec![vec![GateOp { gate: "Gh".into(), targets: vec![0] }]]).unwrap();
        let gens = propagate_all(&c, &m).unwrap();
        assert_eq!(gens[0].label_out, p("X"));
        assert_eq!(gens[0].sign, 1);
        let row = sensitivity_row(&c, &p("Z"), &m).unwrap();
        assert_eq!(row.kind, RowKind::H);
        assert_eq!(row.ideal, 0);
        // H_X on |+⟩ leaves ⟨Z⟩ untouched at first order
        assert!(row.entries.is_empty());
    }

    #[test]
    fn rejects_bad_observables() {
        let m = spam_model(2);
        let c = Circuit::empty(2);
        assert!(sensitivity_row(&c, &p("II"), &m).is_err());
        assert!(sensitivity_row(&c, &p("XI"), &m).is_err());
        assert!(sensitivity_row(&c, &p("-ZI"), &m).is_err());
        assert!(CircuitSensitivity::new(&c, &m).unwrap().row(&p("Z")).is_err());
    }
}
