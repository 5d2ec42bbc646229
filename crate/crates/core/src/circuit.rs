//! Layered Clifford circuits.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::GateId;
use crate::pauli::{gates, CliffordTableau};

/// One gate application inside a layer, in the serialized form `{gate, targets}`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GateOp {
    pub gate: String,
    pub targets: Vec<usize>,
}

impl From<&GateId> for GateOp {
    fn from(g: &GateId) -> Self {
        GateOp { gate: g.name.clone(), targets: g.targets.clone() }
    }
}

impl GateOp {
    pub fn id(&self) -> GateId {
        GateId::new(self.gate.clone(), self.targets.clone())
    }
}

/// Circuit of `depth` layers. The prep and meas pseudo-layers are implicit. Ops within each
/// layer are kept sorted, so two circuits with the same layer sets compare and hash equal.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Circuit {
    n: usize,
    layers: Vec<Vec<GateOp>>,
}

impl Circuit {
    pub fn new(n: usize, layers: Vec<Vec<GateOp>>) -> Result<Self> {
        let mut layers = layers;
        for (li, layer) in layers.iter_mut().enumerate() {
            let mut used = HashSet::new();
            for op in layer.iter() {
                let arity = gates::gate_arity(&op.gate)
                    .ok_or_else(|| Error::Circuit(format!("layer {li}: gate {:?} is not in the Clifford registry", op.gate)))?;
                if arity != op.targets.len() {
                    return Err(Error::Circuit(format!(
                        "layer {li}: {} expects {arity} targets, got {}",
                        op.gate,
                        op.targets.len()
                    )));
                }
                for &t in &op.targets {
                    if t >= n {
                        return Err(Error::Circuit(format!("layer {li}: target {t} out of range for {n} qubits")));
                    }
                    if !used.insert(t) {
                        return Err(Error::Circuit(format!("layer {li}: qubit {t} targeted twice")));
                    }
                }
            }
            layer.sort();
        }
        Ok(Self { n, layers })
    }

    pub fn empty(n: usize) -> Self {
        Self { n, layers: vec![] }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<GateOp>] {
        &self.layers
    }

    /// Gate ids of error layer `l`: 0 is prep, `1..=depth` the circuit layers, `depth + 1` meas.
    pub fn error_layer(&self, l: usize) -> Vec<GateId> {
        if l == 0 {
            vec![GateId::prep()]
        } else if l == self.depth() + 1 {
            vec![GateId::meas()]
        } else {
            self.layers[l - 1].iter().map(GateOp::id).collect()
        }
    }

    /// Number of error layers including the SPAM pseudo-layers.
    pub fn num_error_layers(&self) -> usize {
        self.depth() + 2
    }

    /// Ideal unitary of circuit layer `i` (0-based).
    pub fn layer_tableau(&self, i: usize) -> CliffordTableau {
        let mut t = CliffordTableau::identity(self.n);
        for op in &self.layers[i] {
            let local = gates::gate_tableau(&op.gate).expect("validated at construction");
            t.set_local(&op.targets, &local).expect("validated at construction");
        }
        t
    }

    /// The whole circuit as one tableau (first layer applied first).
    pub fn tableau(&self) -> CliffordTableau {
        let mut u = CliffordTableau::identity(self.n);
        for i in 0..self.depth() {
            u = self.layer_tableau(i).compose(&u).expect("same size");
        }
        u
    }

    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("circuit serializes")
    }

    /// Stable identifier: first 16 hex digits of SHA-256 over the canonical JSON.
    pub fn id(&self) -> String {
        let digest = Sha256::digest(self.canonical_json().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: Circuit = serde_json::from_str(s)?;
        Circuit::new(raw.n, raw.layers)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn op(g: &str, t: &[usize]) -> GateOp {
        GateOp { gate: g.into(), targets: t.to_vec() }
    }

    #[test]
    fn validation() {
        assert!(Circuit::new(2, vec![vec![op("Gcz", &[0, 1]), op("Gxpi2", &[0])]]).is_err());
        assert!(Circuit::new(2, vec![vec![op("Gcz", &[0])]]).is_err());
        assert!(Circuit::new(2, vec![vec![op("Gxpi2", &[2])]]).is_err());
        assert!(Circuit::new(2, vec![vec![op("prep", &[])]]).is_err());
        assert!(Circuit::new(2, vec![vec![op("Gxpi2", &[1]), op("Gypi2", &[0])]]).is_ok());
    }

    #[test]
    fn id_ignores_op_order_within_layer() {
        let a = Circuit::new(2, vec![vec![op("Gxpi2", &[1]), op("Gypi2", &[0])]]).unwrap();
        let b = Circuit::new(2, vec![vec![op("Gypi2", &[0]), op("Gxpi2", &[1])]]).unwrap();
        assert_eq!(a.id(), b.id());
        assert_eq!(a.id().len(), 16);
        let back = Circuit::from_json(&a.canonical_json()).unwrap();
        assert_eq!(back, a);
    }

    #[test]
    fn error_layers() {
        let c = Circuit::new(1, vec![vec![op("Gh", &[0])]]).unwrap();
        assert_eq!(c.num_error_layers(), 3);
        assert_eq!(c.error_layer(0), vec![GateId::prep()]);
        assert_eq!(c.error_layer(1), vec![GateId::new("Gh", vec![0])]);
        assert_eq!(c.error_layer(2), vec![GateId::meas()]);
    }
}
