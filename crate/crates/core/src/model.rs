//! Sparse error-generator models and the canonical parameter vector.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{gates, Pauli, PauliString};

pub const PREP: &str = "prep";
pub const MEAS: &str = "meas";
pub const IDLE: &str = "Gi";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GeneratorKind {
    H,
    S,
    /// Reserved; rejected at model load.
    C,
    /// Reserved; rejected at model load.
    A,
}

impl fmt::Display for GeneratorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            GeneratorKind::H => "H",
            GeneratorKind::S => "S",
            GeneratorKind::C => "C",
            GeneratorKind::A => "A",
        };
        f.write_str(s)
    }
}

/// `H_P` or `S_P` with an unsigned, non-identity label `P`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ElementaryGenerator {
    pub kind: GeneratorKind,
    pub label: PauliString,
}

impl ElementaryGenerator {
    pub fn new(kind: GeneratorKind, label: PauliString) -> Result<Self> {
        if !matches!(kind, GeneratorKind::H | GeneratorKind::S) {
            return Err(Error::Model(format!("unsupported generator kind {kind}")));
        }
        if label.is_identity() {
            return Err(Error::Model("generator label must not be the identity".into()));
        }
        if label.phase_exp() != 0 {
            return Err(Error::Model(format!("generator label {label} must be unsigned")));
        }
        Ok(Self { kind, label })
    }

    pub fn h(label: PauliString) -> Self {
        Self::new(GeneratorKind::H, label).expect("valid H label")
    }

    pub fn s(label: PauliString) -> Self {
        Self::new(GeneratorKind::S, label).expect("valid S label")
    }
}

impl fmt::Display for ElementaryGenerator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}_{}", self.kind, self.label.to_label())
    }
}

/// A gate application: gate name plus its ordered targets. The SPAM pseudo-gates have no
/// targets. Ordering is lexicographic on `(name, targets)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GateId {
    pub name: String,
    pub targets: Vec<usize>,
}

impl GateId {
    pub fn new(name: impl Into<String>, targets: Vec<usize>) -> Self {
        Self { name: name.into(), targets }
    }

    pub fn prep() -> Self {
        Self::new(PREP, vec![])
    }

    pub fn meas() -> Self {
        Self::new(MEAS, vec![])
    }

    pub fn is_spam(&self) -> bool {
        self.name == PREP || self.name == MEAS
    }
}

impl fmt::Display for GateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)?;
        if !self.targets.is_empty() {
            let t: Vec<String> = self.targets.iter().map(|t| t.to_string()).collect();
            write!(f, ":{}", t.join(","))?;
        }
        Ok(())
    }
}

impl std::str::FromStr for GateId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.split_once(':') {
            None => Ok(GateId::new(s, vec![])),
            Some((name, t)) => {
                let targets = t
                    .split(',')
                    .map(|x| x.trim().parse::<usize>().map_err(|_| Error::Model(format!("bad gate id {s:?}"))))
                    .collect::<Result<Vec<_>>>()?;
                Ok(GateId::new(name, targets))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GateErrorSpec {
    pub id: GateId,
    pub generators: Vec<ElementaryGenerator>,
}

/// Key of one model parameter.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamKey {
    pub gate: GateId,
    pub kind: GeneratorKind,
    pub label: PauliString,
}

impl fmt::Display for ParamKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}_{}", self.gate, self.kind, self.label.to_label())
    }
}

/// How the CZ coupling (ZZ) errors of the built-in model are attached.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CouplingRule {
    /// CZ on `(q, r)` adds `H_{Z_q Z_j}` and `H_{Z_r Z_j}` for every other qubit `j`.
    #[default]
    TargetToAll,
    /// CZ on `(q, r)` adds `H_{Z_a Z_b}` for every connectivity edge sharing a qubit with it.
    OwnEdgeAndAdjacent,
    /// CZ adds `H_{Z_a Z_b}` for every other connectivity edge.
    AllEdges,
}

/// Provenance of a generated model, written into the model file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRecipe {
    pub name: String,
    pub connectivity: Vec<(usize, usize)>,
    pub coupling: CouplingRule,
    pub seed: u64,
    pub scale_c: f64,
    pub h_range: (f64, f64),
    pub s_range: (f64, f64),
}

/// Validated error model. Gate specs are stored in canonical order, and the parameter vector
/// is ordered by gate id, then `H` before `S`, then label.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorModel {
    n: usize,
    gates: Vec<GateErrorSpec>,
    offsets: Vec<usize>,
    gate_lookup: HashMap<GateId, usize>,
    keys: Vec<ParamKey>,
    index: HashMap<ParamKey, usize>,
    recipe: Option<ModelRecipe>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub n: usize,
    pub kappa: usize,
    pub num_h: usize,
    pub num_s: usize,
    pub num_gates: usize,
    pub violations: Vec<String>,
}

impl ModelDiagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Unvalidated gate entry, as read from a file or assembled by hand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GateEntry {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    #[serde(default)]
    pub targets: Vec<usize>,
    pub ideal: String,
    #[serde(default)]
    pub errors: Vec<ErrorEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorEntry {
    pub kind: String,
    pub pauli: String,
}

/// On-disk model format.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub n: usize,
    pub gates: Vec<GateEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rates: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub recipe: Option<ModelRecipe>,
}

/// Checks a model description and reports κ, per-kind counts and every violation found.
pub fn validate_model(file: &ModelFile) -> ModelDiagnostics {
    let n = file.n;
    let mut violations = Vec::new();
    let mut seen_gates = HashSet::new();
    let (mut num_h, mut num_s) = (0, 0);
    for (gi, g) in file.gates.iter().enumerate() {
        let gate_id = GateId::new(g.ideal.clone(), g.targets.clone());
        let where_ = format!("gate #{gi} ({gate_id})");
        if let Some(id) = &g.id {
            if *id != gate_id.to_string() {
                violations.push(format!("{where_}: id {id:?} does not match ideal/targets"));
            }
        }
        if gate_id.is_spam() {
            if !g.targets.is_empty() {
                violations.push(format!("{where_}: SPAM pseudo-gate takes no targets"));
            }
        } else {
            match gates::gate_arity(&g.ideal) {
                None => violations.push(format!("{where_}: unknown gate {:?}", g.ideal)),
                Some(k) if k != g.targets.len() => {
                    violations.push(format!("{where_}: expects {k} targets, got {}", g.targets.len()))
                }
                _ => {}
            }
            if g.targets.iter().any(|&t| t >= n) {
                violations.push(format!("{where_}: target out of range for {n} qubits"));
            }
            let distinct: HashSet<_> = g.targets.iter().collect();
            if distinct.len() != g.targets.len() {
                violations.push(format!("{where_}: repeated target"));
            }
        }
        if !seen_gates.insert(gate_id) {
            violations.push(format!("{where_}: duplicate gate"));
        }
        let mut seen = HashSet::new();
        for e in &g.errors {
            let kind = match e.kind.as_str() {
                "H" => GeneratorKind::H,
                "S" => GeneratorKind::S,
                "C" | "A" => {
                    violations.push(format!("{where_}: unsupported generator kind {}", e.kind));
                    continue;
                }
                other => {
                    violations.push(format!("{where_}: unsupported generator kind {other:?}"));
                    continue;
                }
            };
            let label = match e.pauli.parse::<PauliString>() {
                Ok(p) => p,
                Err(err) => {
                    violations.push(format!("{where_}: {err}"));
                    continue;
                }
            };
            if label.num_qubits() != n {
                violations.push(format!("{where_}: label {} has {} qubits, model has {n}", e.pauli, label.num_qubits()));
                continue;
            }
            if label.phase_exp() != 0 {
                violations.push(format!("{where_}: label {} must be unsigned", e.pauli));
            }
            if label.is_identity() {
                violations.push(format!("{where_}: identity label"));
                continue;
            }
            if !seen.insert((kind, label.unsigned())) {
                violations.push(format!("{where_}: duplicate generator {kind}_{}", label.to_label()));
                continue;
            }
            match kind {
                GeneratorKind::H => num_h += 1,
                _ => num_s += 1,
            }
        }
    }
    let kappa = num_h + num_s;
    if let Some(r) = &file.rates {
        if r.len() != kappa {
            violations.push(format!("rates has length {}, expected kappa = {kappa}", r.len()));
        }
    }
    ModelDiagnostics { n, kappa, num_h, num_s, num_gates: file.gates.len(), violations }
}

impl ErrorModel {
    /// Builds a model from canonicalizable gate specs. Generators are sorted within each gate.
    pub fn new(n: usize, specs: Vec<GateErrorSpec>) -> Result<Self> {
        Self::from_file(&ModelFile {
            n,
            gates: specs
                .into_iter()
                .map(|s| GateEntry {
                    id: None,
                    targets: s.id.targets,
                    ideal: s.id.name,
                    errors: s
                        .generators
                        .into_iter()
                        .map(|g| ErrorEntry { kind: g.kind.to_string(), pauli: g.label.to_label() })
                        .collect(),
                })
                .collect(),
            rates: None,
            recipe: None,
        })
        .map(|(m, _)| m)
    }

    /// Validates and canonicalizes a model file. Returns the optional rates in canonical order.
    pub fn from_file(file: &ModelFile) -> Result<(Self, Option<RateVector>)> {
        let diag = validate_model(file);
        if !diag.is_valid() {
            return Err(Error::InvalidModel(diag.violations));
        }
        // Map file order to canonical order so the rate vector can be permuted alongside.
        let mut entries: Vec<(ParamKey, usize)> = Vec::with_capacity(diag.kappa);
        let mut gate_ids = Vec::with_capacity(file.gates.len());
        for g in &file.gates {
            let gid = GateId::new(g.ideal.clone(), g.targets.clone());
            for e in &g.errors {
                let kind = if e.kind == "H" { GeneratorKind::H } else { GeneratorKind::S };
                let label: PauliString = e.pauli.parse()?;
                let pos = entries.len();
                entries.push((ParamKey { gate: gid.clone(), kind, label }, pos));
            }
            gate_ids.push(gid);
        }
        entries.sort();
        gate_ids.sort();
        let mut model = Self::assemble(file.n, gate_ids, entries.iter().map(|(k, _)| k.clone()).collect());
        model.recipe = file.recipe.clone();
        let rates = file.rates.as_ref().map(|r| {
            let values: Vec<f64> = entries.iter().map(|&(_, pos)| r[pos]).collect();
            RateVector::new(&model, values)
        });
        Ok((model, rates.transpose()?))
    }

    /// `keys` must be sorted and unique; every key's gate must be in `gate_ids` (sorted).
    fn assemble(n: usize, gate_ids: Vec<GateId>, keys: Vec<ParamKey>) -> Self {
        let mut gates: Vec<GateErrorSpec> =
            gate_ids.into_iter().map(|id| GateErrorSpec { id, generators: vec![] }).collect();
        let gate_lookup: HashMap<GateId, usize> = gates.iter().enumerate().map(|(i, g)| (g.id.clone(), i)).collect();
        for k in &keys {
            let gi = gate_lookup[&k.gate];
            gates[gi].generators.push(ElementaryGenerator { kind: k.kind, label: k.label.clone() });
        }
        let mut offsets = Vec::with_capacity(gates.len() + 1);
        let mut acc = 0;
        for g in &gates {
            offsets.push(acc);
            acc += g.generators.len();
        }
        offsets.push(acc);
        let index = keys.iter().enumerate().map(|(i, k)| (k.clone(), i)).collect();
        Self { n, gates, offsets, gate_lookup, keys, index, recipe: None }
    }

    pub fn load(path: &Path) -> Result<(Self, Option<RateVector>)> {
        let text = std::fs::read_to_string(path)?;
        let file: ModelFile = serde_json::from_str(&text)?;
        Self::from_file(&file)
    }

    pub fn to_file(&self, rates: Option<&RateVector>) -> ModelFile {
        ModelFile {
            n: self.n,
            gates: self
                .gates
                .iter()
                .map(|g| GateEntry {
                    id: Some(g.id.to_string()),
                    targets: g.id.targets.clone(),
                    ideal: g.id.name.clone(),
                    errors: g
                        .generators
                        .iter()
                        .map(|e| ErrorEntry { kind: e.kind.to_string(), pauli: e.label.to_label() })
                        .collect(),
                })
                .collect(),
            rates: rates.map(|r| r.values().to_vec()),
            recipe: self.recipe.clone(),
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn kappa(&self) -> usize {
        self.keys.len()
    }

    pub fn gates(&self) -> &[GateErrorSpec] {
        &self.gates
    }

    pub fn recipe(&self) -> Option<&ModelRecipe> {
        self.recipe.as_ref()
    }

    pub fn keys(&self) -> &[ParamKey] {
        &self.keys
    }

    pub fn key(&self, i: usize) -> &ParamKey {
        &self.keys[i]
    }

    pub fn index_of(&self, key: &ParamKey) -> Option<usize> {
        self.index.get(key).copied()
    }

    pub fn kind(&self, i: usize) -> GeneratorKind {
        self.keys[i].kind
    }

    pub fn h_indices(&self) -> Vec<usize> {
        (0..self.kappa()).filter(|&i| self.keys[i].kind == GeneratorKind::H).collect()
    }

    pub fn s_indices(&self) -> Vec<usize> {
        (0..self.kappa()).filter(|&i| self.keys[i].kind == GeneratorKind::S).collect()
    }

    pub fn has_gate(&self, id: &GateId) -> bool {
        self.gate_lookup.contains_key(id)
    }

    /// Parameters attached to `id` as `(first parameter index, generators)`. Idle and SPAM
    /// pseudo-gates the model does not declare are error-free; any other unknown gate is an error.
    pub fn gate_params(&self, id: &GateId) -> Result<(usize, &[ElementaryGenerator])> {
        match self.gate_lookup.get(id) {
            Some(&gi) => Ok((self.offsets[gi], &self.gates[gi].generators)),
            None if id.name == IDLE || id.is_spam() => Ok((0, &[])),
            None => Err(Error::Model(format!("gate {id} has no entry in the model"))),
        }
    }

    /// Sub-model keeping only `params` (indices into this model); all gates stay declared.
    /// Parameter order is inherited, so index `j` of the result is `params[j]` after sorting.
    pub fn restrict(&self, params: &[usize]) -> Result<(Self, Vec<usize>)> {
        let mut kept: Vec<usize> = params.to_vec();
        kept.sort_unstable();
        kept.dedup();
        if kept.last().is_some_and(|&i| i >= self.kappa()) {
            return Err(Error::Model("parameter index out of range".into()));
        }
        let keys = kept.iter().map(|&i| self.keys[i].clone()).collect();
        let mut m = Self::assemble(self.n, self.gates.iter().map(|g| g.id.clone()).collect(), keys);
        m.recipe = self.recipe.clone();
        Ok((m, kept))
    }

    pub fn diagnostics(&self) -> ModelDiagnostics {
        validate_model(&self.to_file(None))
    }
}

/// Rate vector aligned with a model's canonical parameter order.
#[derive(Debug, Clone, PartialEq)]
pub struct RateVector {
    values: Vec<f64>,
    is_h: Vec<bool>,
}

impl RateVector {
    pub fn new(model: &ErrorModel, values: Vec<f64>) -> Result<Self> {
        if values.len() != model.kappa() {
            return Err(Error::Model(format!("rate vector has length {}, expected {}", values.len(), model.kappa())));
        }
        let is_h = (0..model.kappa()).map(|i| model.kind(i) == GeneratorKind::H).collect();
        Ok(Self { values, is_h })
    }

    pub fn zeros(model: &ErrorModel) -> Self {
        Self::new(model, vec![0.0; model.kappa()]).expect("length matches")
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_h(&self, i: usize) -> bool {
        self.is_h[i]
    }

    pub fn h_mask(&self) -> &[bool] {
        &self.is_h
    }

    /// Stochastic rates are non-negative.
    pub fn is_cptp(&self) -> bool {
        self.values.iter().zip(&self.is_h).all(|(&v, &h)| h || v >= 0.0)
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|v| v * c).collect(), is_h: self.is_h.clone() }
    }

    pub fn subset(&self, idx: &[usize]) -> Self {
        Self { values: idx.iter().map(|&i| self.values[i]).collect(), is_h: idx.iter().map(|&i| self.is_h[i]).collect() }
    }

    /// Mean of `|rate|` over the indices selected by `mask`.
    pub fn mean_abs(&self, mask: impl Fn(usize) -> bool) -> f64 {
        let (s, k) = (0..self.len()).filter(|&i| mask(i)).fold((0.0, 0usize), |(s, k), i| (s + self.values[i].abs(), k + 1));
        if k == 0 {
            0.0
        } else {
            s / k as f64
        }
    }
}

/// A layer's combined error generator: the sum of the generators of all its gates, with rates
/// of repeated generators added. Output is in canonical generator order.
pub fn layer_lindbladian(
    model: &ErrorModel,
    rates: &RateVector,
    layer: &[GateId],
) -> Result<Vec<(ElementaryGenerator, f64)>> {
    let mut merged: BTreeMap<ElementaryGenerator, f64> = BTreeMap::new();
    for g in layer {
        let (off, gens) = model.gate_params(g)?;
        for (j, e) in gens.iter().enumerate() {
            *merged.entry(e.clone()).or_insert(0.0) += rates.values()[off + j];
        }
    }
    Ok(merged.into_iter().collect())
}

/// Ring connectivity on `n` qubits (a single edge for two qubits, none for one).
pub fn ring_edges(n: usize) -> Vec<(usize, usize)> {
    match n {
        0 | 1 => vec![],
        2 => vec![(0, 1)],
        _ => (0..n).map(|j| (j.min((j + 1) % n), j.max((j + 1) % n))).collect(),
    }
}

pub fn validate_connectivity(n: usize, edges: &[(usize, usize)]) -> Result<Vec<(usize, usize)>> {
    let mut out = Vec::with_capacity(edges.len());
    let mut seen = HashSet::new();
    for &(a, b) in edges {
        if a >= n || b >= n {
            return Err(Error::Model(format!("edge ({a},{b}) out of range for {n} qubits")));
        }
        if a == b {
            return Err(Error::Model(format!("edge ({a},{b}) is a self-loop")));
        }
        let e = (a.min(b), a.max(b));
        if !seen.insert(e) {
            return Err(Error::Model(format!("duplicate edge ({a},{b})")));
        }
        out.push(e);
    }
    Ok(out)
}

pub const PAPER_H_RANGE: (f64, f64) = (-1e-2, 1e-2);
pub const PAPER_S_RANGE: (f64, f64) = (0.0, 1e-3);

/// Generator lists of the built-in model: each single-qubit rotation about axis A on q gets
/// `H_{A_q}`, `S_{A_q}` and `H_{Z_j}` on every other qubit; each CZ gets H and S on `Z_q`,
/// `Z_r`, `Z_q Z_r`, `H_{Z_j}` on every other qubit, and ZZ couplings per `rule`; prep and meas
/// get `S_{X_j}` on every qubit.
pub fn paper_model_specs(n: usize, edges: &[(usize, usize)], rule: CouplingRule) -> Vec<GateErrorSpec> {
    let z = |qs: &[usize]| PauliString::z_type(n, qs);
    let mut specs = Vec::new();
    for q in 0..n {
        for (name, axis) in [("Gxpi2", Pauli::X), ("Gypi2", Pauli::Y), ("Gzpi2", Pauli::Z)] {
            let a = PauliString::single(n, q, axis);
            let mut g = vec![ElementaryGenerator::h(a.clone()), ElementaryGenerator::s(a)];
            g.extend((0..n).filter(|&j| j != q).map(|j| ElementaryGenerator::h(z(&[j]))));
            specs.push(GateErrorSpec { id: GateId::new(name, vec![q]), generators: g });
        }
    }
    for &(q, r) in edges {
        let mut g = Vec::new();
        for t in [z(&[q]), z(&[r]), z(&[q, r])] {
            g.push(ElementaryGenerator::h(t.clone()));
            g.push(ElementaryGenerator::s(t));
        }
        g.extend((0..n).filter(|&j| j != q && j != r).map(|j| ElementaryGenerator::h(z(&[j]))));
        let mut pairs: Vec<(usize, usize)> = match rule {
            CouplingRule::TargetToAll => (0..n)
                .filter(|&j| j != q && j != r)
                .flat_map(|j| [(q.min(j), q.max(j)), (r.min(j), r.max(j))])
                .collect(),
            CouplingRule::OwnEdgeAndAdjacent => edges
                .iter()
                .copied()
                .filter(|&(a, b)| (a, b) != (q, r) && (a == q || a == r || b == q || b == r))
                .collect(),
            CouplingRule::AllEdges => edges.iter().copied().filter(|&e| e != (q, r)).collect(),
        };
        pairs.sort_unstable();
        pairs.dedup();
        g.extend(pairs.into_iter().map(|(a, b)| ElementaryGenerator::h(z(&[a, b]))));
        specs.push(GateErrorSpec { id: GateId::new("Gcz", vec![q, r]), generators: g });
    }
    for id in [GateId::prep(), GateId::meas()] {
        let g = (0..n).map(|j| ElementaryGenerator::s(PauliString::single(n, j, Pauli::X))).collect();
        specs.push(GateErrorSpec { id, generators: g });
    }
    specs
}

/// Samples rates for `model` in canonical parameter order: H uniform on `h_range`, S uniform on
/// `s_range`, all multiplied by `c`.
pub fn sample_rates(model: &ErrorModel, seed: u64, c: f64, h_range: (f64, f64), s_range: (f64, f64)) -> RateVector {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let values = model
        .keys()
        .iter()
        .map(|k| {
            let (lo, hi) = if k.kind == GeneratorKind::H { h_range } else { s_range };
            rng.random_range(lo..=hi) * c
        })
        .collect();
    RateVector::new(model, values).expect("length matches")
}

/// The built-in model: ring (or given) connectivity, target, spillover and coupling errors,
/// SPAM bit flips, rates drawn from the standard intervals and scaled by `c`.
pub fn build_paper_model(
    n: usize,
    connectivity: Option<&[(usize, usize)]>,
    seed: u64,
    c: f64,
    rule: CouplingRule,
) -> Result<(ErrorModel, RateVector)> {
    if n == 0 {
        return Err(Error::Model("model needs at least one qubit".into()));
    }
    if !(c >= 1.0 && c.is_finite()) {
        return Err(Error::Model(format!("scale factor c must be >= 1, got {c}")));
    }
    let edges = match connectivity {
        Some(e) => validate_connectivity(n, e)?,
        None => ring_edges(n),
    };
    let mut model = ErrorModel::new(n, paper_model_specs(n, &edges, rule))?;
    model.recipe = Some(ModelRecipe {
        name: "paper".into(),
        connectivity: edges,
        coupling: rule,
        seed,
        scale_c: c,
        h_range: PAPER_H_RANGE,
        s_range: PAPER_S_RANGE,
    });
    let rates = sample_rates(&model, seed, c, PAPER_H_RANGE, PAPER_S_RANGE);
    Ok((model, rates))
}
