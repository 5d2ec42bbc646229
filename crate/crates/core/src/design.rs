//! Random circuit designs, Z-type observables and the first-order design matrix.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::circuit::{Circuit, GateOp};
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::model::{ring_edges, validate_connectivity, ErrorModel, GeneratorKind};
use crate::pauli::{gates, PauliString};
use crate::propagation::{CircuitSensitivity, RowKind};
use crate::solver::pinv::{numerical_rank, rank_threshold, sorted_svd};
use crate::solver::qr::GivensQr;

/// Placeholder in a gate set for "leave this qubit alone".
pub const IDLE_CHOICE: &str = "idle";

/// Per-layer random sampler: ring edges in random order, each kept with probability `p_cz` if
/// both of its qubits are still free, then a uniform single-qubit choice on every other qubit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSampler {
    pub p_cz: f64,
    /// Single-qubit gate names; [`IDLE_CHOICE`] means no operation.
    pub single_qubit: Vec<String>,
    /// Two-qubit gate names placed on edges; one is drawn uniformly per placed edge.
    pub two_qubit: Vec<String>,
    pub connectivity: Vec<(usize, usize)>,
}

impl LayerSampler {
    pub const NAME: &'static str = "edge_matching";

    /// The default sampler: CZ on ring edges with `p_cz = 0.25`, then X/Y/Z π/2 or idle.
    pub fn ring(n: usize) -> Self {
        Self {
            p_cz: 0.25,
            single_qubit: ["Gxpi2", "Gypi2", "Gzpi2", IDLE_CHOICE].map(String::from).to_vec(),
            two_qubit: vec!["Gcz".into()],
            connectivity: ring_edges(n),
        }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        if self.single_qubit.is_empty() && self.two_qubit.is_empty() {
            return Err(Error::Design("empty gate set".into()));
        }
        if !(0.0..=1.0).contains(&self.p_cz) {
            return Err(Error::Design(format!("p_cz must lie in [0, 1], got {}", self.p_cz)));
        }
        for g in &self.single_qubit {
            if g != IDLE_CHOICE && gates::gate_arity(g) != Some(1) {
                return Err(Error::Design(format!("{g:?} is not a single-qubit gate")));
            }
        }
        for g in &self.two_qubit {
            if gates::gate_arity(g) != Some(2) {
                return Err(Error::Design(format!("{g:?} is not a two-qubit gate")));
            }
        }
        validate_connectivity(n, &self.connectivity)?;
        Ok(())
    }

    pub fn sample_layer<R: Rng>(&self, n: usize, rng: &mut R) -> Vec<GateOp> {
        let mut ops = Vec::new();
        let mut busy = vec![false; n];
        if !self.two_qubit.is_empty() {
            let mut edges = self.connectivity.clone();
            edges.shuffle(rng);
            for (a, b) in edges {
                let take = rng.random_bool(self.p_cz);
                if take && !busy[a] && !busy[b] {
                    let g = &self.two_qubit[rng.random_range(0..self.two_qubit.len())];
                    ops.push(GateOp { gate: g.clone(), targets: vec![a, b] });
                    busy[a] = true;
                    busy[b] = true;
                }
            }
        }
        if !self.single_qubit.is_empty() {
            for (q, &b) in busy.iter().enumerate() {
                if b {
                    continue;
                }
                let g = &self.single_qubit[rng.random_range(0..self.single_qubit.len())];
                if g != IDLE_CHOICE {
                    ops.push(GateOp { gate: g.clone(), targets: vec![q] });
                }
            }
        }
        ops
    }
}

/// Samples a circuit of exactly `depth` layers.
pub fn sample_random_circuit<R: Rng>(n: usize, depth: usize, sampler: &LayerSampler, rng: &mut R) -> Result<Circuit> {
    sampler.validate(n)?;
    let layers = (0..depth).map(|_| sampler.sample_layer(n, rng)).collect();
    Circuit::new(n, layers)
}

/// All Z-type Paulis of weight `1..=w`, in canonical order.
pub fn enumerate_observables(n: usize, w: usize) -> Result<Vec<PauliString>> {
    if w < 1 || w > n {
        return Err(Error::Design(format!("observable weight must satisfy 1 <= w <= n = {n}, got {w}")));
    }
    let mut out = Vec::new();
    let mut chosen = Vec::new();
    fn rec(n: usize, w: usize, start: usize, chosen: &mut Vec<usize>, out: &mut Vec<PauliString>) {
        if !chosen.is_empty() {
            out.push(PauliString::z_type(n, chosen));
        }
        if chosen.len() == w {
            return;
        }
        for q in start..n {
            chosen.push(q);
            rec(n, w, q + 1, chosen, out);
            chosen.pop();
        }
    }
    rec(n, w, 0, &mut chosen, &mut out);
    out.sort();
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerRecord {
    pub name: String,
    pub params: LayerSampler,
    pub seed: u64,
}

/// A set of circuits, each measured on every Z-type observable of weight up to `w`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentDesign {
    pub n: usize,
    pub w: usize,
    pub depth: usize,
    pub sampler: SamplerRecord,
    pub circuits: Vec<Circuit>,
}

impl ExperimentDesign {
    /// Samples `count` circuits from a ChaCha stream seeded with `seed`.
    pub fn random(n: usize, w: usize, depth: usize, count: usize, sampler: LayerSampler, seed: u64) -> Result<Self> {
        enumerate_observables(n, w)?;
        sampler.validate(n)?;
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let circuits = (0..count).map(|_| sample_random_circuit(n, depth, &sampler, &mut rng)).collect::<Result<_>>()?;
        Ok(Self { n, w, depth, sampler: SamplerRecord { name: LayerSampler::NAME.into(), params: sampler, seed }, circuits })
    }

    pub fn observables(&self) -> Vec<PauliString> {
        enumerate_observables(self.n, self.w).expect("validated weight")
    }

    pub fn num_rows(&self) -> usize {
        self.circuits.len() * self.observables().len()
    }

    /// Keeps the circuits at `idx` (in that order).
    pub fn subset(&self, idx: &[usize]) -> Self {
        Self { circuits: idx.iter().map(|&i| self.circuits[i].clone()).collect(), ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("design serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let raw: ExperimentDesign = serde_json::from_str(s)?;
        enumerate_observables(raw.n, raw.w)?;
        for c in &raw.circuits {
            if c.num_qubits() != raw.n {
                return Err(Error::Dimension { left: raw.n, right: c.num_qubits() });
            }
            if c.depth() > raw.depth {
                return Err(Error::Design(format!("circuit of depth {} exceeds design depth {}", c.depth(), raw.depth)));
            }
        }
        // Re-validate circuits through the checked constructor.
        let circuits =
            raw.circuits.into_iter().map(|c| Circuit::new(c.num_qubits(), c.layers().to_vec())).collect::<Result<_>>()?;
        Ok(Self { circuits, ..raw })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowInfo {
    pub circuit: u32,
    pub observable: u32,
    pub kind: RowKind,
    pub ideal: i8,
}

/// Sparse `K × κ` design matrix in CSR form, rows ordered circuit-major then observable.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    kappa: usize,
    col_is_h: Vec<bool>,
    rows: Vec<RowInfo>,
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

/// Builds `D` for every circuit and observable of `design`.
pub fn build_design(design: &ExperimentDesign, model: &ErrorModel, exec: Execution) -> Result<DesignMatrix> {
    if design.n != model.num_qubits() {
        return Err(Error::Dimension { left: model.num_qubits(), right: design.n });
    }
    let obs = design.observables();
    let per_circuit = exec.map(&design.circuits, |_, c| -> Result<Vec<_>> {
        let ctx = CircuitSensitivity::new(c, model)?;
        obs.iter().map(|q| ctx.row(q)).collect()
    });
    let mut dm = DesignMatrix::empty(model);
    for (ci, rows) in per_circuit.into_iter().enumerate() {
        for (oi, row) in rows?.into_iter().enumerate() {
            dm.push_row(
                RowInfo { circuit: ci as u32, observable: oi as u32, kind: row.kind, ideal: row.ideal },
                &row.entries,
            );
        }
    }
    Ok(dm)
}

impl DesignMatrix {
    pub fn empty(model: &ErrorModel) -> Self {
        Self {
            kappa: model.kappa(),
            col_is_h: (0..model.kappa()).map(|i| model.kind(i) == GeneratorKind::H).collect(),
            rows: vec![],
            row_ptr: vec![0],
            cols: vec![],
            vals: vec![],
        }
    }

    pub fn push_row(&mut self, info: RowInfo, entries: &[(usize, f64)]) {
        for &(c, v) in entries {
            self.cols.push(c as u32);
            self.vals.push(v);
        }
        self.rows.push(info);
        self.row_ptr.push(self.cols.len());
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn col_is_h(&self) -> &[bool] {
        &self.col_is_h
    }

    pub fn h_cols(&self) -> Vec<usize> {
        (0..self.kappa).filter(|&j| self.col_is_h[j]).collect()
    }

    pub fn s_cols(&self) -> Vec<usize> {
        (0..self.kappa).filter(|&j| !self.col_is_h[j]).collect()
    }

    pub fn row_info(&self, i: usize) -> &RowInfo {
        &self.rows[i]
    }

    pub fn row_infos(&self) -> &[RowInfo] {
        &self.rows
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, &v)| (c as usize, v))
    }

    pub fn row_entries(&self, i: usize) -> Vec<(usize, f64)> {
        self.row(i).collect()
    }

    /// `D x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_rows()).map(|i| self.row(i).map(|(c, v)| v * x[c]).sum()).collect()
    }

    pub fn num_h_rows(&self) -> usize {
        self.rows.iter().filter(|r| r.kind == RowKind::H).count()
    }

    pub fn num_circuits(&self) -> usize {
        self.rows.last().map_or(0, |r| r.circuit as usize + 1)
    }

    /// Row ranges per circuit (rows are circuit-major).
    pub fn circuit_rows(&self) -> Vec<std::ops::Range<usize>> {
        let mut out = vec![0..0; self.num_circuits()];
        let mut start = 0;
        for i in 1..=self.rows.len() {
            if i == self.rows.len() || self.rows[i].circuit != self.rows[start].circuit {
                out[self.rows[start].circuit as usize] = start..i;
                start = i;
            }
        }
        out
    }

    /// Entries `(row, col, value)`.
    pub fn triplets(&self) -> Vec<(usize, usize, f64)> {
        (0..self.num_rows()).flat_map(|i| self.row(i).map(move |(c, v)| (i, c, v))).collect()
    }

    const MAGIC: &'static [u8; 8] = b"LGSTDM01";

    /// Binary cache: magic, then little-endian `u64` κ, K and nnz, the H-column bitmap, the
    /// H-row (partition) bitmap, per-row `(u32 circuit, u32 observable, i8 ideal)`, then nnz
    /// triplets `(u32 row, u32 col, f64 value)`.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(Self::MAGIC)?;
        for v in [self.kappa as u64, self.num_rows() as u64, self.nnz() as u64] {
            w.write_all(&v.to_le_bytes())?;
        }
        w.write_all(&pack_bits(&self.col_is_h))?;
        let h_rows: Vec<bool> = self.rows.iter().map(|r| r.kind == RowKind::H).collect();
        w.write_all(&pack_bits(&h_rows))?;
        for r in &self.rows {
            w.write_all(&r.circuit.to_le_bytes())?;
            w.write_all(&r.observable.to_le_bytes())?;
            w.write_all(&r.ideal.to_le_bytes())?;
        }
        for (i, c, v) in self.triplets() {
            w.write_all(&(i as u32).to_le_bytes())?;
            w.write_all(&(c as u32).to_le_bytes())?;
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 8];
        r.read_exact(&mut magic)?;
        if &magic != Self::MAGIC {
            return Err(Error::Format("not a design-matrix file".into()));
        }
        let mut u64s = [0u64; 3];
        for v in &mut u64s {
            let mut b = [0u8; 8];
            r.read_exact(&mut b)?;
            *v = u64::from_le_bytes(b);
        }
        let [kappa, k, nnz] = u64s.map(|v| v as usize);
        let col_is_h = read_bits(&mut r, kappa)?;
        let h_rows = read_bits(&mut r, k)?;
        let mut rows = Vec::with_capacity(k);
        for &is_h in &h_rows {
            let mut b = [0u8; 9];
            r.read_exact(&mut b)?;
            rows.push(RowInfo {
                circuit: u32::from_le_bytes(b[0..4].try_into().expect("4 bytes")),
                observable: u32::from_le_bytes(b[4..8].try_into().expect("4 bytes")),
                kind: if is_h { RowKind::H } else { RowKind::S },
                ideal: b[8] as i8,
            });
        }
        let mut row_ptr = vec![0usize; k + 1];
        let mut cols = Vec::with_capacity(nnz);
        let mut vals = Vec::with_capacity(nnz);
        let mut last_row = 0usize;
        for _ in 0..nnz {
            let mut b = [0u8; 16];
            r.read_exact(&mut b)?;
            let i = u32::from_le_bytes(b[0..4].try_into().expect("4 bytes")) as usize;
            let c = u32::from_le_bytes(b[4..8].try_into().expect("4 bytes"));
            if i >= k || (c as usize) >= kappa || i < last_row {
                return Err(Error::Format("triplets out of range or unsorted".into()));
            }
            last_row = i;
            row_ptr[i + 1] += 1;
            cols.push(c);
            vals.push(f64::from_le_bytes(b[8..16].try_into().expect("8 bytes")));
        }
        for i in 0..k {
            row_ptr[i + 1] += row_ptr[i];
        }
        Ok(Self { kappa, col_is_h, rows, row_ptr, cols, vals })
    }
}

fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

fn read_bits<R: Read>(r: &mut R, len: usize) -> Result<Vec<bool>> {
    let mut buf = vec![0u8; len.div_ceil(8)];
    r.read_exact(&mut buf)?;
    Ok((0..len).map(|i| buf[i / 8] >> (i % 8) & 1 == 1).collect())
}

/// Incrementally maintained QR factors of `D_H` and `D_S`, for rank questions.
#[derive(Debug, Clone)]
pub struct RankTracker {
    h_cols: Vec<usize>,
    s_cols: Vec<usize>,
    col_pos: Vec<usize>,
    qr_h: GivensQr,
    qr_s: GivensQr,
}

impl RankTracker {
    pub fn new(col_is_h: &[bool]) -> Self {
        let h_cols: Vec<usize> = (0..col_is_h.len()).filter(|&j| col_is_h[j]).collect();
        let s_cols: Vec<usize> = (0..col_is_h.len()).filter(|&j| !col_is_h[j]).collect();
        let mut col_pos = vec![0; col_is_h.len()];
        for (p, &j) in h_cols.iter().enumerate() {
            col_pos[j] = p;
        }
        for (p, &j) in s_cols.iter().enumerate() {
            col_pos[j] = p;
        }
        Self { qr_h: GivensQr::new(h_cols.len(), 0), qr_s: GivensQr::new(s_cols.len(), 0), h_cols, s_cols, col_pos }
    }

    pub fn add_rows(&mut self, dm: &DesignMatrix, rows: std::ops::Range<usize>) {
        for i in rows {
            let local: Vec<(usize, f64)> = dm.row(i).map(|(c, v)| (self.col_pos[c], v)).collect();
            match dm.row_info(i).kind {
                RowKind::H => self.qr_h.add_row(&local, &[]),
                RowKind::S => self.qr_s.add_row(&local, &[]),
            }
        }
    }

    pub fn report(&self) -> RankReport {
        let rows = self.qr_h.rows() + self.qr_s.rows();
        let kappa = self.h_cols.len() + self.s_cols.len();
        let sv_h = sorted_svd(&self.qr_h.r()).s;
        let sv_s = sorted_svd(&self.qr_s.r()).s;
        RankReport::from_singular_values(rows, self.qr_h.rows(), self.qr_s.rows(), kappa, &sv_h, &sv_s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRank {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    /// `σ_max / σ_min`; `None` when the block is rank deficient or empty.
    pub condition: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub kappa: usize,
    pub h: BlockRank,
    pub s: BlockRank,
    pub joint: BlockRank,
    pub rank_ratio: f64,
    pub threshold_rule: String,
}

impl RankReport {
    fn from_singular_values(rows: usize, rows_h: usize, rows_s: usize, kappa: usize, sv_h: &[f64], sv_s: &[f64]) -> Self {
        let block = |rows: usize, sv: &[f64]| {
            let cols = sv.len();
            let smax = sv.first().copied().unwrap_or(0.0);
            let rank = if smax > 0.0 { numerical_rank(sv, rank_threshold(rows, cols, smax)) } else { 0 };
            let condition = (rank == cols && cols > 0).then(|| smax / sv[cols - 1]);
            BlockRank { rows, cols, rank, condition }
        };
        let h = block(rows_h, sv_h);
        let s = block(rows_s, sv_s);
        // D is block diagonal after permuting rows and columns, so its spectrum is the union.
        let mut all: Vec<f64> = sv_h.iter().chain(sv_s).copied().collect();
        all.sort_by(|a, b| b.total_cmp(a));
        let joint = block(rows, &all);
        let rank_ratio = if kappa == 0 { 1.0 } else { joint.rank as f64 / kappa as f64 };
        Self { kappa, h, s, joint, rank_ratio, threshold_rule: "max(K, kappa) * sigma_max * 2^-40".into() }
    }

    pub fn is_full_rank(&self) -> bool {
        self.joint.rank == self.kappa
    }
}

/// Numerical rank and conditioning of `D_H`, `D_S` and `D`.
pub fn rank_report(dm: &DesignMatrix) -> RankReport {
    let mut t = RankTracker::new(dm.col_is_h());
    t.add_rows(dm, 0..dm.num_rows());
    t.report()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthStep {
    pub circuits: usize,
    pub rank_h: usize,
    pub rank_s: usize,
    pub rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrowthReport {
    pub full_rank: bool,
    /// First circuit count at which each block reached full column rank.
    pub circuits_for_h: Option<usize>,
    pub circuits_for_s: Option<usize>,
    pub history: Vec<GrowthStep>,
    pub final_report: RankReport,
}

/// Adds circuits from `sampler` in batches of `batch` until `D` has full column rank or
/// `max_circuits` is reached. The returned design has the circuits sampled so far.
pub fn grow_until_full_rank(
    model: &ErrorModel,
    w: usize,
    depth: usize,
    sampler: &LayerSampler,
    seed: u64,
    batch: usize,
    max_circuits: usize,
) -> Result<(ExperimentDesign, GrowthReport)> {
    if batch == 0 {
        return Err(Error::Design("batch must be at least 1".into()));
    }
    let n = model.num_qubits();
    sampler.validate(n)?;
    let obs = enumerate_observables(n, w)?;
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let dm0 = DesignMatrix::empty(model);
    let mut tracker = RankTracker::new(dm0.col_is_h());
    let (kh, ks) = (dm0.h_cols().len(), dm0.s_cols().len());
    let mut circuits = Vec::new();
    let mut history = Vec::new();
    let (mut at_h, mut at_s) = (if kh == 0 { Some(0) } else { None }, if ks == 0 { Some(0) } else { None });
    let mut report = tracker.report();
    while circuits.len() < max_circuits && !report.is_full_rank() {
        let take = batch.min(max_circuits - circuits.len());
        let mut dm = DesignMatrix::empty(model);
        for _ in 0..take {
            let c = sample_random_circuit(n, depth, sampler, &mut rng)?;
            let ctx = CircuitSensitivity::new(&c, model)?;
            for (oi, q) in obs.iter().enumerate() {
                let row = ctx.row(q)?;
                dm.push_row(RowInfo { circuit: 0, observable: oi as u32, kind: row.kind, ideal: row.ideal }, &row.entries);
            }
            circuits.push(c);
        }
        tracker.add_rows(&dm, 0..dm.num_rows());
        report = tracker.report();
        if at_h.is_none() && report.h.rank == kh {
            at_h = Some(circuits.len());
        }
        if at_s.is_none() && report.s.rank == ks {
            at_s = Some(circuits.len());
        }
        history.push(GrowthStep {
            circuits: circuits.len(),
            rank_h: report.h.rank,
            rank_s: report.s.rank,
            rank: report.joint.rank,
        });
    }
    let design = ExperimentDesign {
        n,
        w,
        depth,
        sampler: SamplerRecord { name: LayerSampler::NAME.into(), params: sampler.clone(), seed },
        circuits,
    };
    let full_rank = report.is_full_rank();
    Ok((design, GrowthReport { full_rank, circuits_for_h: at_h, circuits_for_s: at_s, history, final_report: report }))
}
