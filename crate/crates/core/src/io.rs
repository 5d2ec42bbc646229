//! File formats: dataset CSV plus JSON sidecar, and the estimate JSON.

use std::collections::HashMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::design::{DesignMatrix, ExperimentDesign, RankReport};
use crate::error::{Error, Result};
use crate::model::ErrorModel;
use crate::simulator::{DatasetMeta, SimDataset, SimRow};
use crate::solver::{Estimate, HamiltonianMeta, StochasticMeta};

/// Comment line that carries the manifest hash in CSV outputs.
pub const MANIFEST_PREFIX: &str = "# manifest ";

/// `data.csv` → `data.meta.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("meta.json")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSidecar {
    #[serde(flatten)]
    pub meta: DatasetMeta,
    pub rows: usize,
    pub manifest: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    circuit_id: String,
    observable: String,
    ideal: i8,
    value: f64,
    shots: String,
}

fn shots_str(s: Option<u64>) -> String {
    s.map_or_else(|| "inf".into(), |n| n.to_string())
}

fn parse_shots(s: &str) -> Result<Option<u64>> {
    match s.trim() {
        "inf" | "" => Ok(None),
        t => t.parse().map(Some).map_err(|_| Error::Format(format!("bad shot count {t:?}"))),
    }
}

/// Writes `rows` as CSV after a manifest comment line.
pub fn write_dataset_rows<W: Write>(mut w: W, rows: &[SimRow], manifest: &str) -> Result<()> {
    writeln!(w, "{MANIFEST_PREFIX}{manifest}")?;
    let mut csv = csv::Writer::from_writer(w);
    for r in rows {
        csv.serialize(CsvRow {
            circuit_id: r.circuit_id.clone(),
            observable: r.observable.to_label(),
            ideal: r.ideal,
            // Shortest round-trip representation, so a reread is bit-identical.
            value: r.value,
            shots: shots_str(r.shots),
        })?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_dataset(path: &Path, ds: &SimDataset, manifest: &str) -> Result<()> {
    write_dataset_rows(fs::File::create(path)?, &ds.rows, manifest)?;
    let side = DatasetSidecar { meta: ds.meta.clone(), rows: ds.rows.len(), manifest: manifest.into() };
    fs::write(sidecar_path(path), serde_json::to_string_pretty(&side)? + "\n")?;
    Ok(())
}

/// Reads dataset rows; `#` lines are ignored.
pub fn read_dataset_rows(path: &Path) -> Result<Vec<SimRow>> {
    let mut rdr = csv::ReaderBuilder::new().comment(Some(b'#')).from_path(path)?;
    let mut out = Vec::new();
    for rec in rdr.deserialize() {
        let r: CsvRow = rec?;
        let observable = r.observable.parse()?;
        out.push(SimRow { circuit_id: r.circuit_id, observable, ideal: r.ideal, value: r.value, shots: parse_shots(&r.shots)? });
    }
    Ok(out)
}

pub fn read_sidecar(csv: &Path) -> Result<Option<DatasetSidecar>> {
    let p = sidecar_path(csv);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}

/// Dataset values mapped onto the rows of a design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct AlignedData {
    /// `value - ideal` per design row; NaN where the dataset has no entry.
    pub delta: Vec<f64>,
    /// Per-row shot-noise variance (0 for infinite shots, NaN where missing).
    pub variance: Vec<f64>,
    pub missing: usize,
    /// Dataset rows that match no design row.
    pub unmatched: usize,
}

/// Matches rows by `(circuit_id, observable)`. Ideal values come from the design matrix.
pub fn align_dataset(design: &ExperimentDesign, dm: &DesignMatrix, rows: &[SimRow]) -> AlignedData {
    let obs = design.observables();
    let ids: Vec<String> = design.circuits.iter().map(|c| c.id()).collect();
    let mut lookup: HashMap<(&str, String), &SimRow> = HashMap::new();
    for r in rows {
        lookup.insert((r.circuit_id.as_str(), r.observable.to_label()), r);
    }
    let mut delta = Vec::with_capacity(dm.num_rows());
    let mut variance = Vec::with_capacity(dm.num_rows());
    let mut missing = 0;
    for info in dm.row_infos() {
        let key = (ids[info.circuit as usize].as_str(), obs[info.observable as usize].to_label());
        match lookup.get(&key) {
            Some(r) => {
                delta.push(r.value - f64::from(info.ideal));
                variance.push(crate::solver::shot_variance(r.value, r.shots));
            }
            None => {
                missing += 1;
                delta.push(f64::NAN);
                variance.push(f64::NAN);
            }
        }
    }
    let matched = dm.num_rows() - missing;
    AlignedData { delta, variance, missing, unmatched: rows.len().saturating_sub(matched) }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateEntry {
    pub gate: String,
    pub kind: String,
    pub pauli: String,
    pub value: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Residuals {
    pub hamiltonian: f64,
    pub stochastic: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverMeta {
    pub hamiltonian: HamiltonianMeta,
    pub stochastic: StochasticMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub uncertainty: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rank: Option<RankReport>,
    #[serde(default)]
    pub dropped_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateFile {
    pub model_ref: String,
    pub manifest: String,
    pub rates: Vec<RateEntry>,
    pub residuals: Residuals,
    pub solver_meta: SolverMeta,
}

impl EstimateFile {
    pub fn new(model: &ErrorModel, est: &Estimate, model_ref: &str, manifest: &str) -> Self {
        let rates = est
            .params
            .iter()
            .enumerate()
            .map(|(i, &p)| {
                let k = model.key(p);
                RateEntry {
                    gate: k.gate.to_string(),
                    kind: k.kind.to_string(),
                    pauli: k.label.to_label(),
                    value: est.rates[i],
                    stderr: est.stderr.as_ref().map(|s| s[i]),
                }
            })
            .collect();
        Self {
            model_ref: model_ref.into(),
            manifest: manifest.into(),
            rates,
            residuals: Residuals { hamiltonian: est.hamiltonian.residual, stochastic: est.stochastic.residual },
            solver_meta: SolverMeta {
                hamiltonian: est.hamiltonian.clone(),
                stochastic: est.stochastic.clone(),
                uncertainty: None,
                rank: None,
                dropped_rows: 0,
            },
        }
    }
}
