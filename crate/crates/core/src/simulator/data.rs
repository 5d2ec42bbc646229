//! Datasets aligned with an experiment design, with optional shot noise.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Binomial, Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dense::{simulate_dense, DenseOptions, EXPM_TOLERANCE};
use super::taylor::{TaylorCircuit, TaylorStrategy};
use crate::design::ExperimentDesign;
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::model::{ErrorModel, RateVector};
use crate::pauli::{PauliString, StabilizerState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "backend", rename_all = "snake_case")]
pub enum Backend {
    DenseExact,
    Taylor { k: usize },
}

impl Backend {
    /// Dense up to five qubits, third-order Taylor beyond.
    pub fn default_for(n: usize) -> Self {
        if n <= super::dense::DEFAULT_MAX_QUBITS {
            Backend::DenseExact
        } else {
            Backend::Taylor { k: 3 }
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Backend::DenseExact => "dense_exact",
            Backend::Taylor { .. } => "taylor",
        }
    }

    pub fn order(&self) -> Option<usize> {
        match self {
            Backend::DenseExact => None,
            Backend::Taylor { k } => Some(*k),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatorConfig {
    pub backend: Backend,
    /// `None` means infinitely many shots.
    pub shots: Option<u64>,
    pub seed: u64,
    pub max_dense_qubits: usize,
}

impl SimulatorConfig {
    pub fn new(backend: Backend, shots: Option<u64>, seed: u64) -> Self {
        Self { backend, shots, seed, max_dense_qubits: super::dense::DEFAULT_MAX_QUBITS }
    }

    pub fn validate(&self, n: usize) -> Result<()> {
        match self.backend {
            Backend::DenseExact if n > self.max_dense_qubits => {
                return Err(Error::Simulator(format!(
                    "dense backend limited to {} qubits, design has {n}",
                    self.max_dense_qubits
                )))
            }
            Backend::Taylor { k: 0 } => return Err(Error::Simulator("Taylor order must be at least 1".into())),
            _ => {}
        }
        if self.shots == Some(0) {
            return Err(Error::Simulator("shot count must be positive".into()));
        }
        Ok(())
    }
}

/// Noise-free expectations for every circuit of a design, circuit-major like the design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactData {
    pub backend: Backend,
    pub ideal: Vec<Vec<i8>>,
    pub values: Vec<Vec<f64>>,
    /// Z-basis outcome distributions, dense backend only.
    pub distributions: Option<Vec<Vec<f64>>>,
}

impl ExactData {
    pub fn num_rows(&self) -> usize {
        self.values.iter().map(Vec::len).sum()
    }

    pub fn flat_values(&self) -> Vec<f64> {
        self.values.iter().flatten().copied().collect()
    }

    pub fn flat_ideal(&self) -> Vec<i8> {
        self.ideal.iter().flatten().copied().collect()
    }
}

fn ideal_values(circuit: &crate::circuit::Circuit, obs: &[PauliString]) -> Result<Vec<i8>> {
    let psi = StabilizerState::from_clifford(&circuit.tableau());
    obs.iter().map(|q| Ok(psi.expectation(q)? as i8)).collect()
}

/// Evaluates every (circuit, observable) pair of `design` with the given backend.
pub fn simulate_exact(
    design: &ExperimentDesign,
    model: &ErrorModel,
    rates: &RateVector,
    config: &SimulatorConfig,
    exec: Execution,
) -> Result<ExactData> {
    config.validate(design.n)?;
    if design.n != model.num_qubits() {
        return Err(Error::Dimension { left: model.num_qubits(), right: design.n });
    }
    let obs = design.observables();
    let per = exec.map(&design.circuits, |_, c| -> Result<(Vec<i8>, Vec<f64>, Option<Vec<f64>>)> {
        let ideal = ideal_values(c, &obs)?;
        match config.backend {
            Backend::DenseExact => {
                let opts = DenseOptions { max_qubits: config.max_dense_qubits, ..Default::default() };
                let out = simulate_dense(c, model, rates, &obs, opts)?;
                Ok((ideal, out.expectations, Some(out.z_distribution)))
            }
            Backend::Taylor { k } => {
                let tc = TaylorCircuit::new(c, model, rates, k)?;
                let v = obs.iter().map(|q| tc.expectation(q, TaylorStrategy::Auto)).collect::<Result<_>>()?;
                Ok((ideal, v, None))
            }
        }
    });
    let mut data = ExactData { backend: config.backend, ideal: vec![], values: vec![], distributions: None };
    let mut dists = Vec::new();
    for r in per {
        let (i, v, d) = r?;
        data.ideal.push(i);
        data.values.push(v);
        if let Some(d) = d {
            dists.push(d);
        }
    }
    if matches!(config.backend, Backend::DenseExact) {
        data.distributions = Some(dists);
    }
    Ok(data)
}

/// Draws `shots` outcomes from `p` and returns the per-outcome counts.
fn multinomial<R: Rng>(p: &[f64], shots: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0; p.len()];
    let mut left = shots;
    let mut mass: f64 = p.iter().sum();
    for (i, &pi) in p.iter().enumerate() {
        if left == 0 {
            break;
        }
        if i + 1 == p.len() || mass <= pi {
            counts[i] = left;
            break;
        }
        let q = (pi / mass).clamp(0.0, 1.0);
        let c = Binomial::new(left, q).expect("valid binomial").sample(rng);
        counts[i] = c;
        left -= c;
        mass -= pi;
    }
    counts
}

/// Empirical `⟨Z_S⟩` from outcome counts; bit `q` of an outcome is qubit `q`.
fn z_estimate(counts: &[u64], shots: u64, q: &PauliString) -> f64 {
    let mask = q.z_words()[0] as usize;
    let mut acc: i64 = 0;
    for (b, &c) in counts.iter().enumerate() {
        if (b & mask).count_ones().is_multiple_of(2) {
            acc += c as i64;
        } else {
            acc -= c as i64;
        }
    }
    acc as f64 / shots as f64
}

/// Finite-shot estimates of every row. The dense backend samples bitstrings, so observables of
/// one circuit stay correlated; the Taylor backend adds independent Gaussian noise with
/// variance `(1 - v²)/N`, clipped to `[-1, 1]`. Circuit `c` draws from its own stream
/// `derive_seed(seed, c)`.
pub fn add_shot_noise(
    exact: &ExactData,
    observables: &[PauliString],
    shots: u64,
    seed: u64,
    exec: Execution,
) -> Result<Vec<Vec<f64>>> {
    if shots == 0 {
        return Err(Error::Simulator("shot count must be positive".into()));
    }
    let per = exec.map(&exact.values, |ci, vals| -> Result<Vec<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, ci as u64));
        match &exact.distributions {
            Some(d) => {
                let counts = multinomial(&d[ci], shots, &mut rng);
                Ok(observables.iter().map(|q| z_estimate(&counts, shots, q)).collect())
            }
            None => Ok(vals
                .iter()
                .map(|&v| {
                    let v = v.clamp(-1.0, 1.0);
                    let sd = ((1.0 - v * v).max(0.0) / shots as f64).sqrt();
                    if sd == 0.0 {
                        return v;
                    }
                    let e: f64 = Normal::new(0.0, sd).expect("finite sd").sample(&mut rng);
                    (v + e).clamp(-1.0, 1.0)
                })
                .collect()),
        }
    });
    per.into_iter().collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRow {
    pub circuit_id: String,
    pub observable: PauliString,
    pub ideal: i8,
    pub value: f64,
    /// `None` for the infinite-shot limit.
    pub shots: Option<u64>,
}

/// Sidecar metadata of a dataset file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub backend: String,
    pub k: Option<usize>,
    pub seed: u64,
    pub model_ref: String,
    pub rate_scale_c: f64,
    pub shots: Option<u64>,
    pub expm_tolerance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimDataset {
    pub rows: Vec<SimRow>,
    pub meta: DatasetMeta,
}

impl SimDataset {
    /// `value - ideal` per row, the right-hand side of the linear fit.
    pub fn deltas(&self) -> Vec<f64> {
        self.rows.iter().map(|r| r.value - f64::from(r.ideal)).collect()
    }
}

/// Simulates a design end to end: exact values, then shot noise if `config.shots` is finite.
pub fn simulate_design(
    design: &ExperimentDesign,
    model: &ErrorModel,
    rates: &RateVector,
    config: &SimulatorConfig,
    model_ref: &str,
    rate_scale_c: f64,
    exec: Execution,
) -> Result<SimDataset> {
    let exact = simulate_exact(design, model, rates, config, exec)?;
    let obs = design.observables();
    let values = match config.shots {
        None => exact.values.iter().map(|v| v.iter().map(|x| x.clamp(-1.0, 1.0)).collect()).collect(),
        Some(n) => add_shot_noise(&exact, &obs, n, config.seed, exec)?,
    };
    let mut rows = Vec::with_capacity(exact.num_rows());
    for (ci, c) in design.circuits.iter().enumerate() {
        let id = c.id();
        for (oi, q) in obs.iter().enumerate() {
            rows.push(SimRow {
                circuit_id: id.clone(),
                observable: q.clone(),
                ideal: exact.ideal[ci][oi],
                value: values[ci][oi],
                shots: config.shots,
            });
        }
    }
    let meta = DatasetMeta {
        backend: config.backend.name().into(),
        k: config.backend.order(),
        seed: config.seed,
        model_ref: model_ref.into(),
        rate_scale_c,
        shots: config.shots,
        expm_tolerance: EXPM_TOLERANCE,
    };
    Ok(SimDataset { rows, meta })
}
