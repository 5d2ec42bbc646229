//! The numerical studies: accuracy on the ten-qubit model, scaling with circuits and shots,
//! reduced ansätze, breakdown as the error scale grows, and rank versus model size.
//!
//! Every run is a pure function of its config; all randomness comes from seeds in the config.

use std::collections::HashSet;

use rand::seq::index::sample as sample_indices;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::design::{build_design, grow_until_full_rank, rank_report, DesignMatrix, ExperimentDesign, LayerSampler, RankReport};
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::model::{
    build_paper_model, paper_model_specs, ring_edges, sample_rates, CouplingRule, ElementaryGenerator, ErrorModel,
    GateErrorSpec, GateId, GeneratorKind, RateVector, PAPER_H_RANGE, PAPER_S_RANGE,
};
use crate::pauli::{Pauli, PauliString};
use crate::simulator::{add_shot_noise, simulate_exact, Backend, ExactData, SimulatorConfig};
use crate::solver::{quantile_sorted, CompressedDesign, Estimate};

// ---------------------------------------------------------------------------------------------
// Statistics

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub count: usize,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

impl BoxStats {
    pub fn new(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let mean = if v.is_empty() { f64::NAN } else { v.iter().sum::<f64>() / v.len() as f64 };
        Self {
            count: v.len(),
            min: v.first().copied().unwrap_or(f64::NAN),
            q1: quantile_sorted(&v, 0.25),
            median: quantile_sorted(&v, 0.5),
            q3: quantile_sorted(&v, 0.75),
            max: v.last().copied().unwrap_or(f64::NAN),
            mean,
        }
    }
}

/// Histogram over log-spaced bins; values at or below `edges[0]` land in the first bin.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn log_spaced(values: &[f64], lo: f64, hi: f64, bins: usize) -> Self {
        let (llo, lhi) = (lo.log10(), hi.log10());
        let edges: Vec<f64> = (0..=bins).map(|i| 10f64.powf(llo + (lhi - llo) * i as f64 / bins as f64)).collect();
        let mut counts = vec![0; bins];
        for &v in values {
            let b = if v <= lo { 0 } else { (((v.log10() - llo) / (lhi - llo)) * bins as f64).floor() as usize };
            counts[b.min(bins - 1)] += 1;
        }
        Self { edges, counts }
    }
}

/// Fraction of `values` strictly below `t`.
pub fn fraction_below(values: &[f64], t: f64) -> f64 {
    if values.is_empty() {
        return f64::NAN;
    }
    values.iter().filter(|&&v| v < t).count() as f64 / values.len() as f64
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let cov: f64 = ra.iter().zip(&rb).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = ra.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = rb.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

fn abs_errors(est: &[f64], truth: &[f64]) -> Vec<f64> {
    est.iter().zip(truth).map(|(e, t)| (e - t).abs()).collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

// ---------------------------------------------------------------------------------------------
// Shared ten-qubit dataset

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LargeConfig {
    pub n: usize,
    pub depth: usize,
    pub circuits: usize,
    pub w: usize,
    pub model_seed: u64,
    pub design_seed: u64,
    /// Taylor order of the data-generating simulator.
    pub k: usize,
    pub coupling: CouplingRule,
}

impl Default for LargeConfig {
    fn default() -> Self {
        Self { n: 10, depth: 15, circuits: 1000, w: 2, model_seed: 1, design_seed: 2, k: 3, coupling: CouplingRule::default() }
    }
}

/// Parameter classes by kind and label weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ParamClass {
    H1,
    H2,
    S1,
    S2,
}

impl ParamClass {
    pub const ALL: [ParamClass; 4] = [ParamClass::H1, ParamClass::H2, ParamClass::S1, ParamClass::S2];

    pub fn of(model: &ErrorModel, p: usize) -> Self {
        let k = model.key(p);
        let heavy = k.label.weight() >= 2;
        match (k.kind, heavy) {
            (GeneratorKind::H, false) => ParamClass::H1,
            (GeneratorKind::H, true) => ParamClass::H2,
            (_, false) => ParamClass::S1,
            (_, true) => ParamClass::S2,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ParamClass::H1 => "H weight 1",
            ParamClass::H2 => "H weight 2",
            ParamClass::S1 => "S weight 1",
            ParamClass::S2 => "S weight 2",
        }
    }
}

/// The model, its true rates, the circuits, `D`, and the noise-free simulated data.
pub struct LargeDataset {
    pub config: LargeConfig,
    pub model: ErrorModel,
    pub truth: RateVector,
    pub design: ExperimentDesign,
    pub dm: DesignMatrix,
    pub exact: ExactData,
}

impl LargeDataset {
    pub fn prepare(config: &LargeConfig, exec: Execution) -> Result<Self> {
        let (model, truth) = build_paper_model(config.n, None, config.model_seed, 1.0, config.coupling)?;
        let design = ExperimentDesign::random(
            config.n,
            config.w,
            config.depth,
            config.circuits,
            LayerSampler::ring(config.n),
            config.design_seed,
        )?;
        let dm = build_design(&design, &model, exec)?;
        let sim = SimulatorConfig::new(Backend::Taylor { k: config.k }, None, 0);
        let exact = simulate_exact(&design, &model, &truth, &sim, exec)?;
        Ok(Self { config: config.clone(), model, truth, design, dm, exact })
    }

    /// `Δ⟨Q⟩` per design row, exact (`shots = None`) or with shot noise drawn from `seed`.
    pub fn deltas(&self, shots: Option<u64>, seed: u64, exec: Execution) -> Result<Vec<f64>> {
        let values = match shots {
            None => self.exact.flat_values(),
            Some(n) => add_shot_noise(&self.exact, &self.design.observables(), n, seed, exec)?.concat(),
        };
        Ok(values.iter().zip(self.exact.flat_ideal()).map(|(v, i)| v.clamp(-1.0, 1.0) - f64::from(i)).collect())
    }

    pub fn classes(&self) -> Vec<ParamClass> {
        (0..self.model.kappa()).map(|p| ParamClass::of(&self.model, p)).collect()
    }
}

/// Summary of one block of parameters for one fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorSummary {
    pub count: usize,
    pub mean_true_abs: f64,
    pub median_abs_err: f64,
    pub mean_abs_err: f64,
    pub q90_abs_err: f64,
    pub max_abs_err: f64,
}

impl ErrorSummary {
    fn new(truth: &[f64], err: &[f64]) -> Self {
        let mut s = err.to_vec();
        s.sort_by(f64::total_cmp);
        Self {
            count: err.len(),
            mean_true_abs: mean(&truth.iter().map(|t| t.abs()).collect::<Vec<_>>()),
            median_abs_err: quantile_sorted(&s, 0.5),
            mean_abs_err: mean(err),
            q90_abs_err: quantile_sorted(&s, 0.9),
            max_abs_err: s.last().copied().unwrap_or(f64::NAN),
        }
    }
}

// ---------------------------------------------------------------------------------------------
// Fig. 2: accuracy with the correct ansatz

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Config {
    /// `None` is the infinite-shot limit.
    pub shots: Vec<Option<u64>>,
    pub noise_seed: u64,
    pub bins: usize,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self { shots: vec![None, Some(1000)], noise_seed: 3, bins: 30 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Fit {
    pub shots: Option<u64>,
    pub estimate: Vec<f64>,
    pub h: ErrorSummary,
    pub s: ErrorSummary,
    pub h_histogram: Histogram,
    pub s_histogram: Histogram,
    pub h_rank: usize,
    pub nnls_kkt: f64,
    pub nnls_converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Report {
    pub kappa: usize,
    pub rows: usize,
    pub rank: RankReport,
    pub labels: Vec<String>,
    pub is_h: Vec<bool>,
    pub truth: Vec<f64>,
    pub fits: Vec<Fig2Fit>,
}

pub fn run_fig2(data: &LargeDataset, cfg: &Fig2Config, exec: Execution) -> Result<Fig2Report> {
    let ys: Vec<Vec<f64>> = cfg
        .shots
        .iter()
        .enumerate()
        .map(|(i, &s)| data.deltas(s, derive_seed(cfg.noise_seed, i as u64), exec))
        .collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let cd = CompressedDesign::all_circuits(&data.dm, &refs)?;
    let all: Vec<usize> = (0..data.model.kappa()).collect();
    let rhs: Vec<usize> = (0..ys.len()).collect();
    let ests = cd.solve_params_many(&rhs, &all);
    let truth = data.truth.values();
    let is_h: Vec<bool> = (0..truth.len()).map(|p| data.truth.is_h(p)).collect();
    let pick = |v: &[f64], h: bool| -> Vec<f64> { v.iter().zip(&is_h).filter(|(_, &x)| x == h).map(|(a, _)| *a).collect() };
    let fits = cfg
        .shots
        .iter()
        .zip(ests)
        .map(|(&shots, est)| {
            let err = abs_errors(&est.rates, truth);
            let (eh, es) = (pick(&err, true), pick(&err, false));
            Fig2Fit {
                shots,
                h: ErrorSummary::new(&pick(truth, true), &eh),
                s: ErrorSummary::new(&pick(truth, false), &es),
                h_histogram: Histogram::log_spaced(&eh, 1e-8, 1e-1, cfg.bins),
                s_histogram: Histogram::log_spaced(&es, 1e-8, 1e-1, cfg.bins),
                h_rank: est.hamiltonian.rank,
                nnls_kkt: est.stochastic.kkt_residual,
                nnls_converged: est.stochastic.converged,
                estimate: est.rates,
            }
        })
        .collect();
    Ok(Fig2Report {
        kappa: data.model.kappa(),
        rows: data.dm.num_rows(),
        rank: rank_report(&data.dm),
        labels: data.model.keys().iter().map(|k| k.to_string()).collect(),
        is_h,
        truth: truth.to_vec(),
        fits,
    })
}

// ---------------------------------------------------------------------------------------------
// Fig. 3: circuits and shots

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Config {
    pub counts: Vec<usize>,
    pub subsets: usize,
    pub shots: Vec<Option<u64>>,
    pub noise_seed: u64,
    pub subset_seed: u64,
    /// Resamples of the subset means used for the error bands.
    pub bootstrap: usize,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            counts: (1..=10).map(|i| i * 100).collect(),
            subsets: 500,
            shots: vec![Some(100), Some(1000), Some(10000), None],
            noise_seed: 4,
            subset_seed: 5,
            bootstrap: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Series {
    pub class: ParamClass,
    pub shots: Option<u64>,
    /// Mean over subsets of the class-averaged absolute error, per circuit count.
    pub mean_abs_err: Vec<f64>,
    /// Bootstrap standard error of that mean.
    pub band: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Report {
    pub counts: Vec<usize>,
    pub observables_per_circuit: usize,
    pub subsets: usize,
    pub reference: Vec<(ParamClass, f64)>,
    pub series: Vec<Fig3Series>,
}

impl Fig3Report {
    pub fn series(&self, class: ParamClass, shots: Option<u64>) -> Option<&Fig3Series> {
        self.series.iter().find(|s| s.class == class && s.shots == shots)
    }
}

pub fn run_fig3(data: &LargeDataset, cfg: &Fig3Config, exec: Execution) -> Result<Fig3Report> {
    let total = data.design.circuits.len();
    let mut counts = cfg.counts.clone();
    counts.sort_unstable();
    if counts.is_empty() || counts[0] == 0 || *counts.last().expect("nonempty") > total {
        return Err(Error::Design(format!("circuit counts must lie in 1..={total}")));
    }
    if cfg.subsets == 0 {
        return Err(Error::Design("need at least one subset".into()));
    }
    let ys: Vec<Vec<f64>> = cfg
        .shots
        .iter()
        .enumerate()
        .map(|(i, &s)| data.deltas(s, derive_seed(cfg.noise_seed, i as u64), exec))
        .collect::<Result<_>>()?;
    let refs: Vec<&[f64]> = ys.iter().map(Vec::as_slice).collect();
    let classes = data.classes();
    let truth = data.truth.values();
    let all: Vec<usize> = (0..truth.len()).collect();
    let rhs: Vec<usize> = (0..ys.len()).collect();

    // vals[subset][count][rhs][class]
    let vals = exec.map_range(cfg.subsets, |s| -> Result<Vec<Vec<[f64; 4]>>> {
        let mut perm: Vec<usize> = (0..total).collect();
        perm.shuffle(&mut ChaCha20Rng::seed_from_u64(derive_seed(cfg.subset_seed, s as u64)));
        let mut cd = CompressedDesign::empty(&data.dm, refs.len());
        let mut done = 0;
        let mut out = Vec::with_capacity(counts.len());
        for &c in &counts {
            cd.add_circuits(&data.dm, &perm[done..c], &refs)?;
            done = c;
            let per_rhs = cd
                .solve_params_many(&rhs, &all)
                .into_iter()
                .map(|est| {
                    let mut sum = [0.0; 4];
                    let mut cnt = [0usize; 4];
                    for (p, (&e, &t)) in est.rates.iter().zip(truth).enumerate() {
                        let k = classes[p] as usize;
                        sum[k] += (e - t).abs();
                        cnt[k] += 1;
                    }
                    let mut m = [f64::NAN; 4];
                    for k in 0..4 {
                        if cnt[k] > 0 {
                            m[k] = sum[k] / cnt[k] as f64;
                        }
                    }
                    m
                })
                .collect();
            out.push(per_rhs);
        }
        Ok(out)
    });
    let vals: Vec<Vec<Vec<[f64; 4]>>> = vals.into_iter().collect::<Result<_>>()?;

    let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(cfg.subset_seed, u64::MAX));
    let resamples: Vec<Vec<usize>> =
        (0..cfg.bootstrap).map(|_| (0..cfg.subsets).map(|_| rng.random_range(0..cfg.subsets)).collect()).collect();
    let mut series = Vec::new();
    for class in ParamClass::ALL {
        let k = class as usize;
        if !classes.contains(&class) {
            continue;
        }
        for (r, &shots) in cfg.shots.iter().enumerate() {
            let mut means = Vec::with_capacity(counts.len());
            let mut band = Vec::with_capacity(counts.len());
            for ci in 0..counts.len() {
                let xs: Vec<f64> = vals.iter().map(|v| v[ci][r][k]).collect();
                means.push(mean(&xs));
                let boots: Vec<f64> =
                    resamples.iter().map(|idx| idx.iter().map(|&i| xs[i]).sum::<f64>() / idx.len() as f64).collect();
                let bm = mean(&boots);
                let sd = if boots.len() > 1 {
                    (boots.iter().map(|b| (b - bm).powi(2)).sum::<f64>() / (boots.len() - 1) as f64).sqrt()
                } else {
                    0.0
                };
                band.push(sd);
            }
            series.push(Fig3Series { class, shots, mean_abs_err: means, band });
        }
    }
    let reference = ParamClass::ALL
        .iter()
        .filter(|c| classes.contains(c))
        .map(|&c| {
            let t: Vec<f64> = (0..truth.len()).filter(|&p| classes[p] == c).map(|p| truth[p].abs()).collect();
            (c, mean(&t))
        })
        .collect();
    Ok(Fig3Report {
        counts,
        observables_per_circuit: data.design.observables().len(),
        subsets: cfg.subsets,
        reference,
        series,
    })
}

/// `true` when `v[i+1] <= v[i] + allowance · sqrt(b[i]² + b[i+1]²)` for every step.
pub fn non_increasing_within(v: &[f64], band: &[f64], allowance: f64) -> bool {
    (1..v.len()).all(|i| v[i] <= v[i - 1] + allowance * (band[i].powi(2) + band[i - 1].powi(2)).sqrt())
}

// ---------------------------------------------------------------------------------------------
// Fig. 4: reduced ansätze

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Config {
    pub etas: Vec<f64>,
    pub models: usize,
    pub seed: u64,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self { etas: vec![1.0 / 650.0, 0.25, 0.5, 0.75, 1.0], models: 150, seed: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Row {
    pub eta: f64,
    pub size: usize,
    /// Distinct reduced models actually fitted (one when the subset is the whole model).
    pub fits: usize,
    pub stats: BoxStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Report {
    pub kappa: usize,
    pub models: usize,
    pub mean_true_abs: f64,
    pub rows: Vec<Fig4Row>,
    pub note: String,
}

/// Fits reduced models that keep a random fraction `η` of the parameters to the noise-free
/// data of the full model and pools `|estimate − truth|` over the kept parameters.
pub fn run_fig4(data: &LargeDataset, cfg: &Fig4Config, exec: Execution) -> Result<Fig4Report> {
    let kappa = data.model.kappa();
    let y = data.deltas(None, 0, exec)?;
    let cd = CompressedDesign::all_circuits(&data.dm, &[&y])?;
    let truth = data.truth.values();
    let mut rows = Vec::new();
    for (ei, &eta) in cfg.etas.iter().enumerate() {
        if !(eta > 0.0 && eta <= 1.0) {
            return Err(Error::Design(format!("eta must lie in (0, 1], got {eta}")));
        }
        let size = ((eta * kappa as f64).round() as usize).clamp(1, kappa);
        let fits = if size == kappa { 1 } else { cfg.models };
        let errs = exec.map_range(fits, |m| {
            let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(derive_seed(cfg.seed, ei as u64), m as u64));
            let mut keep = sample_indices(&mut rng, kappa, size).into_vec();
            keep.sort_unstable();
            let est = cd.solve_params(0, &keep);
            est.params.iter().zip(&est.rates).map(|(&p, &e)| (e - truth[p]).abs()).collect::<Vec<f64>>()
        });
        rows.push(Fig4Row { eta, size, fits, stats: BoxStats::new(&errs.concat()) });
    }
    Ok(Fig4Report {
        kappa,
        models: cfg.models,
        mean_true_abs: data.truth.mean_abs(|_| true),
        rows,
        note: "150 reduced models per eta (figure caption); the body text mentions 100".into(),
    })
}

// ---------------------------------------------------------------------------------------------
// Fig. 5: breakdown of the linear approximation

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Config {
    pub n: usize,
    pub depth: usize,
    pub circuits: usize,
    pub w: usize,
    pub models: usize,
    pub scales: Vec<f64>,
    pub seed: u64,
    pub design_seed: u64,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Self {
            n: 5,
            depth: 15,
            circuits: 1000,
            w: 2,
            models: 50,
            scales: (1..=18).map(f64::from).collect(),
            seed: 7,
            design_seed: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Row {
    pub c: f64,
    /// Mean of `|rate|` over all parameters of all models at this scale.
    pub mean_abs_rate: f64,
    pub stats: BoxStats,
    pub median_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Report {
    pub kappa: usize,
    pub rank: RankReport,
    pub rows: Vec<Fig5Row>,
    /// Spearman correlation between `c` and the median `|Δ|`.
    pub trend: f64,
}

/// Dense-backend data at rates scaled by `c`, fitted with the correct ansatz, for several
/// independently drawn rate vectors on one fixed set of circuits.
pub fn run_fig5(cfg: &Fig5Config, exec: Execution) -> Result<Fig5Report> {
    let (model, _) = build_paper_model(cfg.n, None, 0, 1.0, CouplingRule::default())?;
    let design =
        ExperimentDesign::random(cfg.n, cfg.w, cfg.depth, cfg.circuits, LayerSampler::ring(cfg.n), cfg.design_seed)?;
    let dm = build_design(&design, &model, exec)?;
    let base: Vec<RateVector> = (0..cfg.models)
        .map(|m| sample_rates(&model, derive_seed(cfg.seed, m as u64), 1.0, PAPER_H_RANGE, PAPER_S_RANGE))
        .collect();
    let jobs: Vec<(usize, usize)> = (0..cfg.scales.len()).flat_map(|ci| (0..cfg.models).map(move |m| (ci, m))).collect();
    // Circuits run sequentially inside each job; the jobs are the parallel unit.
    let results = exec.map(&jobs, |_, &(ci, m)| -> Result<Vec<f64>> {
        let rates = base[m].scaled(cfg.scales[ci]);
        let sim = SimulatorConfig::new(Backend::DenseExact, None, 0);
        let exact = simulate_exact(&design, &model, &rates, &sim, Execution::Sequential)?;
        let y: Vec<f64> =
            exact.flat_values().iter().zip(exact.flat_ideal()).map(|(v, i)| v.clamp(-1.0, 1.0) - f64::from(i)).collect();
        let est = CompressedDesign::all_circuits(&dm, &[&y])?.solve(0);
        Ok(abs_errors(&est.rates, rates.values()))
    });
    let results: Vec<Vec<f64>> = results.into_iter().collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (ci, &c) in cfg.scales.iter().enumerate() {
        let errs: Vec<f64> = jobs.iter().zip(&results).filter(|((j, _), _)| *j == ci).flat_map(|(_, e)| e.clone()).collect();
        let mean_abs_rate = mean(&base.iter().map(|r| r.mean_abs(|_| true) * c).collect::<Vec<_>>());
        let stats = BoxStats::new(&errs);
        rows.push(Fig5Row { c, mean_abs_rate, median_ratio: stats.median / mean_abs_rate, stats });
    }
    let trend = spearman(&cfg.scales, &rows.iter().map(|r| r.stats.median).collect::<Vec<_>>());
    Ok(Fig5Report { kappa: model.kappa(), rank: rank_report(&dm), rows, trend })
}

// ---------------------------------------------------------------------------------------------
// Fig. 6: rank of D for random sparse models

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SparseClass {
    HOnly,
    SOnly,
    /// Random H and S generators plus `S_X` on every qubit for prep and meas.
    MixedSpam,
}

impl SparseClass {
    pub const ALL: [SparseClass; 3] = [SparseClass::HOnly, SparseClass::SOnly, SparseClass::MixedSpam];
}

/// Draws `kappa` distinct `(gate, label)` pairs: gates uniform over the ring gate set, labels
/// uniform over all non-identity `n`-qubit Paulis.
pub fn sample_sparse_support<R: Rng>(n: usize, kappa: usize, rng: &mut R) -> Result<Vec<(GateId, PauliString)>> {
    let gates: Vec<GateId> = paper_model_specs(n, &ring_edges(n), CouplingRule::default())
        .into_iter()
        .map(|s| s.id)
        .filter(|g| !g.is_spam())
        .collect();
    let labels = 4u128.pow(n as u32) - 1;
    if (kappa as u128) > gates.len() as u128 * labels {
        return Err(Error::Model(format!("cannot place {kappa} distinct generators on {n} qubits")));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(kappa);
    while out.len() < kappa {
        let g = rng.random_range(0..gates.len());
        let code = rng.random_range(1..=labels);
        if seen.insert((g, code)) {
            let terms: Vec<(usize, Pauli)> = (0..n)
                .map(|q| (q, [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z][((code >> (2 * q)) & 3) as usize]))
                .collect();
            out.push((gates[g].clone(), PauliString::from_sparse(n, &terms)));
        }
    }
    Ok(out)
}

/// Builds a sparse model of `class` on the sampled support. Mixed models draw each kind with a
/// fair coin.
pub fn sparse_model<R: Rng>(n: usize, class: SparseClass, support: &[(GateId, PauliString)], rng: &mut R) -> Result<ErrorModel> {
    // Every gate of the set is declared, most of them error-free.
    let mut specs: Vec<GateErrorSpec> = paper_model_specs(n, &ring_edges(n), CouplingRule::default())
        .into_iter()
        .filter(|s| !s.id.is_spam())
        .map(|s| GateErrorSpec { id: s.id, generators: vec![] })
        .collect();
    let mut push = |id: &GateId, g: ElementaryGenerator| match specs.iter_mut().find(|s| &s.id == id) {
        Some(s) => s.generators.push(g),
        None => specs.push(GateErrorSpec { id: id.clone(), generators: vec![g] }),
    };
    for (id, label) in support {
        let kind = match class {
            SparseClass::HOnly => GeneratorKind::H,
            SparseClass::SOnly => GeneratorKind::S,
            SparseClass::MixedSpam => {
                if rng.random_bool(0.5) {
                    GeneratorKind::H
                } else {
                    GeneratorKind::S
                }
            }
        };
        push(id, ElementaryGenerator::new(kind, label.clone())?);
    }
    if class == SparseClass::MixedSpam {
        for id in [GateId::prep(), GateId::meas()] {
            for q in 0..n {
                push(&id, ElementaryGenerator::s(PauliString::single(n, q, Pauli::X)));
            }
        }
    }
    ErrorModel::new(n, specs)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Config {
    pub n: usize,
    pub depth: usize,
    pub w: usize,
    pub kappas: Vec<usize>,
    pub instances: usize,
    pub batch: usize,
    pub max_circuits: usize,
    pub seed: u64,
}

impl Default for Fig6Config {
    fn default() -> Self {
        Self { n: 4, depth: 10, w: 2, kappas: vec![4, 8, 16, 32, 64, 128], instances: 20, batch: 1, max_circuits: 2000, seed: 9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Instance {
    pub class: SparseClass,
    /// Sampled generators (SPAM excluded).
    pub sampled: usize,
    pub instance: usize,
    pub kappa: usize,
    pub circuits_to_full_rank: Option<usize>,
    /// `(circuits, rank/κ)` after each batch.
    pub curve: Vec<(usize, f64)>,
    pub final_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Report {
    pub instances: Vec<Fig6Instance>,
    pub all_full_rank: bool,
    /// Paired H-only/S-only instances (same support and circuits) where H-only needed no more
    /// circuits, over all pairs.
    pub h_not_more_fraction: f64,
    pub pairs: usize,
}

pub fn run_fig6(cfg: &Fig6Config, exec: Execution) -> Result<Fig6Report> {
    let jobs: Vec<(usize, usize)> = (0..cfg.kappas.len()).flat_map(|ki| (0..cfg.instances).map(move |i| (ki, i))).collect();
    let sampler = LayerSampler::ring(cfg.n);
    let per = exec.map(&jobs, |_, &(ki, i)| -> Result<Vec<Fig6Instance>> {
        let seed = derive_seed(derive_seed(cfg.seed, ki as u64), i as u64);
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let support = sample_sparse_support(cfg.n, cfg.kappas[ki], &mut rng)?;
        let mut out = Vec::new();
        for class in SparseClass::ALL {
            let model = sparse_model(cfg.n, class, &support, &mut rng)?;
            // One circuit stream per instance, shared by its three classes.
            let (_, growth) =
                grow_until_full_rank(&model, cfg.w, cfg.depth, &sampler, derive_seed(seed, 1), cfg.batch, cfg.max_circuits)?;
            let kappa = model.kappa();
            out.push(Fig6Instance {
                class,
                sampled: cfg.kappas[ki],
                instance: i,
                kappa,
                circuits_to_full_rank: growth.full_rank.then(|| growth.history.last().map_or(0, |h| h.circuits)),
                curve: growth.history.iter().map(|h| (h.circuits, h.rank as f64 / kappa as f64)).collect(),
                final_ratio: growth.final_report.rank_ratio,
            });
        }
        Ok(out)
    });
    let instances: Vec<Fig6Instance> = per.into_iter().collect::<Result<Vec<_>>>()?.concat();
    let all_full_rank = instances.iter().all(|i| i.circuits_to_full_rank.is_some());
    let mut pairs = 0;
    let mut ok = 0;
    for h in instances.iter().filter(|i| i.class == SparseClass::HOnly) {
        if let Some(s) = instances.iter().find(|s| s.class == SparseClass::SOnly && s.sampled == h.sampled && s.instance == h.instance) {
            pairs += 1;
            if let (Some(a), Some(b)) = (h.circuits_to_full_rank, s.circuits_to_full_rank) {
                if a <= b {
                    ok += 1;
                }
            }
        }
    }
    Ok(Fig6Report {
        instances,
        all_full_rank,
        h_not_more_fraction: if pairs == 0 { f64::NAN } else { ok as f64 / pairs as f64 },
        pairs,
    })
}

/// Convenience for callers that only need the estimate of a whole-model fit.
pub fn fit_all(dm: &DesignMatrix, y: &[f64]) -> Result<Estimate> {
    Ok(CompressedDesign::all_circuits(dm, &[y])?.solve(0))
}
