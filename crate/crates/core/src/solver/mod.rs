//! Decoupled linear inversion: pseudoinverse for Hamiltonian rates, NNLS for stochastic rates.
//!
//! Both blocks are first compressed with [`qr::GivensQr`], so every solve, including solves on a
//! subset of the parameters, costs `O(κ³)` no matter how many rows the design has.

pub mod nnls;
pub mod pinv;
pub mod qr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::exec::{derive_seed, Execution};
use crate::propagation::RowKind;

pub use nnls::{kkt_residual, NnlsSolution};
pub use pinv::PinvSolution;
use qr::GivensQr;

/// Least-squares problem in compressed form: `‖Dx - y‖² = ‖a x - b‖² + resid2`.
#[derive(Debug, Clone)]
pub struct LsSystem {
    pub a: DMatrix<f64>,
    pub b: DVector<f64>,
    pub resid2: f64,
    /// Row count of the uncompressed matrix.
    pub source_rows: usize,
}

impl LsSystem {
    /// Compresses sparse rows `(entries, y)` over `ncols` columns.
    pub fn from_rows<'a, I>(ncols: usize, rows: I) -> Self
    where
        I: IntoIterator<Item = (&'a [(usize, f64)], f64)>,
    {
        let mut qr = GivensQr::new(ncols, 1);
        for (e, y) in rows {
            qr.add_row(e, &[y]);
        }
        Self::from_qr(&qr, 0)
    }

    pub fn from_qr(qr: &GivensQr, rhs: usize) -> Self {
        Self { a: qr.r(), b: qr.qty().column(rhs).into_owned(), resid2: qr.residual2()[rhs], source_rows: qr.rows() }
    }

    pub fn select_columns(&self, cols: &[usize]) -> Self {
        Self { a: self.a.select_columns(cols), ..self.clone() }
    }
}

/// `ε_H = D_H⁺ y_H`, minimum norm, with the null-space dimension reported.
pub fn solve_hamiltonian(sys: &LsSystem) -> PinvSolution {
    pinv::solve_min_norm(&sys.a, &sys.b, sys.resid2, sys.source_rows)
}

/// `argmin ‖D_S x - y_S‖` subject to `x >= 0`.
pub fn solve_stochastic(sys: &LsSystem) -> NnlsSolution {
    nnls::nnls(&sys.a, &sys.b, sys.resid2)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HamiltonianMeta {
    pub rank: usize,
    pub null_dim: usize,
    pub residual: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticMeta {
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    pub kkt_residual: f64,
    pub residual: f64,
}

/// Fitted rates for the parameters `params` (indices into the full model, ascending).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub params: Vec<usize>,
    pub rates: Vec<f64>,
    pub hamiltonian: HamiltonianMeta,
    pub stochastic: StochasticMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stderr: Option<Vec<f64>>,
}

impl Estimate {
    /// Rates scattered into a length-`kappa` vector, zero for parameters not fitted.
    pub fn full_rates(&self, kappa: usize) -> Vec<f64> {
        let mut out = vec![0.0; kappa];
        for (&p, &v) in self.params.iter().zip(&self.rates) {
            out[p] = v;
        }
        out
    }
}

/// Both blocks of a design compressed against one or more right-hand sides.
#[derive(Debug, Clone)]
pub struct CompressedDesign {
    kappa: usize,
    col_is_h: Vec<bool>,
    col_pos: Vec<usize>,
    qr_h: GivensQr,
    qr_s: GivensQr,
}

impl CompressedDesign {
    /// Folds in the rows of the given circuits (repeats allowed) for each data vector in `ys`.
    /// Each `ys[r]` holds `Δ⟨Q⟩` for every row of `dm`. Rows whose value is NaN are skipped.
    pub fn new(dm: &DesignMatrix, circuits: &[usize], ys: &[&[f64]]) -> Result<Self> {
        let mut cd = Self::empty(dm, ys.len());
        cd.add_circuits(dm, circuits, ys)?;
        Ok(cd)
    }

    /// No rows yet, `nrhs` data vectors.
    pub fn empty(dm: &DesignMatrix, nrhs: usize) -> Self {
        let h_cols = dm.h_cols();
        let s_cols = dm.s_cols();
        let mut col_pos = vec![0; dm.kappa()];
        for (p, &j) in h_cols.iter().enumerate() {
            col_pos[j] = p;
        }
        for (p, &j) in s_cols.iter().enumerate() {
            col_pos[j] = p;
        }
        Self {
            kappa: dm.kappa(),
            qr_h: GivensQr::new(h_cols.len(), nrhs),
            qr_s: GivensQr::new(s_cols.len(), nrhs),
            col_is_h: dm.col_is_h().to_vec(),
            col_pos,
        }
    }

    /// Folds in more circuits; the compressed system grows as if they had been given to `new`.
    pub fn add_circuits(&mut self, dm: &DesignMatrix, circuits: &[usize], ys: &[&[f64]]) -> Result<()> {
        if ys.len() != self.qr_h.nrhs() {
            return Err(Error::Solver(format!("expected {} data vectors, got {}", self.qr_h.nrhs(), ys.len())));
        }
        for y in ys {
            if y.len() != dm.num_rows() {
                return Err(Error::Solver(format!("data has {} rows, design has {}", y.len(), dm.num_rows())));
            }
        }
        let ranges = dm.circuit_rows();
        let mut local = Vec::new();
        let mut rhs = vec![0.0; ys.len()];
        for &c in circuits {
            let range = ranges.get(c).ok_or_else(|| Error::Solver(format!("circuit index {c} out of range")))?;
            for i in range.clone() {
                for (r, y) in ys.iter().enumerate() {
                    rhs[r] = y[i];
                }
                if rhs.iter().any(|v| v.is_nan()) {
                    continue;
                }
                local.clear();
                local.extend(dm.row(i).map(|(c, v)| (self.col_pos[c], v)));
                match dm.row_info(i).kind {
                    RowKind::H => self.qr_h.add_row(&local, &rhs),
                    RowKind::S => self.qr_s.add_row(&local, &rhs),
                }
            }
        }
        Ok(())
    }

    pub fn nrhs(&self) -> usize {
        self.qr_h.nrhs()
    }

    pub fn all_circuits(dm: &DesignMatrix, ys: &[&[f64]]) -> Result<Self> {
        let idx: Vec<usize> = (0..dm.num_circuits()).collect();
        Self::new(dm, &idx, ys)
    }

    pub fn kappa(&self) -> usize {
        self.kappa
    }

    pub fn h_system(&self, rhs: usize) -> LsSystem {
        LsSystem::from_qr(&self.qr_h, rhs)
    }

    pub fn s_system(&self, rhs: usize) -> LsSystem {
        LsSystem::from_qr(&self.qr_s, rhs)
    }

    fn split(&self, params: &[usize]) -> (Vec<usize>, Vec<usize>) {
        let mut h = Vec::new();
        let mut s = Vec::new();
        for &p in params {
            if self.col_is_h[p] {
                h.push(self.col_pos[p]);
            } else {
                s.push(self.col_pos[p]);
            }
        }
        (h, s)
    }

    /// Fits every parameter against right-hand side `rhs`.
    pub fn solve(&self, rhs: usize) -> Estimate {
        let all: Vec<usize> = (0..self.kappa).collect();
        self.solve_params(rhs, &all)
    }

    /// Fits the reduced model containing only `params`; the others are held at zero.
    pub fn solve_params(&self, rhs: usize, params: &[usize]) -> Estimate {
        self.solve_params_many(&[rhs], params).pop().expect("one right-hand side")
    }

    /// [`Self::solve_params`] for several right-hand sides, sharing the Hamiltonian SVD.
    pub fn solve_params_many(&self, rhs: &[usize], params: &[usize]) -> Vec<Estimate> {
        let mut params = params.to_vec();
        params.sort_unstable();
        params.dedup();
        let (hl, sl) = self.split(&params);
        let ah = self.qr_h.r().select_columns(&hl);
        let bh = self.qr_h.qty().select_columns(rhs);
        let rh: Vec<f64> = rhs.iter().map(|&r| self.qr_h.residual2()[r]).collect();
        let hsols = pinv::solve_min_norm_many(&ah, &bh, &rh, self.qr_h.rows());
        rhs.iter()
            .zip(hsols)
            .map(|(&r, hs)| {
                let ss = solve_stochastic(&self.s_system(r).select_columns(&sl));
                assemble(&params, &self.col_is_h, hs, ss)
            })
            .collect()
    }

    /// Linear error propagation. `row_var[i]` is the variance of row `i`'s data (0 for exact
    /// rows); cross-row covariance is ignored. The stochastic block treats the NNLS active set
    /// of `est` as fixed.
    pub fn linear_stderr(&self, dm: &DesignMatrix, circuits: &[usize], row_var: &[f64], est: &Estimate) -> Vec<f64> {
        let (hl, sl) = self.split(&est.params);
        // Passive stochastic parameters, as positions within `sl`.
        let mut s_passive = Vec::new();
        let mut is = 0;
        for (&p, &v) in est.params.iter().zip(&est.rates) {
            if !self.col_is_h[p] {
                if v > 0.0 {
                    s_passive.push(is);
                }
                is += 1;
            }
        }
        let s_sel: Vec<usize> = s_passive.iter().map(|&i| sl[i]).collect();
        let var_h = block_variances(&self.qr_h, &hl, dm, circuits, row_var, RowKind::H, &self.col_pos);
        let var_s_passive = block_variances(&self.qr_s, &s_sel, dm, circuits, row_var, RowKind::S, &self.col_pos);
        let mut var_s = vec![0.0; sl.len()];
        for (k, &i) in s_passive.iter().enumerate() {
            var_s[i] = var_s_passive[k];
        }
        let (mut ih, mut is) = (0, 0);
        est.params
            .iter()
            .map(|&p| {
                let v = if self.col_is_h[p] {
                    ih += 1;
                    var_h[ih - 1]
                } else {
                    is += 1;
                    var_s[is - 1]
                };
                v.max(0.0).sqrt()
            })
            .collect()
    }
}

fn assemble(params: &[usize], col_is_h: &[bool], hs: PinvSolution, ss: NnlsSolution) -> Estimate {
    let mut rates = Vec::with_capacity(params.len());
    let (mut ih, mut is) = (0, 0);
    for &p in params {
        if col_is_h[p] {
            rates.push(hs.x[ih]);
            ih += 1;
        } else {
            rates.push(ss.x[is]);
            is += 1;
        }
    }
    Estimate {
        params: params.to_vec(),
        rates,
        hamiltonian: HamiltonianMeta { rank: hs.rank, null_dim: hs.null_dim, residual: hs.residual, threshold: hs.threshold },
        stochastic: StochasticMeta {
            iterations: ss.iterations,
            converged: ss.converged,
            tolerance: ss.tolerance,
            kkt_residual: ss.kkt_residual,
            residual: ss.residual,
        },
        stderr: None,
    }
}

/// Diagonal of `G⁺ M G⁺` for the block columns `sel` (local positions), where `G = AᵀA` comes
/// from the compressed factor and `M = Σ var_i d_i d_iᵀ` from the raw rows.
fn block_variances(
    qr: &GivensQr,
    sel: &[usize],
    dm: &DesignMatrix,
    circuits: &[usize],
    row_var: &[f64],
    kind: RowKind,
    col_pos: &[usize],
) -> Vec<f64> {
    let k = sel.len();
    if k == 0 {
        return vec![];
    }
    let a = qr.r().select_columns(sel);
    let gp = pinv::gram_pinv(&a, qr.rows());
    let mut where_ = vec![usize::MAX; qr.ncols()];
    for (i, &s) in sel.iter().enumerate() {
        where_[s] = i;
    }
    let mut m = DMatrix::<f64>::zeros(k, k);
    let ranges = dm.circuit_rows();
    let mut buf: Vec<(usize, f64)> = Vec::new();
    for &c in circuits {
        for i in ranges[c].clone() {
            if dm.row_info(i).kind != kind || row_var[i] == 0.0 || row_var[i].is_nan() {
                continue;
            }
            buf.clear();
            buf.extend(dm.row(i).filter_map(|(col, v)| {
                let w = where_[col_pos[col]];
                (w != usize::MAX).then_some((w, v))
            }));
            for &(p, vp) in &buf {
                for &(q, vq) in &buf {
                    m[(p, q)] += row_var[i] * vp * vq;
                }
            }
        }
    }
    let cov = &gp * m * &gp;
    (0..k).map(|i| cov[(i, i)]).collect()
}

/// Per-row variance `(1 - v²)/N` of an estimated expectation value; 0 for infinite shots.
pub fn shot_variance(value: f64, shots: Option<u64>) -> f64 {
    match shots {
        None => 0.0,
        Some(n) => (1.0 - value.clamp(-1.0, 1.0).powi(2)) / n as f64,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSummary {
    pub replicates: usize,
    pub seed: u64,
    pub stderr: Vec<f64>,
    pub q025: Vec<f64>,
    pub q975: Vec<f64>,
}

/// Non-parametric bootstrap over whole circuits: each replicate resamples the circuit list with
/// replacement and refits `params`. Replicate `b` uses a seed derived from `(seed, b)`.
pub fn bootstrap(
    dm: &DesignMatrix,
    circuits: &[usize],
    y: &[f64],
    params: &[usize],
    replicates: usize,
    seed: u64,
    exec: Execution,
) -> Result<BootstrapSummary> {
    if replicates < 2 {
        return Err(Error::Solver("bootstrap needs at least 2 replicates".into()));
    }
    let fits = exec.map_range(replicates, |b| -> Result<Vec<f64>> {
        let mut rng = ChaCha20Rng::seed_from_u64(derive_seed(seed, b as u64));
        let pick: Vec<usize> = (0..circuits.len()).map(|_| circuits[rng.random_range(0..circuits.len())]).collect();
        let cd = CompressedDesign::new(dm, &pick, &[y])?;
        Ok(cd.solve_params(0, params).rates)
    });
    let fits: Vec<Vec<f64>> = fits.into_iter().collect::<Result<_>>()?;
    let k = fits[0].len();
    let mut stderr = Vec::with_capacity(k);
    let mut q025 = Vec::with_capacity(k);
    let mut q975 = Vec::with_capacity(k);
    for j in 0..k {
        let mut col: Vec<f64> = fits.iter().map(|f| f[j]).collect();
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (col.len() - 1) as f64;
        stderr.push(var.sqrt());
        col.sort_by(f64::total_cmp);
        q025.push(quantile_sorted(&col, 0.025));
        q975.push(quantile_sorted(&col, 0.975));
    }
    Ok(BootstrapSummary { replicates, seed, stderr, q025, q975 })
}

/// Linear-interpolated quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

pub fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    quantile_sorted(&v, 0.5)
}
