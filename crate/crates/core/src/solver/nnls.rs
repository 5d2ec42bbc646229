//! Lawson-Hanson active-set non-negative least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::pinv::solve_min_norm;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NnlsSolution {
    /// Every entry is `>= 0.0` and none is `-0.0`.
    pub x: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
    pub tolerance: f64,
    pub kkt_residual: f64,
}

/// Largest violation of the KKT conditions of `min ‖ax - b‖` s.t. `x >= 0`, with gradient
/// `g = aᵀ(ax - b)`: `|g_i|` where `x_i > 0`, `max(0, -g_i)` where `x_i = 0`.
pub fn kkt_residual(a: &DMatrix<f64>, b: &DVector<f64>, x: &[f64]) -> f64 {
    let xv = DVector::from_column_slice(x);
    let g = a.transpose() * (a * &xv - b);
    x.iter()
        .zip(g.iter())
        .map(|(&xi, &gi)| if xi > 0.0 { gi.abs() } else { (-gi).max(0.0) })
        .fold(0.0, f64::max)
}

/// Solves `min ‖a x - b‖² + resid2` subject to `x >= 0`.
///
/// Tolerance is `1e-10 · ‖aᵀb‖_∞` and the iteration cap `10 · ncols`; both are reported.
pub fn nnls(a: &DMatrix<f64>, b: &DVector<f64>, resid2: f64) -> NnlsSolution {
    let k = a.ncols();
    let atb = a.transpose() * b;
    let tol = 1e-10 * atb.amax();
    let cap = 10 * k.max(1);
    let mut x = DVector::<f64>::zeros(k);
    let mut passive = vec![false; k];
    let mut iterations = 0;
    let mut converged = true;

    let gradient = |x: &DVector<f64>| a.transpose() * (b - a * x);

    // LS restricted to the passive columns, scattered back to full length.
    let solve_passive = |passive: &[bool]| -> DVector<f64> {
        let cols: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
        let sub = a.select_columns(&cols);
        let s = solve_min_norm(&sub, b, 0.0, a.nrows());
        let mut z = DVector::zeros(k);
        for (&j, v) in cols.iter().zip(s.x) {
            z[j] = v;
        }
        z
    };

    let mut w = gradient(&x);
    loop {
        let cand = (0..k).filter(|&j| !passive[j] && w[j] > tol).max_by(|&i, &j| w[i].total_cmp(&w[j]));
        let Some(j) = cand else { break };
        if iterations >= cap {
            converged = false;
            break;
        }
        iterations += 1;
        passive[j] = true;
        loop {
            let z = solve_passive(&passive);
            if (0..k).all(|i| !passive[i] || z[i] > 0.0) {
                x = z;
                break;
            }
            iterations += 1;
            let mut alpha = f64::INFINITY;
            let mut blocking = k;
            for i in 0..k {
                if passive[i] && z[i] <= 0.0 {
                    let denom = x[i] - z[i];
                    let t = if denom > 0.0 { x[i] / denom } else { 0.0 };
                    if t < alpha {
                        alpha = t;
                        blocking = i;
                    }
                }
            }
            x += (z - &x) * alpha;
            // The blocking coordinate lands on zero exactly in exact arithmetic.
            x[blocking] = 0.0;
            for i in 0..k {
                if passive[i] && x[i] <= 0.0 {
                    passive[i] = false;
                    x[i] = 0.0;
                }
            }
            if iterations >= cap {
                converged = false;
                break;
            }
        }
        if !converged {
            break;
        }
        w = gradient(&x);
    }

    let xs: Vec<f64> = x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    let xv = DVector::from_column_slice(&xs);
    let r2 = (a * &xv - b).norm_squared() + resid2;
    NnlsSolution {
        kkt_residual: kkt_residual(a, b, &xs),
        x: xs,
        residual: r2.max(0.0).sqrt(),
        iterations,
        converged,
        tolerance: tol,
    }
}
