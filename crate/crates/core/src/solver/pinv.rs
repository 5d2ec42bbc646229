use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

/// Singular values at or below this count as zero: `max(K, κ) · σ_max · 2⁻⁴⁰`.
pub fn rank_threshold(rows: usize, cols: usize, sigma_max: f64) -> f64 {
    rows.max(cols) as f64 * sigma_max * 2f64.powi(-40)
}

pub fn numerical_rank(singular_values: &[f64], threshold: f64) -> usize {
    singular_values.iter().filter(|&&s| s > threshold).count()
}

/// Minimum-norm least-squares solution from a compressed system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinvSolution {
    pub x: Vec<f64>,
    pub residual: f64,
    pub rank: usize,
    pub null_dim: usize,
    pub threshold: f64,
    /// Descending.
    pub singular_values: Vec<f64>,
}

/// Thin SVD of `a` with singular values sorted descending.
pub(crate) struct SortedSvd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub v: DMatrix<f64>,
}

pub(crate) fn sorted_svd(a: &DMatrix<f64>) -> SortedSvd {
    let k = a.nrows().min(a.ncols());
    if k == 0 {
        return SortedSvd { u: DMatrix::zeros(a.nrows(), 0), s: vec![], v: DMatrix::zeros(a.ncols(), 0) };
    }
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let vt = svd.v_t.expect("requested");
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| svd.singular_values[j].total_cmp(&svd.singular_values[i]));
    SortedSvd {
        u: DMatrix::from_fn(u.nrows(), k, |r, c| u[(r, order[c])]),
        s: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v: DMatrix::from_fn(vt.ncols(), k, |r, c| vt[(order[c], r)]),
    }
}

/// Solves `min ‖a x - b‖² + resid2` in the minimum-norm sense. `source_rows` is the row count
/// of the original (uncompressed) matrix, used for the rank threshold.
pub fn solve_min_norm(a: &DMatrix<f64>, b: &DVector<f64>, resid2: f64, source_rows: usize) -> PinvSolution {
    let bm = DMatrix::from_column_slice(b.len(), 1, b.as_slice());
    solve_min_norm_many(a, &bm, &[resid2], source_rows).pop().expect("one column")
}

/// [`solve_min_norm`] for every column of `b`, sharing one SVD.
pub fn solve_min_norm_many(a: &DMatrix<f64>, b: &DMatrix<f64>, resid2: &[f64], source_rows: usize) -> Vec<PinvSolution> {
    let k = a.ncols();
    let svd = sorted_svd(a);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let threshold = rank_threshold(source_rows, k, smax);
    let rank = if smax == 0.0 { 0 } else { numerical_rank(&svd.s, threshold) };
    (0..b.ncols())
        .map(|j| {
            let bj = b.column(j);
            let mut x = DVector::zeros(k);
            for i in 0..rank {
                let coef = svd.u.column(i).dot(&bj) / svd.s[i];
                x.axpy(coef, &svd.v.column(i), 1.0);
            }
            let r2 = (a * &x - bj).norm_squared() + resid2[j];
            PinvSolution {
                x: x.iter().copied().collect(),
                residual: r2.max(0.0).sqrt(),
                rank,
                null_dim: k - rank,
                threshold,
                singular_values: svd.s.clone(),
            }
        })
        .collect()
}

/// `(AᵀA)⁺` restricted to the numerical range of `a`.
pub fn gram_pinv(a: &DMatrix<f64>, source_rows: usize) -> DMatrix<f64> {
    let k = a.ncols();
    let svd = sorted_svd(a);
    let smax = svd.s.first().copied().unwrap_or(0.0);
    let thr = rank_threshold(source_rows, k, smax);
    let mut out = DMatrix::zeros(k, k);
    for i in 0..svd.s.len() {
        if smax == 0.0 || svd.s[i] <= thr {
            break;
        }
        let v = svd.v.column(i);
        out += (v * v.transpose()) / (svd.s[i] * svd.s[i]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_deficient_min_norm() {
        // Two identical columns: the minimum-norm solution splits the weight evenly.
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![2.0, 4.0, 0.0]);
        let s = solve_min_norm(&a, &b, 0.0, 3);
        assert_eq!(s.rank, 1);
        assert_eq!(s.null_dim, 1);
        assert!((s.x[0] - 1.0).abs() < 1e-12 && (s.x[1] - 1.0).abs() < 1e-12);
        assert!(s.residual < 1e-12);
    }

    #[test]
    fn zero_matrix() {
        let s = solve_min_norm(&DMatrix::zeros(4, 3), &DVector::from_vec(vec![1.0, 0.0, 0.0, 0.0]), 0.5, 4);
        assert_eq!(s.rank, 0);
        assert_eq!(s.x, vec![0.0; 3]);
        assert!((s.residual - 1.5f64.sqrt()).abs() < 1e-12);
    }
}
