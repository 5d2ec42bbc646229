//! Row-by-row Givens QR of a tall sparse least-squares problem.
//!
//! Rows are folded one at a time into a dense upper-triangular `R` (George-Heath), so the
//! tall matrix is never stored. The result satisfies `‖Dx - y‖² = ‖Rx - c‖² + r²` for every
//! `x`, which makes any least-squares question about `D` (including on a subset of its
//! columns) answerable from `R` alone.

use nalgebra::DMatrix;

#[derive(Debug, Clone)]
pub struct GivensQr {
    ncols: usize,
    nrhs: usize,
    // Row-major upper triangle; row j only uses columns j..ncols.
    r: Vec<f64>,
    filled: Vec<bool>,
    c: Vec<f64>,
    resid2: Vec<f64>,
    rows: usize,
    work: Vec<f64>,
    work_rhs: Vec<f64>,
}

impl GivensQr {
    pub fn new(ncols: usize, nrhs: usize) -> Self {
        Self {
            ncols,
            nrhs,
            r: vec![0.0; ncols * ncols],
            filled: vec![false; ncols],
            c: vec![0.0; ncols * nrhs],
            resid2: vec![0.0; nrhs],
            rows: 0,
            work: vec![0.0; ncols],
            work_rhs: vec![0.0; nrhs],
        }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nrhs(&self) -> usize {
        self.nrhs
    }

    /// Number of rows folded in so far.
    pub fn rows(&self) -> usize {
        self.rows
    }

    /// Folds in one row given as sparse `(column, value)` pairs plus its right-hand sides.
    pub fn add_row(&mut self, entries: &[(usize, f64)], rhs: &[f64]) {
        assert_eq!(rhs.len(), self.nrhs, "right-hand side count");
        self.rows += 1;
        let k = self.ncols;
        let mut first = k;
        for &(j, v) in entries {
            assert!(j < k, "column {j} out of range");
            self.work[j] += v;
            first = first.min(j);
        }
        self.work_rhs.copy_from_slice(rhs);
        let mut j = first;
        while j < k {
            let b = self.work[j];
            if b == 0.0 {
                j += 1;
                continue;
            }
            let row = &mut self.r[j * k..(j + 1) * k];
            let crow = &mut self.c[j * self.nrhs..(j + 1) * self.nrhs];
            if !self.filled[j] {
                row[j..].copy_from_slice(&self.work[j..]);
                crow.copy_from_slice(&self.work_rhs);
                self.filled[j] = true;
                self.work[j..].fill(0.0);
                self.work_rhs.fill(0.0);
                return;
            }
            let a = row[j];
            let h = a.hypot(b);
            let (cs, sn) = (a / h, b / h);
            row[j] = h;
            self.work[j] = 0.0;
            for (rv, wv) in row[j + 1..].iter_mut().zip(&mut self.work[j + 1..]) {
                let (x, y) = (*rv, *wv);
                *rv = cs * x + sn * y;
                *wv = cs * y - sn * x;
            }
            for (rv, wv) in crow.iter_mut().zip(&mut self.work_rhs) {
                let (x, y) = (*rv, *wv);
                *rv = cs * x + sn * y;
                *wv = cs * y - sn * x;
            }
            j += 1;
        }
        for (acc, v) in self.resid2.iter_mut().zip(&self.work_rhs) {
            *acc += v * v;
        }
    }

    /// Dense `R` (`ncols × ncols`, upper triangular).
    pub fn r(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.ncols, self.ncols, &self.r)
    }

    /// `Qᵀy`, one column per right-hand side.
    pub fn qty(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.ncols, self.nrhs, &self.c)
    }

    /// Squared residual components that no choice of `x` can remove.
    pub fn residual2(&self) -> &[f64] {
        &self.resid2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn matches_dense_least_squares() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (m, k) = (60, 7);
        let d = DMatrix::from_fn(m, k, |_, _| if rng.random_bool(0.4) { rng.random_range(-2.0..2.0) } else { 0.0 });
        let y = DMatrix::from_fn(m, 2, |_, _| rng.random_range(-1.0..1.0));
        let mut qr = GivensQr::new(k, 2);
        for i in 0..m {
            let entries: Vec<(usize, f64)> = (0..k).filter(|&j| d[(i, j)] != 0.0).map(|j| (j, d[(i, j)])).collect();
            qr.add_row(&entries, &[y[(i, 0)], y[(i, 1)]]);
        }
        let r = qr.r();
        let gram = d.transpose() * &d;
        assert!((r.transpose() * &r - &gram).norm() < 1e-10 * gram.norm());
        let dty = d.transpose() * &y;
        assert!((r.transpose() * qr.qty() - dty).norm() < 1e-10);
        // residual identity at a random x
        let x = DMatrix::from_fn(k, 1, |_, _| rng.random_range(-1.0..1.0));
        let full = (&d * &x - y.column(0)).norm_squared();
        let compressed = (&r * &x - qr.qty().column(0)).norm_squared() + qr.residual2()[0];
        assert!((full - compressed).abs() < 1e-10 * full);
    }
}
