//! Dense and packed-triangular matrix helpers used by the Walsh layer and
//! the discriminant paths. Everything is f64 and row-major; sizes stay small
//! (at most 2^12 for triangular, 2^8 for dense solves) so no BLAS is needed.

use crate::error::{HillError, Result};

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self.at(i, j)).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self.at(j, i))
    }

    pub fn mul(&self, other: &Mat) -> Mat {
        assert_eq!(self.cols, other.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for l in 0..self.cols {
                let a = self.at(i, l);
                if a == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.at(l, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "matvec dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &Mat) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|x| x.abs()).fold(0.0, f64::max)
    }
}

/// Percentage of an upper-triangular matrix we have to store: row i keeps
/// columns i..n, packed row-major.
#[derive(Debug, Clone)]
pub struct UpperTriangular {
    pub n: usize,
    data: Vec<f64>,
    row_offsets: Vec<usize>,
}

impl UpperTriangular {
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut row_offsets = Vec::with_capacity(n);
        let mut data = Vec::with_capacity(n * (n + 1) / 2);
        let mut off = 0;
        for i in 0..n {
            row_offsets.push(off);
            for j in i..n {
                data.push(f(i, j));
            }
            off += n - i;
        }
        UpperTriangular {
            n,
            data,
            row_offsets,
        }
    }

    pub fn from_dense(m: &Mat) -> Self {
        assert_eq!(m.rows, m.cols);
        Self::from_fn(m.rows, |i, j| m.at(i, j))
    }

    /// Entry (i, j); zero below the diagonal.
    #[inline]
    pub fn at(&self, i: usize, j: usize) -> f64 {
        if j < i {
            0.0
        } else {
            self.data[self.row_offsets[i] + (j - i)]
        }
    }

    #[inline]
    fn row_tail(&self, i: usize) -> &[f64] {
        let start = self.row_offsets[i];
        let len = self.n - i;
        &self.data[start..start + len]
    }

    /// Last column of the inverse, top to bottom, by the bottom-up recursion
    /// a_0 = 1/u_{n,n}, a_k = -(sum_{j<k} a_j u_{n-k,n-j}) / u_{n-k,n-k}.
    ///
    /// Returns an error if a diagonal entry is within `diag_tol` (relative to
    /// the largest diagonal magnitude) of zero.
    pub fn last_column_of_inverse(&self, diag_tol: f64) -> Result<Vec<f64>> {
        let n = self.n;
        let diag_scale = (0..n).map(|i| self.at(i, i).abs()).fold(0.0, f64::max);
        if diag_scale == 0.0 {
            return Err(HillError::Numeric(
                "triangular matrix has an all-zero diagonal".into(),
            ));
        }
        // a[k] = entry (n-1-k, n-1) of the inverse
        let mut a = vec![0.0; n];
        let unn = self.at(n - 1, n - 1);
        if unn.abs() <= diag_tol * diag_scale {
            return Err(HillError::Numeric(format!(
                "near-zero diagonal entry {unn:e} at position {}",
                n - 1
            )));
        }
        a[0] = 1.0 / unn;
        for k in 1..n {
            let row = n - 1 - k;
            let diag = self.at(row, row);
            if diag.abs() <= diag_tol * diag_scale {
                return Err(HillError::Numeric(format!(
                    "near-zero diagonal entry {diag:e} at position {row}"
                )));
            }
            let mut acc = 0.0;
            for (j, aj) in a.iter().enumerate().take(k) {
                acc += aj * self.at(row, n - 1 - j);
            }
            a[k] = -acc / diag;
        }
        a.reverse();
        Ok(a)
    }

    /// Solves U x = b by back substitution.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x = b.to_vec();
        for i in (0..n).rev() {
            let row = self.row_tail(i);
            let diag = row[0];
            if diag == 0.0 {
                return Err(HillError::Numeric(format!(
                    "zero diagonal entry at position {i}"
                )));
            }
            let mut acc = x[i];
            for (off, &u) in row.iter().enumerate().skip(1) {
                acc -= u * x[i + off];
            }
            x[i] = acc / diag;
        }
        Ok(x)
    }
}

/// LU decomposition with partial pivoting, for the small dense solves in the
/// direct Gamma-inversion path.
pub struct Lu {
    n: usize,
    lu: Mat,
    perm: Vec<usize>,
    /// Crude conditioning indicator: max |pivot| / min |pivot|.
    pub pivot_ratio: f64,
}

pub fn lu_factor(m: &Mat) -> Result<Lu> {
    assert_eq!(m.rows, m.cols);
    let n = m.rows;
    let mut lu = m.clone();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut min_piv = f64::INFINITY;
    let mut max_piv = 0.0f64;
    for col in 0..n {
        let mut best = col;
        let mut best_abs = lu.at(col, col).abs();
        for r in col + 1..n {
            let v = lu.at(r, col).abs();
            if v > best_abs {
                best_abs = v;
                best = r;
            }
        }
        if best_abs == 0.0 {
            return Err(HillError::Numeric(format!(
                "singular matrix: no pivot in column {col}"
            )));
        }
        if best != col {
            for j in 0..n {
                let tmp = lu.at(col, j);
                lu.set(col, j, lu.at(best, j));
                lu.set(best, j, tmp);
            }
            perm.swap(col, best);
        }
        let piv = lu.at(col, col);
        min_piv = min_piv.min(piv.abs());
        max_piv = max_piv.max(piv.abs());
        for r in col + 1..n {
            let factor = lu.at(r, col) / piv;
            lu.set(r, col, factor);
            if factor != 0.0 {
                for j in col + 1..n {
                    let v = lu.at(r, j) - factor * lu.at(col, j);
                    lu.set(r, j, v);
                }
            }
        }
    }
    Ok(Lu {
        n,
        lu,
        perm,
        pivot_ratio: max_piv / min_piv,
    })
}

impl Lu {
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut x: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            let mut acc = x[i];
            for j in 0..i {
                acc -= self.lu.at(i, j) * x[j];
            }
            x[i] = acc;
        }
        for i in (0..n).rev() {
            let mut acc = x[i];
            for j in i + 1..n {
                acc -= self.lu.at(i, j) * x[j];
            }
            x[i] = acc / self.lu.at(i, i);
        }
        x
    }
}
