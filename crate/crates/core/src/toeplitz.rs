//! Traces of products of symmetric Toeplitz matrices.
//!
//! `A` and `B` are given by their first columns `a[k] = A_{i,i+k}`.

use alloc::vec;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dense symmetric Toeplitz matrix with first column `a`.
pub fn toeplitz_matrix(a: &[f64]) -> DMatrix<f64> {
    let n = a.len();
    DMatrix::from_fn(n, n, |i, j| a[i.abs_diff(j)])
}

/// `tr((AB)²)` in `O(n²)` time and `O(n)` memory.
///
/// Walks the diagonals of `C = AB` with the displacement identity
/// `C[i+1][j+1] = C[i][j] + a[i+1]·b[j+1] − a[n−1−i]·b[n−1−j]`,
/// seeded from the first row and column.
pub fn toeplitz_product_trace(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len();
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: b.len(),
        });
    }
    if n == 0 {
        return Ok(0.0);
    }
    // row[j] = C[0][j], col[i] = C[i][0]
    let mut row = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        row[j] = (0..n).map(|k| a[k] * b[k.abs_diff(j)]).sum();
        col[j] = (0..n).map(|k| a[j.abs_diff(k)] * b[k]).sum();
    }
    let step = |c: f64, i: usize, j: usize| c + a[i + 1] * b[j + 1] - a[n - 1 - i] * b[n - 1 - j];

    let mut total = 0.0;
    // main diagonal: C[t][t]²
    let mut c = row[0];
    let mut diag = c * c;
    for t in 0..n - 1 {
        c = step(c, t, t);
        diag += c * c;
    }
    total += diag;
    // off-diagonal pairs C[t][t+d]·C[t+d][t]
    for d in 1..n {
        let mut up = row[d];
        let mut lo = col[d];
        let mut acc = up * lo;
        for t in 0..n - 1 - d {
            up = step(up, t, t + d);
            lo = step(lo, t + d, t);
            acc += up * lo;
        }
        total += 2.0 * acc;
    }
    Ok(total)
}

/// `tr((AB)²)` from dense matrix products; reference path for small `n`.
pub fn toeplitz_product_trace_dense(a: &[f64], b: &[f64]) -> Result<f64> {
    if b.len() != a.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: b.len(),
        });
    }
    let c = toeplitz_matrix(a) * toeplitz_matrix(b);
    Ok(c.component_mul(&c.transpose()).sum())
}
