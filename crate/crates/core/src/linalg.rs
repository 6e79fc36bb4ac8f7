//! Small dense helpers shared by the operator modules.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

/// Largest absolute entry. All residuals in this crate use this norm.
pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}

/// Antidiagonal of ones.
pub fn exchange(n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i + j + 1 == n { 1.0 } else { 0.0 })
}

/// `max |Aᵀ - A|`.
pub fn asymmetry(m: &DMatrix<f64>) -> f64 {
    max_abs(&(m.transpose() - m))
}

/// Smallest eigenvalue of the symmetric part of `m`.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Row-major JSON form `{"n": .., "rows": [[..], ..]}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseMatrix {
    pub n: usize,
    pub rows: Vec<Vec<f64>>,
}

impl From<&DMatrix<f64>> for DenseMatrix {
    fn from(m: &DMatrix<f64>) -> Self {
        DenseMatrix {
            n: m.nrows(),
            rows: m
                .row_iter()
                .map(|r| r.iter().copied().collect())
                .collect(),
        }
    }
}

impl DenseMatrix {
    pub fn to_matrix(&self) -> DMatrix<f64> {
        let cols = self.rows.first().map_or(0, Vec::len);
        DMatrix::from_fn(self.rows.len(), cols, |i, j| self.rows[i][j])
    }
}
