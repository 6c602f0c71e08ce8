use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// The n×p pool of candidate design points, one row per experiment setting.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix {
    data: DMatrix<f64>,
}

impl DesignMatrix {
    /// Wraps a dense matrix, rejecting empty shapes and non-finite entries.
    pub fn new(data: DMatrix<f64>) -> Result<Self> {
        if data.nrows() == 0 || data.ncols() == 0 {
            return Err(Error::InvalidArgument(format!(
                "design matrix must be non-empty, got {}x{}",
                data.nrows(),
                data.ncols()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            let (row, col) = (pos % data.nrows(), pos / data.nrows());
            return Err(Error::InvalidArgument(format!("non-finite entry at row {row}, column {col}")));
        }
        Ok(Self { data })
    }

    /// Builds an `n×p` design from row-major storage.
    pub fn from_row_slice(n: usize, p: usize, values: &[f64]) -> Result<Self> {
        if values.len() != n * p {
            return Err(Error::DimensionMismatch(format!(
                "expected {} values for a {n}x{p} design, got {}",
                n * p,
                values.len()
            )));
        }
        Self::new(DMatrix::from_row_slice(n, p, values))
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let p = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().position(|r| r.len() != p) {
            return Err(Error::DimensionMismatch(format!("row {bad} has {} entries, expected {p}", rows[bad].len())));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        Self::from_row_slice(rows.len(), p, &flat)
    }

    pub fn identity(p: usize) -> Self {
        Self { data: DMatrix::identity(p, p) }
    }

    /// Number of candidate points.
    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    /// Number of regression coefficients.
    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.data
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> DVector<f64> {
        self.data.row(i).transpose()
    }

    pub fn rows(&self) -> impl Iterator<Item = DVector<f64>> + '_ {
        (0..self.n()).map(move |i| self.row(i))
    }

    /// Stacks the listed rows in order; indices may repeat.
    pub fn select_rows(&self, indices: &[usize]) -> DMatrix<f64> {
        self.data.select_rows(indices.iter())
    }

    /// `X^T diag(w) X`, symmetrized.
    pub fn weighted_gram(&self, weights: &[f64]) -> DMatrix<f64> {
        debug_assert_eq!(weights.len(), self.n());
        let mut scaled = self.data.clone();
        for (i, w) in weights.iter().enumerate() {
            let s = w.max(0.0).sqrt();
            scaled.row_mut(i).scale_mut(s);
        }
        symmetrize(scaled.tr_mul(&scaled))
    }

    /// `X^T X` over the full pool.
    pub fn gram(&self) -> DMatrix<f64> {
        symmetrize(self.data.tr_mul(&self.data))
    }

    /// Gram matrix of a multiset: each index contributes `count` copies of its outer product.
    pub fn subset_gram(&self, indices: &[usize], counts: &[usize]) -> DMatrix<f64> {
        let p = self.p();
        let mut g = DMatrix::zeros(p, p);
        for (&i, &c) in indices.iter().zip(counts) {
            let x = self.data.row(i);
            g.ger(c as f64, &x.transpose(), &x.transpose(), 1.0);
        }
        symmetrize(g)
    }

    /// Largest row Euclidean norm.
    pub fn max_row_norm(&self) -> f64 {
        self.data.row_iter().map(|r| r.norm()).fold(0.0, f64::max)
    }

    /// Applies `f(row_index, row)` to produce a new design of the same shape.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &DVector<f64>) -> DVector<f64>) -> Result<Self> {
        let rows: Vec<DVector<f64>> = (0..self.n()).map(|i| f(i, &self.row(i))).collect();
        let width = rows[0].len();
        if rows.iter().any(|r| r.len() != width) {
            return Err(Error::DimensionMismatch("mapped rows differ in length".into()));
        }
        Self::new(DMatrix::from_fn(self.n(), width, |i, j| rows[i][j]))
    }
}

pub(crate) fn symmetrize(mut m: DMatrix<f64>) -> DMatrix<f64> {
    let n = m.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    m
}
