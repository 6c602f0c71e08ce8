//! Dense symmetric kernels shared by every selector.
//!
//! The selectors only ever need `p×p` matrices with `p` in the tens, so
//! everything here is plain dense arithmetic on `nalgebra` storage.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use crate::error::{Error, Result};

/// Relative tolerance on `|a_ij - a_ji|` accepted by [`SpdMatrix::new`].
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Smallest Sherman–Morrison denominator accepted before a downdate is refused.
pub const DOWNDATE_TOL: f64 = 1e-10;

/// A symmetric positive definite matrix together with its Cholesky factor.
#[derive(Clone, Debug)]
pub struct SpdMatrix {
    entries: DMatrix<f64>,
    factor: Cholesky<f64, Dyn>,
}

impl SpdMatrix {
    /// Checks symmetry and factorizes.
    ///
    /// The matrix is accepted only when every Cholesky pivot exceeds
    /// `dim · ε · max_i a_ii`.
    pub fn new(entries: DMatrix<f64>) -> Result<Self> {
        let dim = entries.nrows();
        if dim == 0 || entries.ncols() != dim {
            return Err(Error::DimensionMismatch(format!(
                "expected a non-empty square matrix, got {}x{}",
                entries.nrows(),
                entries.ncols()
            )));
        }
        let scale = entries.amax();
        for i in 0..dim {
            for j in (i + 1)..dim {
                let gap = (entries[(i, j)] - entries[(j, i)]).abs();
                if gap > SYMMETRY_TOL * scale {
                    return Err(Error::NotSymmetric { row: i, col: j, gap });
                }
            }
        }
        let max_diag = (0..dim).map(|i| entries[(i, i)]).fold(f64::MIN, f64::max);
        if !(max_diag > 0.0) {
            return Err(Error::SingularMatrix { column: 0, pivot: max_diag });
        }
        let threshold = dim as f64 * f64::EPSILON * max_diag;
        let factor = Cholesky::new(entries.clone()).ok_or(Error::SingularMatrix { column: 0, pivot: f64::NAN })?;
        let l = factor.l_dirty();
        for j in 0..dim {
            let pivot = l[(j, j)] * l[(j, j)];
            if !(pivot > threshold) {
                return Err(Error::SingularMatrix { column: j, pivot });
            }
        }
        Ok(Self { entries, factor })
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn cholesky(&self) -> &Cholesky<f64, Dyn> {
        &self.factor
    }

    /// Solves `A z = b` for each column of `b`.
    pub fn solve(&self, b: &DMatrix<f64>) -> DMatrix<f64> {
        self.factor.solve(b)
    }

    pub fn solve_vec(&self, b: &DVector<f64>) -> DVector<f64> {
        self.factor.solve(b)
    }

    /// `A^{-1}` from the factorization.
    pub fn inverse(&self) -> DMatrix<f64> {
        crate::design::symmetrize(self.factor.inverse())
    }

    /// `tr(A^{-1}) = ||L^{-1}||_F^2`, solving against the identity with the triangular factor.
    pub fn trace_inverse(&self) -> f64 {
        let dim = self.dim();
        let mut linv = DMatrix::<f64>::identity(dim, dim);
        self.factor.l_dirty().solve_lower_triangular_mut(&mut linv);
        // `l_dirty` keeps garbage above the diagonal; the lower solve never reads it
        // but the result is only lower-triangular, so square the lower part.
        let mut total = 0.0;
        for j in 0..dim {
            for i in j..dim {
                total += linv[(i, j)] * linv[(i, j)];
            }
        }
        total
    }
}

/// `tr(A^{-1})` for a symmetric positive definite `A`.
pub fn trace_inverse(m: &SpdMatrix) -> f64 {
    m.trace_inverse()
}

/// `(A ± u uᵀ)^{-1}` given `inv = A^{-1}`.
///
/// `sign` must be `+1.0` (row added) or `-1.0` (row removed).
pub fn sherman_morrison_update(inv: &DMatrix<f64>, u: &DVector<f64>, sign: f64) -> Result<DMatrix<f64>> {
    if inv.nrows() != inv.ncols() || inv.nrows() != u.len() {
        return Err(Error::DimensionMismatch(format!(
            "inverse is {}x{}, update vector has length {}",
            inv.nrows(),
            inv.ncols(),
            u.len()
        )));
    }
    if sign != 1.0 && sign != -1.0 {
        return Err(Error::InvalidArgument(format!("sign must be +1 or -1, got {sign}")));
    }
    let a_u = inv * u;
    let denominator = 1.0 + sign * u.dot(&a_u);
    if denominator <= DOWNDATE_TOL {
        return Err(Error::DowndateSingular { denominator });
    }
    let mut out = inv.clone();
    out.ger(-sign / denominator, &a_u, &a_u, 1.0);
    Ok(crate::design::symmetrize(out))
}

/// Ratio of the extreme eigenvalues; `+∞` when the smallest is not positive.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    let eig = SymmetricEigen::new(m.clone()).eigenvalues;
    let max = eig.max();
    let min = eig.min();
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Largest singular value of a general matrix.
pub fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    let gram = if m.nrows() >= m.ncols() { m.tr_mul(m) } else { m * m.transpose() };
    let eig = SymmetricEigen::new(gram).eigenvalues;
    eig.max().max(0.0).sqrt()
}

/// `A^{-1/2}` for a symmetric positive definite `A`, through the eigendecomposition.
pub fn inverse_sqrt(m: &SpdMatrix) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.entries().clone());
    let scaled = DVector::from_iterator(eig.eigenvalues.len(), eig.eigenvalues.iter().map(|v| 1.0 / v.sqrt()));
    let q = &eig.eigenvectors;
    crate::design::symmetrize(q * DMatrix::from_diagonal(&scaled) * q.transpose())
}
