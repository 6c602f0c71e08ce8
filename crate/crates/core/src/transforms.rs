//! Row transforms that turn GLM, delta-method and prediction objectives into
//! the plain A-optimality problem on a modified design.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{condition_number, inverse_sqrt, SpdMatrix};
use crate::relaxation::WeightVector;

/// Poisson information weights `e^η` are clamped at `e^50`.
pub const POISSON_LOG_WEIGHT_CAP: f64 = 50.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GlmFamily {
    Logistic,
    Poisson,
}

/// A GLM family together with the pilot estimate the design is made locally optimal for.
#[derive(Clone, Debug, PartialEq)]
pub struct GlmSpec {
    pub family: GlmFamily,
    pub pilot_beta: DVector<f64>,
}

impl GlmSpec {
    pub fn new(family: GlmFamily, pilot_beta: DVector<f64>) -> Result<Self> {
        if pilot_beta.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("pilot estimate must be finite".into()));
        }
        Ok(Self { family, pilot_beta })
    }

    /// Square-root Fisher information weight at linear predictor `eta`.
    pub fn weight(&self, eta: f64) -> f64 {
        match self.family {
            GlmFamily::Logistic => {
                // e^η / (1 + e^η)² = s (1 − s) with s the logistic function.
                let s = 1.0 / (1.0 + (-eta).exp());
                (s * (1.0 - s)).sqrt()
            }
            GlmFamily::Poisson => (0.5 * eta.min(POISSON_LOG_WEIGHT_CAP)).exp(),
        }
    }
}

/// Scales each row by its information weight at `η̌_i = x_iᵀ β̌`.
pub fn glm_transform(x: &DesignMatrix, spec: &GlmSpec) -> Result<DesignMatrix> {
    if spec.pilot_beta.len() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "pilot estimate has {} coefficients, design has {} columns",
            spec.pilot_beta.len(),
            x.p()
        )));
    }
    x.map_rows(|_, row| row * spec.weight(row.dot(&spec.pilot_beta)))
}

/// Maps `x_i ↦ P̌^{-1} x_i` where `P̌ P̌ᵀ = Ǧ = GᵀG` is the Cholesky factorization.
///
/// Afterwards `tr[(X̃ᵀX̃)^{-1}] = tr[Ǧ (XᵀX)^{-1}]`.
pub fn delta_transform(x: &DesignMatrix, g_gradient: &DMatrix<f64>) -> Result<DesignMatrix> {
    if g_gradient.ncols() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "gradient has {} columns, design has {}",
            g_gradient.ncols(),
            x.p()
        )));
    }
    let g = crate::design::symmetrize(g_gradient.tr_mul(g_gradient));
    let factor = SpdMatrix::new(g)?;
    let l = factor.cholesky().l();
    // X̃ = X L^{-T}, i.e. X̃ᵀ = L^{-1} Xᵀ.
    let mut xt = x.matrix().transpose();
    if !l.solve_lower_triangular_mut(&mut xt) {
        return Err(Error::SingularMatrix { column: 0, pivot: 0.0 });
    }
    DesignMatrix::new(xt.transpose())
}

/// Maps `x_i ↦ Σ̂_Z^{-1/2} x_i` with `Σ̂_Z = ZᵀZ / m`.
pub fn prediction_transform(x: &DesignMatrix, z: &DMatrix<f64>) -> Result<DesignMatrix> {
    if z.ncols() != x.p() {
        return Err(Error::DimensionMismatch(format!(
            "prediction design has {} columns, pool has {}",
            z.ncols(),
            x.p()
        )));
    }
    let m = z.nrows() as f64;
    let sigma_z = SpdMatrix::new(crate::design::symmetrize(z.tr_mul(z) / m))?;
    let root = inverse_sqrt(&sigma_z);
    DesignMatrix::new(x.matrix() * root)
}

/// `‖Σ*^{-1}‖₂ · κ(Σ*) · ‖X‖∞²` with `Σ* = Xᵀ diag(π) X` and `‖X‖∞` the maximum absolute row sum.
///
/// Invariant under `X ↦ ξX` for fixed `π`.
pub fn conditioning_diagnostic(x: &DesignMatrix, pi: &WeightVector) -> Result<f64> {
    let sigma = x.weighted_gram(pi.as_slice());
    let spd = SpdMatrix::new(sigma.clone()).map_err(|_| Error::SingularWeighting)?;
    let eig = nalgebra::SymmetricEigen::new(spd.entries().clone()).eigenvalues;
    let inv_norm = 1.0 / eig.min();
    let row_sum = x.matrix().row_iter().map(|r| r.abs().sum()).fold(0.0, f64::max);
    Ok(inv_norm * condition_number(&sigma) * row_sum * row_sum)
}
