//! How the support of the relaxed optimum grows with the dimension.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::generate::{generate_design, DesignSpec};
use crate::error::{Error, Result};
use crate::relaxation::{solve_relaxation, Mode, SolverConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportPoint {
    pub p: usize,
    pub k: usize,
    /// Thresholded `‖π*‖₀`.
    pub support: usize,
    /// `‖π*‖₀ − k`.
    pub excess: i64,
    /// `k + p(p+1)/2`.
    pub bound: usize,
}

/// Least-squares fit `excess ≈ c0 + c1 p + c2 p²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadraticFit {
    pub intercept: f64,
    pub linear: f64,
    pub quadratic: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SupportStudy {
    pub base: DesignSpec,
    pub k_per_p: usize,
    pub points: Vec<SupportPoint>,
    pub fit: QuadraticFit,
}

/// Solves the without-replacement relaxation at `k = k_per_p · p` for every
/// `p` on designs drawn from `base` (only `p` varies), and fits the excess support.
pub fn support_study(
    base: &DesignSpec,
    p_values: &[usize],
    k_per_p: usize,
    cfg: &SolverConfig,
) -> Result<SupportStudy> {
    if p_values.len() < 3 {
        return Err(Error::InvalidArgument("a quadratic fit needs at least three dimensions".into()));
    }
    let mut points = Vec::with_capacity(p_values.len());
    for &p in p_values {
        let spec = DesignSpec { p, ..*base };
        let x = generate_design(&spec)?;
        let k = k_per_p * p;
        let (w, _) = solve_relaxation(&x, k, Mode::WithoutReplacement, cfg)?;
        let support = w.default_support().len();
        points.push(SupportPoint { p, k, support, excess: support as i64 - k as i64, bound: k + p * (p + 1) / 2 });
    }
    let ps: Vec<f64> = points.iter().map(|pt| pt.p as f64).collect();
    let ys: Vec<f64> = points.iter().map(|pt| pt.excess as f64).collect();
    let fit = quadratic_fit(&ps, &ys)?;
    Ok(SupportStudy { base: *base, k_per_p, points, fit })
}

/// Ordinary least squares for `y ≈ c0 + c1 t + c2 t²`.
pub fn quadratic_fit(t: &[f64], y: &[f64]) -> Result<QuadraticFit> {
    if t.len() != y.len() || t.len() < 3 {
        return Err(Error::InvalidArgument("quadratic fit needs >= 3 paired samples".into()));
    }
    let a = DMatrix::from_fn(t.len(), 3, |i, j| t[i].powi(j as i32));
    let b = DVector::from_column_slice(y);
    let c =
        a.svd(true, true).solve(&b, 1e-12).map_err(|e| Error::InvalidArgument(format!("quadratic fit failed: {e}")))?;
    Ok(QuadraticFit { intercept: c[0], linear: c[1], quadratic: c[2] })
}
