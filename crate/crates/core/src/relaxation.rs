//! Continuous relaxation of the A-optimal subset problem.
//!
//! Minimizes `f(π) = tr[(Xᵀ diag(π) X)^{-1}]` over `π ≥ 0, ‖π‖₁ ≤ k` (and
//! `‖π‖∞ ≤ 1` when sampling without replacement) by projected gradient
//! descent with Armijo backtracking. The optimum value is the minimax
//! lower bound used to certify every selector's output.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;

/// Whether a design point may be measured more than once.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    WithReplacement,
    WithoutReplacement,
}

impl Mode {
    /// `ℓ∞` radius of the feasible set.
    pub fn box_cap(self) -> f64 {
        match self {
            Mode::WithReplacement => f64::INFINITY,
            Mode::WithoutReplacement => 1.0,
        }
    }
}

/// Relaxed selection weights `π`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightVector {
    values: DVector<f64>,
    budget_k: f64,
    box_capped: bool,
}

impl WeightVector {
    /// Validates `π ≥ 0`, `Σπ ≤ k + 1e-9` and, when capped, `π ≤ 1 + 1e-12`.
    pub fn new(values: DVector<f64>, budget_k: f64, box_capped: bool) -> Result<Self> {
        if !(budget_k > 0.0) {
            return Err(Error::InvalidArgument(format!("budget must be positive, got {budget_k}")));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidArgument(format!("weight {i} is negative or non-finite")));
        }
        let total = values.sum();
        if total > budget_k + 1e-9 {
            return Err(Error::InvalidArgument(format!("weights sum to {total}, above the budget {budget_k}")));
        }
        if box_capped {
            if let Some(i) = values.iter().position(|v| *v > 1.0 + 1e-12) {
                return Err(Error::InvalidArgument(format!("weight {i} exceeds the unit cap")));
            }
        }
        Ok(Self { values, budget_k, box_capped })
    }

    /// The flat starting point `π_i = k/n`.
    pub fn flat(n: usize, k: f64, mode: Mode) -> Result<Self> {
        Self::new(DVector::from_element(n, k / n as f64), k, mode == Mode::WithoutReplacement)
    }

    pub fn values(&self) -> &DVector<f64> {
        &self.values
    }

    pub fn as_slice(&self) -> &[f64] {
        self.values.as_slice()
    }

    pub fn budget(&self) -> f64 {
        self.budget_k
    }

    pub fn box_capped(&self) -> bool {
        self.box_capped
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn l1_norm(&self) -> f64 {
        self.values.sum()
    }

    /// Indices whose weight exceeds `threshold`, ascending.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        self.values.iter().enumerate().filter(|(_, v)| **v > threshold).map(|(i, _)| i).collect()
    }

    /// Support with the default threshold `1e-6 · k / n`.
    pub fn default_support(&self) -> Vec<usize> {
        self.support(support_threshold(self.budget_k, self.len()))
    }
}

/// Weight below which a relaxed coordinate counts as zero.
pub fn support_threshold(k: f64, n: usize) -> f64 {
    1e-6 * k / n as f64
}

/// Projected gradient descent settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Sufficient-decrease constant, in `(0, 1/2]`.
    pub alpha: f64,
    /// Step shrink factor, in `(0, 1)`.
    pub beta: f64,
    pub max_iters: usize,
    /// Stop once the relative objective decrease of an iteration falls below this.
    pub rel_tol: f64,
    /// Bisection tolerance of the projection, relative to the largest coordinate projected.
    pub projection_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { alpha: 0.3, beta: 0.5, max_iters: 500, rel_tol: 1e-8, projection_tol: 1e-10 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha <= 0.5) {
            return Err(Error::InvalidArgument(format!("alpha must lie in (0, 0.5], got {}", self.alpha)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::InvalidArgument(format!("beta must lie in (0, 1), got {}", self.beta)));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidArgument("max_iters must be positive".into()));
        }
        if !(self.rel_tol >= 0.0) || !(self.projection_tol >= 0.0) {
            return Err(Error::InvalidArgument("tolerances must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SolverStatus {
    Converged,
    MaxIters,
}

/// One accepted projected-gradient step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterationRecord {
    /// Objective after the step.
    pub objective: f64,
    /// Number of backtracking shrinks before acceptance.
    pub step_exponent: u32,
    /// Step length actually taken, `t₀ · βˢ`.
    pub step: f64,
    /// Euclidean norm of the gradient at the start of the iteration.
    pub gradient_norm: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverTrace {
    pub initial_objective: f64,
    pub iterations: Vec<IterationRecord>,
    pub status: SolverStatus,
}

impl SolverTrace {
    pub fn final_objective(&self) -> f64 {
        self.iterations.last().map_or(self.initial_objective, |r| r.objective)
    }

    /// True when no accepted step increased the objective.
    pub fn is_monotone(&self) -> bool {
        let mut prev = self.initial_objective;
        self.iterations.iter().all(|r| {
            let ok = r.objective <= prev;
            prev = r.objective;
            ok
        })
    }
}

fn weighted_gram(pi: &[f64], x: &DesignMatrix) -> Result<SpdMatrix> {
    if pi.len() != x.n() {
        return Err(Error::DimensionMismatch(format!("{} weights for a pool of {} rows", pi.len(), x.n())));
    }
    SpdMatrix::new(x.weighted_gram(pi)).map_err(|_| Error::SingularWeighting)
}

/// `f(π) = tr[(Xᵀ diag(π) X)^{-1}]`.
pub fn objective(pi: &WeightVector, x: &DesignMatrix) -> Result<f64> {
    objective_raw(pi.as_slice(), x)
}

pub(crate) fn objective_raw(pi: &[f64], x: &DesignMatrix) -> Result<f64> {
    Ok(weighted_gram(pi, x)?.trace_inverse())
}

/// `Σ̃^{-1} Xᵀ`, the `p×n` block every derivative is built from.
fn solved_rows(pi: &[f64], x: &DesignMatrix) -> Result<DMatrix<f64>> {
    let sigma = weighted_gram(pi, x)?;
    Ok(sigma.solve(&x.matrix().transpose()))
}

/// `∂f/∂π_i = −x_iᵀ Σ̃^{-2} x_i`.
pub fn gradient(pi: &WeightVector, x: &DesignMatrix) -> Result<DVector<f64>> {
    gradient_raw(pi.as_slice(), x)
}

pub(crate) fn gradient_raw(pi: &[f64], x: &DesignMatrix) -> Result<DVector<f64>> {
    let z = solved_rows(pi, x)?;
    Ok(DVector::from_iterator(z.ncols(), z.column_iter().map(|c| -c.norm_squared())))
}

/// `H = 2 (X Σ̃^{-2} Xᵀ) ∘ (X Σ̃^{-1} Xᵀ)`, an `n×n` matrix. Intended for small pools.
pub fn hessian(pi: &WeightVector, x: &DesignMatrix) -> Result<DMatrix<f64>> {
    let z = solved_rows(pi.as_slice(), x)?;
    let second = z.tr_mul(&z);
    let first = x.matrix() * &z;
    Ok(crate::design::symmetrize(second.component_mul(&first) * 2.0))
}

/// Euclidean projection of a non-negative point onto `{x ≥ 0, ‖x‖₁ ≤ c1, ‖x‖∞ ≤ c2}`.
///
/// `c2 = +∞` drops the box. Negative input coordinates are clamped to zero
/// first, which does not change the projection onto the non-negative orthant.
/// The `ℓ1` multiplier is found by bisection on
/// `h(λ) = Σ min(max(π_i − λ, 0), c2) − c1` until `−delta ≤ h(λ) ≤ 0`, so the
/// result never exceeds the `ℓ1` budget.
pub fn project_l1_linf(point: &[f64], c1: f64, c2: f64, delta: f64) -> Result<Vec<f64>> {
    if !(c1 > 0.0) || !(c2 > 0.0) {
        return Err(Error::InfeasibleBall { c1, c2 });
    }
    let pi: Vec<f64> = point.iter().map(|v| v.max(0.0)).collect();
    let clip = |lambda: f64| -> Vec<f64> { pi.iter().map(|v| (v - lambda).max(0.0).min(c2)).collect() };
    let h = |lambda: f64| -> f64 { pi.iter().map(|v| (v - lambda).max(0.0).min(c2)).sum::<f64>() - c1 };

    if h(0.0) <= 0.0 {
        return Ok(clip(0.0));
    }
    let mut lo = 0.0;
    let mut hi = pi.iter().copied().fold(0.0, f64::max);
    let mut lambda = hi;
    // Each halving is exact in binary, so ~1100 halvings reach adjacent floats for any range.
    for _ in 0..2200 {
        let value = h(lambda);
        if (-delta..=0.0).contains(&value) {
            break;
        }
        if value > 0.0 {
            lo = lambda;
        } else {
            hi = lambda;
        }
        let mid = 0.5 * (lo + hi);
        if mid == lo || mid == hi {
            // Interval exhausted; keep the feasible side.
            lambda = hi;
            break;
        }
        lambda = mid;
    }
    Ok(clip(lambda))
}

/// Projected gradient descent on the relaxation from the flat start `π_i = k/n`.
///
/// The first trial step of iteration 0 moves the largest coordinate by roughly
/// its own size; each later iteration first tries `1/β` times the previous
/// accepted step and backtracks by `β` from there.
pub fn solve_relaxation(
    x: &DesignMatrix,
    k: usize,
    mode: Mode,
    cfg: &SolverConfig,
) -> Result<(WeightVector, SolverTrace)> {
    cfg.validate()?;
    let (n, p) = (x.n(), x.p());
    if k < p {
        return Err(Error::InvalidArgument(format!("budget k = {k} is below the dimension p = {p}")));
    }
    if mode == Mode::WithoutReplacement && k > n {
        return Err(Error::InvalidArgument(format!(
            "budget k = {k} exceeds the pool size n = {n} without replacement"
        )));
    }
    let kf = k as f64;
    let cap = mode.box_cap();
    let mut pi = vec![kf / n as f64; n];
    let mut f = objective_raw(&pi, x)?;
    let initial_objective = f;
    let mut iterations = Vec::new();
    let mut status = SolverStatus::MaxIters;
    let mut base_step: Option<f64> = None;

    for _ in 0..cfg.max_iters {
        let g = gradient_raw(&pi, x)?;
        let gnorm = g.norm();
        let gmax = g.amax();
        if !(gmax > 0.0) {
            status = SolverStatus::Converged;
            break;
        }
        let t0 = match base_step {
            None => pi.iter().copied().fold(0.0, f64::max) / gmax,
            Some(prev) => prev / cfg.beta,
        };

        let mut accepted = None;
        for s in 0..200u32 {
            let t = t0 * cfg.beta.powi(s as i32);
            let moved: Vec<f64> = pi.iter().zip(g.iter()).map(|(v, gi)| v - t * gi).collect();
            let delta = cfg.projection_tol * moved.iter().copied().fold(0.0, f64::max);
            let candidate = project_l1_linf(&moved, kf, cap, delta)?;
            let fc = objective_raw(&candidate, x).unwrap_or(f64::INFINITY);
            let directional: f64 = g.iter().zip(candidate.iter().zip(&pi)).map(|(gi, (c, v))| gi * (c - v)).sum();
            if fc.is_finite() && fc - f <= cfg.alpha * directional {
                accepted = Some((s, t, candidate, fc));
                break;
            }
        }
        let Some((s, t, candidate, fc)) = accepted else {
            // No representable step decreases the objective.
            status = SolverStatus::Converged;
            break;
        };
        let decrease = (f - fc) / f;
        pi = candidate;
        f = fc;
        base_step = Some(t);
        iterations.push(IterationRecord { objective: f, step_exponent: s, step: t, gradient_norm: gnorm });
        if decrease < cfg.rel_tol {
            status = SolverStatus::Converged;
            break;
        }
    }

    let values = DVector::from_vec(pi);
    let weights = WeightVector::new(values, kf, mode == Mode::WithoutReplacement)?;
    Ok((weights, SolverTrace { initial_objective, iterations, status }))
}

/// `f_b*(k; X)`: the relaxation optimum, a lower bound on `tr[(X_Sᵀ X_S)^{-1}]`
/// for any selection of at most `k` points in the given mode.
pub fn minimax_certificate(x: &DesignMatrix, k: usize, mode: Mode) -> Result<f64> {
    let (_, trace) = solve_relaxation(x, k, mode, &SolverConfig::default())?;
    Ok(trace.final_objective())
}
