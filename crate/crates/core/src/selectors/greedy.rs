//! Greedy backward removal seeded by the support of the relaxed optimum.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::audit::{AuditLevel, Auditor, ScoreAudit};
use super::Selection;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::{sherman_morrison_update, SpdMatrix, DOWNDATE_TOL};
use crate::relaxation::{objective, solve_relaxation, Mode, SolverConfig, WeightVector};

/// Rank-one downdates between fresh refactorizations of the working inverse.
const REFRESH_EVERY: usize = 32;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GreedyTrace {
    /// `F(S_t; X)` before the first removal and after each one.
    pub objectives: Vec<f64>,
    pub audit: ScoreAudit,
}

/// Removes one row at a time from `s0`, always the one whose removal leaves the
/// smallest `tr[(X_Sᵀ X_S)^{-1}]`, until `k` rows remain.
pub fn greedy_remove(x: &DesignMatrix, s0: &[usize], k: usize) -> Result<Selection> {
    greedy_remove_traced(x, s0, k, AuditLevel::Off).map(|(sel, _)| sel)
}

pub fn greedy_remove_traced(
    x: &DesignMatrix,
    s0: &[usize],
    k: usize,
    audit: AuditLevel,
) -> Result<(Selection, GreedyTrace)> {
    let p = x.p();
    let start = Selection::from_set(s0.iter().copied(), k)?;
    start.check_bounds(x.n())?;
    if start.distinct() < k || k < p {
        return Err(Error::InvalidArgument(format!(
            "greedy removal needs |S0| >= k >= p, got |S0| = {}, k = {k}, p = {p}",
            start.distinct()
        )));
    }
    let mut current: Vec<usize> = start.indices().to_vec();
    let mut inv = start.gram(x).map_err(|_| Error::RankCollapse)?.inverse();
    let mut trace = GreedyTrace { objectives: vec![inv.trace()], audit: ScoreAudit::default() };
    let mut auditor = Auditor::new(audit);
    let mut since_refresh = 0;

    while current.len() > k {
        let rows = x.select_rows(&current);
        let solved = &rows * &inv;
        let tr = inv.trace();
        let scores: Vec<f64> = (0..current.len())
            .map(|r| {
                let d = rows.row(r).dot(&solved.row(r));
                let e = solved.row(r).norm_squared();
                let denom = 1.0 - d;
                if denom > DOWNDATE_TOL {
                    tr + e / denom
                } else {
                    f64::INFINITY
                }
            })
            .collect();

        if auditor.enabled() {
            let finite: Vec<usize> = (0..scores.len()).filter(|&r| scores[r].is_finite()).collect();
            for pos in auditor.pick(finite.len()) {
                let r = finite[pos];
                let exact = refactorized_without(x, &current, r);
                auditor.report.record(scores[r], exact);
            }
        }

        // Ascending indices plus a strict comparison: ties go to the lowest index.
        let mut best = None;
        for (r, &s) in scores.iter().enumerate() {
            if s.is_finite() && best.is_none_or(|(_, b)| s < b) {
                best = Some((r, s));
            }
        }
        let Some((r, _)) = best else {
            return Err(Error::RankCollapse);
        };

        let removed = current.remove(r);
        since_refresh += 1;
        inv = if since_refresh >= REFRESH_EVERY {
            since_refresh = 0;
            fresh_inverse(x, &current)?
        } else {
            match sherman_morrison_update(&inv, &x.row(removed), -1.0) {
                Ok(next) => next,
                Err(_) => fresh_inverse(x, &current)?,
            }
        };
        trace.objectives.push(inv.trace());
    }
    trace.audit = auditor.report;
    Ok((Selection::from_set(current, k)?, trace))
}

fn fresh_inverse(x: &DesignMatrix, rows: &[usize]) -> Result<DMatrix<f64>> {
    let ones = vec![1; rows.len()];
    Ok(SpdMatrix::new(x.subset_gram(rows, &ones)).map_err(|_| Error::RankCollapse)?.inverse())
}

fn refactorized_without(x: &DesignMatrix, rows: &[usize], skip: usize) -> f64 {
    let kept: Vec<usize> = rows.iter().enumerate().filter(|(r, _)| *r != skip).map(|(_, &i)| i).collect();
    let ones = vec![1; kept.len()];
    SpdMatrix::new(x.subset_gram(&kept, &ones)).map_or(f64::INFINITY, |m| m.trace_inverse())
}

/// Starting set for greedy removal: the thresholded support of `π*`, padded
/// with the next-largest weights if thresholding left fewer than `k` rows.
pub fn greedy_seed(pi_star: &WeightVector, k: usize) -> Vec<usize> {
    let mut support = pi_star.default_support();
    if support.len() < k {
        let mut rest: Vec<usize> = (0..pi_star.len()).filter(|i| !support.contains(i)).collect();
        let w = pi_star.values();
        rest.sort_by(|a, b| w[*b].total_cmp(&w[*a]).then(a.cmp(b)));
        support.extend(rest.into_iter().take(k - support.len()));
        support.sort_unstable();
    }
    support
}

/// Details of a relaxation-seeded greedy run.
#[derive(Clone, Debug)]
pub struct GreedyOutcome {
    pub selection: Selection,
    pub weights: WeightVector,
    /// `|S0|`, the thresholded support size of `π*`.
    pub seed_size: usize,
    pub relaxation_objective: f64,
    pub trace: GreedyTrace,
}

/// Solves the without-replacement relaxation, then greedily trims its support to `k` rows.
pub fn greedy_select(x: &DesignMatrix, k: usize, cfg: &SolverConfig) -> Result<Selection> {
    greedy_select_traced(x, k, cfg, AuditLevel::Off).map(|o| o.selection)
}

pub fn greedy_select_traced(
    x: &DesignMatrix,
    k: usize,
    cfg: &SolverConfig,
    audit: AuditLevel,
) -> Result<GreedyOutcome> {
    if k <= x.p() {
        return Err(Error::InvalidArgument(format!("greedy selection needs k > p, got k = {k}, p = {}", x.p())));
    }
    let (weights, _) = solve_relaxation(x, k, Mode::WithoutReplacement, cfg)?;
    greedy_from_weights(x, &weights, k, audit)
}

/// Greedy removal seeded from an already solved relaxation.
pub fn greedy_from_weights(
    x: &DesignMatrix,
    weights: &WeightVector,
    k: usize,
    audit: AuditLevel,
) -> Result<GreedyOutcome> {
    let seed = greedy_seed(weights, k);
    let (selection, trace) = greedy_remove_traced(x, &seed, k, audit)?;
    Ok(GreedyOutcome {
        selection,
        weights: weights.clone(),
        seed_size: seed.len(),
        relaxation_objective: objective(weights, x)?,
        trace,
    })
}
