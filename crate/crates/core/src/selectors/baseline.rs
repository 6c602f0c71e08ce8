//! Reference samplers that ignore the relaxation.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Selection;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BaselineMethod {
    /// Uniform without replacement.
    Uniform,
    /// Proportional to `x_iᵀ (XᵀX)^{-1} x_i`.
    LeverageScore,
    /// Proportional to `‖x_i‖₂`.
    PredictiveLength,
}

/// Per-row sampling weights of a proportional baseline (all ones for uniform).
pub fn baseline_weights(x: &DesignMatrix, method: BaselineMethod) -> Result<Vec<f64>> {
    Ok(match method {
        BaselineMethod::Uniform => vec![1.0; x.n()],
        BaselineMethod::LeverageScore => {
            let gram = SpdMatrix::new(x.gram())?;
            let solved = gram.solve(&x.matrix().transpose());
            (0..x.n()).map(|i| x.matrix().row(i).transpose().dot(&solved.column(i))).collect()
        }
        BaselineMethod::PredictiveLength => x.matrix().row_iter().map(|r| r.norm()).collect(),
    })
}

/// `k` distinct rows. Proportional methods draw one row at a time with
/// probability proportional to its weight, remove it, and renormalize.
pub fn baseline_sample(x: &DesignMatrix, k: usize, method: BaselineMethod, rng_seed: u64) -> Result<Selection> {
    let n = x.n();
    if k > n {
        return Err(Error::InvalidArgument(format!("cannot draw {k} distinct rows from {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    if method == BaselineMethod::Uniform {
        return Selection::from_set(sample(&mut rng, n, k), k);
    }
    let mut weights: Vec<f64> = baseline_weights(x, method)?.into_iter().map(|w| w.max(0.0)).collect();
    let mut chosen = Vec::with_capacity(k);
    for _ in 0..k {
        let total: f64 = weights.iter().sum();
        let pick = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = None;
            for (i, w) in weights.iter().enumerate() {
                if *w > 0.0 {
                    pick = Some(i);
                    if target < *w {
                        break;
                    }
                    target -= w;
                }
            }
            pick.expect("positive total implies a positive weight")
        } else {
            // Remaining rows all carry zero weight: fall back to uniform among them.
            let remaining: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            remaining[rng.random_range(0..remaining.len())]
        };
        chosen.push(pick);
        weights[pick] = 0.0;
    }
    Selection::from_set(chosen, k)
}
