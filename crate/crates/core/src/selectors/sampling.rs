//! Randomized rounding of the relaxed weights into concrete selections.

use nalgebra::DVector;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Selection;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::relaxation::{Mode, WeightVector};

/// Row distributions derived from the relaxed optimum `π*`.
#[derive(Clone, Debug, PartialEq)]
pub struct SamplingDistributions {
    /// With replacement: `π*_j x_jᵀ Σ*^{-1} x_j / p`.
    pub p1: DVector<f64>,
    /// Without replacement: `π*_j / k`.
    pub p2: DVector<f64>,
    dim: usize,
}

impl SamplingDistributions {
    /// Dimension `p` of the design the distributions were built from.
    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn build_distributions(pi_star: &WeightVector, x: &DesignMatrix) -> Result<SamplingDistributions> {
    if pi_star.len() != x.n() {
        return Err(Error::DimensionMismatch(format!("{} weights for a pool of {} rows", pi_star.len(), x.n())));
    }
    let sigma = SpdMatrix::new(x.weighted_gram(pi_star.as_slice())).map_err(|_| Error::SingularWeighting)?;
    let solved = sigma.solve(&x.matrix().transpose());
    let p = x.p() as f64;
    let k = pi_star.budget();
    let p1 = DVector::from_iterator(
        x.n(),
        (0..x.n()).map(|j| {
            let leverage = x.matrix().row(j).transpose().dot(&solved.column(j));
            pi_star.values()[j] * leverage / p
        }),
    );
    let p2 = pi_star.values() / k;
    Ok(SamplingDistributions { p1, p2, dim: x.p() })
}

/// Copies contributed by one with-replacement draw of row `i`: `⌈π*_i / (k p1_i)⌉`.
fn replicate_count(pi: f64, k: usize, p1: f64) -> usize {
    let ratio = pi / (k as f64 * p1);
    // Absorb rounding so that an exact ratio of 1 is not pushed to 2.
    (ratio * (1.0 - 1e-12)).ceil().max(1.0) as usize
}

fn check_inputs(dists: &SamplingDistributions, pi_star: &WeightVector, k: usize) -> Result<()> {
    if dists.p1.len() != pi_star.len() {
        return Err(Error::DimensionMismatch("distributions and weights differ in length".into()));
    }
    if k == 0 {
        return Err(Error::InvalidArgument("budget must be positive".into()));
    }
    Ok(())
}

fn finish(counts: Vec<(usize, usize)>, mode: Mode, k: usize, required: usize) -> Result<Selection> {
    let sel = Selection::from_counts(counts, mode, k)?;
    if sel.total() < required {
        return Err(Error::EmptySelection { drawn: sel.total(), required });
    }
    Ok(sel)
}

fn categorical(p1: &DVector<f64>) -> Result<WeightedIndex<f64>> {
    WeightedIndex::new(p1.iter().map(|v| v.max(0.0)))
        .map_err(|e| Error::InvalidArgument(format!("invalid sampling distribution: {e}")))
}

/// Soft-budget sampling: the selection size is `O(k)` with high probability.
///
/// With replacement, `k` rows are drawn from `p1` and each contributes
/// `⌈π*_i / (k p1_i)⌉` copies. Without replacement, every row is kept
/// independently with probability `k p2_i = π*_i`.
pub fn sample_soft(
    dists: &SamplingDistributions,
    pi_star: &WeightVector,
    k: usize,
    mode: Mode,
    rng_seed: u64,
) -> Result<Selection> {
    check_inputs(dists, pi_star, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts = Vec::new();
    match mode {
        Mode::WithReplacement => {
            let law = categorical(&dists.p1)?;
            for _ in 0..k {
                let i = law.sample(&mut rng);
                counts.push((i, replicate_count(pi_star.values()[i], k, dists.p1[i])));
            }
        }
        Mode::WithoutReplacement => {
            for i in 0..dists.p2.len() {
                let rate = (k as f64 * dists.p2[i]).clamp(0.0, 1.0);
                if rng.random_bool(rate) {
                    counts.push((i, 1));
                }
            }
        }
    }
    finish(counts, mode, k, dists.dim())
}

/// Hard-budget sampling: the selection never holds more than `k` measurements.
///
/// Draws proceed as in [`sample_soft`] (rows visited in a seeded uniform
/// permutation without replacement) and stop just before the first draw that
/// would push the total past `k`, or when every row has been visited.
pub fn sample_hard(
    dists: &SamplingDistributions,
    pi_star: &WeightVector,
    k: usize,
    mode: Mode,
    rng_seed: u64,
) -> Result<Selection> {
    check_inputs(dists, pi_star, k)?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut counts = Vec::new();
    let mut total = 0usize;
    match mode {
        Mode::WithReplacement => {
            let law = categorical(&dists.p1)?;
            loop {
                let i = law.sample(&mut rng);
                let w = replicate_count(pi_star.values()[i], k, dists.p1[i]);
                if total + w > k {
                    break;
                }
                total += w;
                counts.push((i, w));
            }
        }
        Mode::WithoutReplacement => {
            let mut order: Vec<usize> = (0..dists.p2.len()).collect();
            order.shuffle(&mut rng);
            for i in order {
                let rate = (k as f64 * dists.p2[i]).clamp(0.0, 1.0);
                if rng.random_bool(rate) {
                    if total + 1 > k {
                        break;
                    }
                    total += 1;
                    counts.push((i, 1));
                }
            }
        }
    }
    finish(counts, mode, k, dists.dim())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relaxation::{solve_relaxation, SolverConfig};

    fn identity_case(p: usize) -> (DesignMatrix, WeightVector) {
        let x = DesignMatrix::identity(p);
        let pi = WeightVector::new(DVector::from_element(p, 1.0), p as f64, true).unwrap();
        (x, pi)
    }

    #[test]
    fn identity_distributions_are_uniform() {
        let (x, pi) = identity_case(4);
        let d = build_distributions(&pi, &x).unwrap();
        for j in 0..4 {
            assert!((d.p1[j] - 0.25).abs() < 1e-15);
            assert!((d.p2[j] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn block_design_leverage_ratios() {
        // Rows e1, e1, e2, 2·e2 with π* = (1, 1, 0.5, 0.5), k = 3:
        // Σ* = diag(2, 0.5 + 2) so leverages are 1/2, 1/2, 1/2.5, 4/2.5.
        let x = DesignMatrix::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0]]).unwrap();
        let pi = WeightVector::new(DVector::from_vec(vec![1.0, 1.0, 0.5, 0.5]), 3.0, true).unwrap();
        let d = build_distributions(&pi, &x).unwrap();
        let expected = [0.25, 0.25, 0.1, 0.4];
        for (j, want) in expected.iter().enumerate() {
            assert!((d.p1[j] - want).abs() < 1e-14, "p1[{j}] = {}", d.p1[j]);
        }
        assert!((d.p1.sum() - 1.0).abs() < 1e-12);
        assert!((d.p2.sum() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn soft_without_replacement_keeps_unit_weight_rows() {
        let (x, pi) = identity_case(3);
        let d = build_distributions(&pi, &x).unwrap();
        for seed in 0..20 {
            let s = sample_soft(&d, &pi, 3, Mode::WithoutReplacement, seed).unwrap();
            assert_eq!(s.indices(), &[0, 1, 2]);
        }
    }

    #[test]
    fn soft_with_replacement_on_flat_weights_draws_exactly_k() {
        let (x, pi) = identity_case(5);
        let d = build_distributions(&pi, &x).unwrap();
        for seed in 0..50 {
            match sample_soft(&d, &pi, 5, Mode::WithReplacement, seed) {
                Ok(s) => assert_eq!(s.total(), 5),
                Err(Error::EmptySelection { drawn, .. }) => assert_eq!(drawn, 5),
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn hard_budget_on_concentrated_weights_returns_those_rows() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 0.0], vec![0.3, 0.3], vec![0.0, 1.0], vec![0.2, -0.1]]).unwrap();
        let pi = WeightVector::new(DVector::from_vec(vec![1.0, 0.0, 1.0, 0.0]), 2.0, true).unwrap();
        let d = build_distributions(&pi, &x).unwrap();
        for seed in 0..20 {
            let s = sample_hard(&d, &pi, 2, Mode::WithoutReplacement, seed).unwrap();
            assert_eq!(s.indices(), &[0, 2]);
        }
    }

    #[test]
    fn hard_budget_is_never_exceeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let values: Vec<f64> = (0..40 * 3).map(|_| rng.random_range(-1.0..1.0)).collect();
        let x = DesignMatrix::from_row_slice(40, 3, &values).unwrap();
        for mode in [Mode::WithReplacement, Mode::WithoutReplacement] {
            let (pi, _) = solve_relaxation(&x, 8, mode, &SolverConfig::default()).unwrap();
            let d = build_distributions(&pi, &x).unwrap();
            for seed in 0..300 {
                match sample_hard(&d, &pi, 8, mode, seed) {
                    Ok(s) => assert!(s.total() <= 8),
                    Err(Error::EmptySelection { drawn, .. }) => assert!(drawn < 3),
                    Err(e) => panic!("{e}"),
                }
            }
        }
    }

    #[test]
    fn same_seed_same_selection() {
        let (x, pi) = identity_case(4);
        let d = build_distributions(&pi, &x).unwrap();
        let a = sample_soft(&d, &pi, 4, Mode::WithReplacement, 99);
        let b = sample_soft(&d, &pi, 4, Mode::WithReplacement, 99);
        assert_eq!(a, b);
    }
}
