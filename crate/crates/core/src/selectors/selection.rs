use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::linalg::SpdMatrix;
use crate::relaxation::Mode;

/// A chosen multiset of pool rows.
///
/// Indices are kept ascending and unique; repeats are carried by
/// `multiplicities`. Without replacement every multiplicity is 1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    indices: Vec<usize>,
    multiplicities: Vec<usize>,
    mode: Mode,
    budget_k: usize,
}

impl Selection {
    /// A plain set of distinct rows.
    pub fn from_set(indices: impl IntoIterator<Item = usize>, budget_k: usize) -> Result<Self> {
        let mut sorted: Vec<usize> = indices.into_iter().collect();
        sorted.sort_unstable();
        let before = sorted.len();
        sorted.dedup();
        if sorted.len() != before {
            return Err(Error::InvalidArgument("selection without replacement repeats an index".into()));
        }
        let multiplicities = vec![1; sorted.len()];
        Ok(Self { indices: sorted, multiplicities, mode: Mode::WithoutReplacement, budget_k })
    }

    /// A multiset from `(index, count)` pairs; repeated indices are merged and zero counts dropped.
    pub fn from_counts(counts: impl IntoIterator<Item = (usize, usize)>, mode: Mode, budget_k: usize) -> Result<Self> {
        let mut merged: BTreeMap<usize, usize> = BTreeMap::new();
        for (i, c) in counts {
            if c > 0 {
                *merged.entry(i).or_default() += c;
            }
        }
        if mode == Mode::WithoutReplacement && merged.values().any(|&c| c > 1) {
            return Err(Error::InvalidArgument("selection without replacement repeats an index".into()));
        }
        let (indices, multiplicities) = merged.into_iter().unzip();
        Ok(Self { indices, multiplicities, mode, budget_k })
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.multiplicities
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn budget(&self) -> usize {
        self.budget_k
    }

    /// Number of distinct rows.
    pub fn distinct(&self) -> usize {
        self.indices.len()
    }

    /// Number of measurements, counting repeats.
    pub fn total(&self) -> usize {
        self.multiplicities.iter().sum()
    }

    /// Every measurement in index order, repeats expanded.
    pub fn expanded(&self) -> Vec<usize> {
        self.indices.iter().zip(&self.multiplicities).flat_map(|(&i, &c)| std::iter::repeat_n(i, c)).collect()
    }

    pub fn contains(&self, index: usize) -> bool {
        self.indices.binary_search(&index).is_ok()
    }

    /// Checks that every index is inside the pool.
    pub fn check_bounds(&self, n: usize) -> Result<()> {
        match self.indices.last() {
            Some(&last) if last >= n => {
                Err(Error::DimensionMismatch(format!("selection references row {last} of a pool with {n} rows")))
            }
            _ => Ok(()),
        }
    }

    /// `X_Sᵀ X_S` with repeats counted.
    pub fn gram(&self, x: &DesignMatrix) -> Result<SpdMatrix> {
        self.check_bounds(x.n())?;
        SpdMatrix::new(x.subset_gram(&self.indices, &self.multiplicities))
    }
}

/// `F(S; X) = tr[(X_Sᵀ X_S)^{-1}]`, the A-optimality value of a realized selection.
pub fn subset_objective(x: &DesignMatrix, sel: &Selection) -> Result<f64> {
    Ok(sel.gram(x)?.trace_inverse())
}
