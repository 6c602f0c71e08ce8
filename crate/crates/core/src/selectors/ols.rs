use nalgebra::DVector;

use super::Selection;
use crate::design::DesignMatrix;
use crate::error::{Error, Result};

/// Least squares on the selected rows, `(X_Sᵀ X_S)^{-1} X_Sᵀ y_S`.
///
/// `y` holds one response per measurement in [`Selection::expanded`] order, so a
/// row selected twice contributes two independent responses.
pub fn subset_ols(x: &DesignMatrix, sel: &Selection, y: &[f64]) -> Result<DVector<f64>> {
    let rows = sel.expanded();
    if rows.len() != y.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} responses for {} selected measurements",
            y.len(),
            rows.len()
        )));
    }
    let gram = sel.gram(x)?;
    let xs = x.select_rows(&rows);
    let rhs = xs.tr_mul(&DVector::from_row_slice(y));
    Ok(gram.solve_vec(&rhs))
}
