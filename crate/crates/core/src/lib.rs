//! Near-A-optimal experiment selection for linear regression.
//!
//! Solve the continuous relaxation with [`solve_relaxation`], then round it
//! into a concrete [`Selection`] with one of the [`selectors`].

// `!(v > 0.0)` guards also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bench;
pub mod design;
pub mod error;
pub mod linalg;
pub mod relaxation;
pub mod selectors;
pub mod transforms;

pub use design::DesignMatrix;
pub use error::{Error, Result};
pub use linalg::{trace_inverse, SpdMatrix};
pub use relaxation::{
    gradient, hessian, minimax_certificate, objective, project_l1_linf, solve_relaxation, Mode, SolverConfig,
    SolverStatus, SolverTrace, WeightVector,
};
pub use selectors::{subset_objective, Selection};
pub use transforms::{GlmFamily, GlmSpec};
