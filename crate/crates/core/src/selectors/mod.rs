//! Turning relaxed weights (or nothing at all) into concrete experiment subsets.

mod audit;
mod baseline;
mod exchange;
mod greedy;
mod ols;
mod sampling;
mod selection;

pub use audit::{AuditLevel, ScoreAudit};
pub use baseline::{baseline_sample, baseline_weights, BaselineMethod};
pub use exchange::{fedorov_exchange, fedorov_exchange_traced, random_start, ExchangeTrace, EXCHANGE_TOL};
pub use greedy::{
    greedy_from_weights, greedy_remove, greedy_remove_traced, greedy_seed, greedy_select, greedy_select_traced,
    GreedyOutcome, GreedyTrace,
};
pub use ols::subset_ols;
pub use sampling::{build_distributions, sample_hard, sample_soft, SamplingDistributions};
pub use selection::{subset_objective, Selection};
