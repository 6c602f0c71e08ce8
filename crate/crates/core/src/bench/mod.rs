//! Synthetic pools, the multi-trial runner, and report assembly.

mod generate;
mod report;
mod runner;
mod support;

pub use generate::{
    cpu_design, generate_design, haar_orthogonal, DesignKind, DesignSpec, Fixture, CPU_BETA0, CPU_N, CPU_P,
};
pub use report::{float, to_json_string, BenchmarkReport, Cell, RelaxationInfo, ReportMeta, Summary, TrialStats};
pub use runner::{
    cpu_fixture_eval, derive_seed, eval_objective, run_benchmark, run_benchmark_on, BenchConfig, Method, CPU_BUDGETS,
};
pub use support::{quadratic_fit, support_study, QuadraticFit, SupportPoint, SupportStudy};
