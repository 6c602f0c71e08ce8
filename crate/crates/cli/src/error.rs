//! Failures and their exit codes: 1 for usage, 2 for data, numerical and I/O failures.

use std::path::Path;

use crate::ingest::IngestError;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Ingest(#[from] IngestError),

    #[error(transparent)]
    Numerical(#[from] optsel::Error),

    #[error("cannot write {path}: {source}")]
    Output { path: String, source: std::io::Error },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            _ => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        use optsel::Error as E;
        match self {
            CliError::Usage(_) => "usage",
            CliError::Ingest(e) => e.kind(),
            CliError::Output { .. } => "io",
            CliError::Numerical(e) => match e {
                E::SingularMatrix { .. } => "singular-matrix",
                E::NotSymmetric { .. } => "not-symmetric",
                E::DowndateSingular { .. } => "downdate-singular",
                E::SingularWeighting => "singular-weighting",
                E::InfeasibleBall { .. } => "infeasible-ball",
                E::EmptySelection { .. } => "empty-selection",
                E::RankCollapse => "rank-collapse",
                E::DimensionMismatch(_) => "dimension-mismatch",
                E::InvalidArgument(_) => "invalid-argument",
            },
        }
    }

    /// `{"error": {"kind": ..., "message": ...}}`.
    pub fn to_json(&self) -> String {
        serde_json::json!({ "error": { "kind": self.kind(), "message": self.to_string() } }).to_string()
    }

    pub fn output(path: &Path, source: std::io::Error) -> Self {
        CliError::Output { path: path.display().to_string(), source }
    }
}
