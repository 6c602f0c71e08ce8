use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Which rank-one candidate scores to re-check against a fresh factorization.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum AuditLevel {
    #[default]
    Off,
    /// One randomly chosen finite candidate per step.
    Sampled { seed: u64 },
    /// Every finite candidate.
    All,
}

/// Agreement between incrementally updated scores and refactorized ones.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ScoreAudit {
    pub checked: usize,
    pub max_rel_error: f64,
}

impl ScoreAudit {
    pub(crate) fn record(&mut self, fast: f64, exact: f64) {
        self.checked += 1;
        let err = if exact.is_finite() && fast.is_finite() {
            (fast - exact).abs() / exact.abs().max(f64::MIN_POSITIVE)
        } else {
            f64::INFINITY
        };
        self.max_rel_error = self.max_rel_error.max(err);
    }
}

/// Decides, candidate by candidate, whether a score is audited.
pub(crate) struct Auditor {
    level: AuditLevel,
    rng: Option<ChaCha8Rng>,
    pub(crate) report: ScoreAudit,
}

impl Auditor {
    pub(crate) fn new(level: AuditLevel) -> Self {
        let rng = match level {
            AuditLevel::Sampled { seed } => Some(ChaCha8Rng::seed_from_u64(seed)),
            _ => None,
        };
        Self { level, rng, report: ScoreAudit::default() }
    }

    pub(crate) fn enabled(&self) -> bool {
        self.level != AuditLevel::Off
    }

    /// Positions (into a list of `count` finite candidates) to audit this step.
    pub(crate) fn pick(&mut self, count: usize) -> Vec<usize> {
        match (self.level, self.rng.as_mut()) {
            (AuditLevel::All, _) => (0..count).collect(),
            (AuditLevel::Sampled { .. }, Some(rng)) if count > 0 => vec![rng.random_range(0..count)],
            _ => Vec::new(),
        }
    }
}
