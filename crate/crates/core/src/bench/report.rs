//! Benchmark report types and their JSON form.
//!
//! Numbers are written with 17 significant digits so they read back bit-exact;
//! non-finite values (failed cells) are written as the strings `"inf"`, `"-inf"`, `"nan"`.

use std::io;

use serde::{Deserialize, Serialize};

use super::generate::DesignSpec;
use super::runner::Method;
use crate::error::{Error, Result};

/// Median and quartiles of a sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    #[serde(with = "float")]
    pub median: f64,
    #[serde(with = "float")]
    pub q1: f64,
    #[serde(with = "float")]
    pub q3: f64,
}

impl Summary {
    /// Linear-interpolation quantiles; `+∞` entries sort last and propagate.
    pub fn of(values: &[f64]) -> Self {
        let mut v: Vec<f64> = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self { median: quantile(&v, 0.5), q1: quantile(&v, 0.25), q3: quantile(&v, 0.75) }
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    let (a, b) = (sorted[lo], sorted[hi]);
    if frac == 0.0 || a == b {
        a
    } else {
        a + (b - a) * frac
    }
}

/// Aggregates for one `(method, k)` cell.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: usize,
    /// Trials whose selection was empty or singular; their metrics are `+∞`.
    pub failures: usize,
    /// `F(Ŝ; X)`.
    pub objective: Summary,
    /// `‖β̂ − β₀‖² / ‖β̂_full − β₀‖²`.
    pub mse_ratio: Summary,
    /// `‖β̂ − β₀‖₂`.
    pub delta_beta_norm: Summary,
    /// `|β̂_j − β₀_j|` per coefficient, when requested.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coefficient_error: Option<Vec<Summary>>,
    /// Selection wall time in seconds; omitted in reproducible reports.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time_s: Option<Summary>,
    /// Smallest `F(Ŝ; X) / certificate` over trials whose selection fits the budget.
    #[serde(with = "float")]
    pub min_certificate_ratio: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub method: Method,
    pub k: usize,
    pub trial_stats: TrialStats,
}

/// Per-budget facts about the relaxed optimum shared by every method.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationInfo {
    pub k: usize,
    /// `f*(k; X)` without replacement, a lower bound on every `F(S; X)` with `|S| ≤ k`.
    #[serde(with = "float")]
    pub certificate: f64,
    pub support_size: usize,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportMeta {
    pub version: String,
    pub design: DesignSpec,
    pub master_seed: u64,
    pub trials: usize,
    #[serde(with = "float")]
    pub sigma: f64,
    pub budgets: Vec<usize>,
    pub methods: Vec<Method>,
    pub relaxation: Vec<RelaxationInfo>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub meta: ReportMeta,
    pub cells: Vec<Cell>,
}

impl BenchmarkReport {
    pub fn cell(&self, method: Method, k: usize) -> Option<&Cell> {
        self.cells.iter().find(|c| c.method == method && c.k == k)
    }

    /// Drops wall-time aggregates so the report depends only on the inputs.
    pub fn without_timings(mut self) -> Self {
        for c in &mut self.cells {
            c.trial_stats.wall_time_s = None;
        }
        self
    }

    pub fn to_json(&self) -> Result<String> {
        to_json_string(self)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::InvalidArgument(format!("malformed report: {e}")))
    }
}

/// Pretty JSON with every `f64` written to 17 significant digits.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String> {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, Precise::default());
    value.serialize(&mut ser).map_err(|e| Error::InvalidArgument(format!("serialization failed: {e}")))?;
    out.push(b'\n');
    String::from_utf8(out).map_err(|e| Error::InvalidArgument(e.to_string()))
}

/// `PrettyFormatter` with fixed-precision floats.
#[derive(Default)]
struct Precise(serde_json::ser::PrettyFormatter<'static>);

impl serde_json::ser::Formatter for Precise {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serde adapter writing non-finite floats as strings.
pub mod float {
    use serde::{de, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}
