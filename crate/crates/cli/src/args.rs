//! Command-line surface.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use optsel::bench::{DesignSpec, Method};
use optsel::{GlmFamily, Mode};

#[derive(Parser, Debug)]
#[command(name = "optsel", version, about = "Near A-optimal subset selection for linear regression")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Solve the continuous relaxation and write the optimal weights.
    Solve(SolveArgs),
    /// Select a subset of design points and write it with a JSON sidecar.
    Select(SelectArgs),
    /// Print the relaxation lower bound on every subset objective.
    Certificate(CertificateArgs),
    /// Run the multi-trial comparison on a synthetic pool.
    Benchmark(BenchmarkArgs),
    /// Run the comparison on the CPU fixture with per-coefficient errors.
    CpuBench(CpuBenchArgs),
    /// Track how the relaxed support grows with the dimension.
    SupportStudy(SupportStudyArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    WithRep,
    WithoutRep,
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::WithRep => Mode::WithReplacement,
            ModeArg::WithoutRep => Mode::WithoutReplacement,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    SamplingSoft,
    SamplingHard,
    Greedy,
    Fedorov,
    Uniform,
    Leverage,
    Plength,
}

impl MethodArg {
    pub fn is_randomized(self) -> bool {
        self != MethodArg::Greedy
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodArg::SamplingSoft => "sampling-soft",
            MethodArg::SamplingHard => "sampling-hard",
            MethodArg::Greedy => "greedy",
            MethodArg::Fedorov => "fedorov",
            MethodArg::Uniform => "uniform",
            MethodArg::Leverage => "leverage",
            MethodArg::Plength => "plength",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum GlmArg {
    Logistic,
    Poisson,
}

impl From<GlmArg> for GlmFamily {
    fn from(g: GlmArg) -> Self {
        match g {
            GlmArg::Logistic => GlmFamily::Logistic,
            GlmArg::Poisson => GlmFamily::Poisson,
        }
    }
}

/// Pool and optional reweighting shared by the single-design subcommands.
#[derive(Args, Debug)]
pub struct DesignArgs {
    /// Pool CSV, one design point per row.
    #[arg(long)]
    pub design: PathBuf,

    /// Reweight rows for a generalized linear model around a pilot estimate.
    #[arg(long, value_enum, requires = "pilot", conflicts_with = "predict_on")]
    pub glm: Option<GlmArg>,

    /// Pilot coefficients, one value per column, as a single CSV row or column.
    #[arg(long, requires = "glm")]
    pub pilot: Option<PathBuf>,

    /// Whiten the pool by the covariance of these prediction points.
    #[arg(long)]
    pub predict_on: Option<PathBuf>,
}

/// Relaxation solver knobs.
#[derive(Args, Debug)]
pub struct SolverArgs {
    #[arg(long, default_value_t = 500)]
    pub max_iters: usize,

    #[arg(long, default_value_t = 1e-8)]
    pub rel_tol: f64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    #[command(flatten)]
    pub design: DesignArgs,

    #[arg(long)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = ModeArg::WithoutRep)]
    pub mode: ModeArg,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Weights CSV (`index,weight`); the sidecar goes next to it as JSON.
    #[arg(long)]
    pub out: PathBuf,

    /// Omit wall-clock time so reruns are byte-identical.
    #[arg(long)]
    pub strict_repro: bool,
}

#[derive(Args, Debug)]
pub struct SelectArgs {
    #[command(flatten)]
    pub design: DesignArgs,

    #[arg(long)]
    pub k: usize,

    #[arg(long, value_enum)]
    pub method: MethodArg,

    #[arg(long, value_enum, default_value_t = ModeArg::WithoutRep)]
    pub mode: ModeArg,

    /// RNG seed; defaults to 0 and is mandatory under --strict-repro.
    #[arg(long)]
    pub seed: Option<u64>,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// Exchange cap for the Fedorov method.
    #[arg(long, default_value_t = 100_000)]
    pub max_exchanges: usize,

    /// Selection CSV (`index,multiplicity`); the sidecar goes next to it as JSON.
    #[arg(long)]
    pub out: PathBuf,

    /// Omit wall-clock time and require an explicit seed.
    #[arg(long)]
    pub strict_repro: bool,
}

#[derive(Args, Debug)]
pub struct CertificateArgs {
    #[command(flatten)]
    pub design: DesignArgs,

    #[arg(long)]
    pub k: usize,

    #[arg(long, value_enum, default_value_t = ModeArg::WithoutRep)]
    pub mode: ModeArg,

    #[command(flatten)]
    pub solver: SolverArgs,

    /// JSON output path; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct BenchmarkArgs {
    /// Pool family: `skewed:<alpha>`, `t:<df>` or `cpu`.
    #[arg(long, value_parser = parse_spec_kind)]
    pub spec: SpecKind,

    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub p: Option<usize>,

    /// Comma list and/or inclusive `start:stop:step` ranges, e.g. `100:500:100`.
    #[arg(long, value_parser = parse_list)]
    pub budgets: List,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub trials: u64,

    /// Master seed; drives the pool and every trial.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Noise standard deviation.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Comma list of methods (uniform, leverage, plength, sampling-hard, greedy, fedorov).
    #[arg(long, value_parser = parse_methods)]
    pub methods: Option<Methods>,

    /// Worker threads; overrides OPTSEL_THREADS.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    /// Also report per-coefficient absolute errors.
    #[arg(long)]
    pub per_coefficient: bool,

    #[arg(long)]
    pub out: Option<PathBuf>,

    /// Omit wall-clock times and require an explicit seed.
    #[arg(long)]
    pub strict_repro: bool,
}

#[derive(Args, Debug)]
pub struct CpuBenchArgs {
    #[arg(long, value_parser = parse_list, default_value = "20,30,50,75")]
    pub budgets: List,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..), default_value_t = 100)]
    pub trials: u64,

    #[arg(long)]
    pub seed: Option<u64>,

    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    pub threads: Option<u64>,

    #[arg(long)]
    pub out: Option<PathBuf>,

    #[arg(long)]
    pub strict_repro: bool,
}

#[derive(Args, Debug)]
pub struct SupportStudyArgs {
    #[arg(long, value_parser = parse_spec_kind)]
    pub spec: SpecKind,

    #[arg(long)]
    pub n: usize,

    /// Dimensions to sweep, in the budget list syntax.
    #[arg(long, value_parser = parse_list)]
    pub p_values: List,

    /// Budget per dimension: `k = k_per_p · p`.
    #[arg(long, default_value_t = 2)]
    pub k_per_p: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    #[command(flatten)]
    pub solver: SolverArgs,

    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpecKind {
    Skewed(f64),
    T(u32),
    Cpu,
}

impl SpecKind {
    /// Full spec; `n` and `p` are required except for the fixture.
    pub fn build(self, n: Option<usize>, p: Option<usize>, seed: u64) -> Result<DesignSpec, String> {
        if self == SpecKind::Cpu {
            let cpu = DesignSpec::cpu();
            if n.is_some_and(|n| n != cpu.n) || p.is_some_and(|p| p != cpu.p) {
                return Err(format!("the cpu fixture is {}x{}", cpu.n, cpu.p));
            }
            return Ok(cpu);
        }
        let (Some(n), Some(p)) = (n, p) else {
            return Err("--n and --p are required for synthetic pools".into());
        };
        Ok(match self {
            SpecKind::Skewed(alpha) => DesignSpec::skewed_gaussian(alpha, n, p, seed),
            SpecKind::T(df) => DesignSpec::heavy_tail_t(df, n, p, seed),
            SpecKind::Cpu => unreachable!(),
        })
    }
}

fn parse_spec_kind(text: &str) -> Result<SpecKind, String> {
    match text.split_once(':') {
        None if text == "cpu" => Ok(SpecKind::Cpu),
        Some(("skewed", a)) => match a.parse::<f64>() {
            Ok(alpha) if alpha.is_finite() && alpha >= 0.0 => Ok(SpecKind::Skewed(alpha)),
            _ => Err(format!("alpha must be a finite number >= 0, got {a:?}")),
        },
        Some(("t", d)) => match d.parse::<u32>() {
            Ok(df) if df >= 1 => Ok(SpecKind::T(df)),
            _ => Err(format!("df must be a positive integer, got {d:?}")),
        },
        _ => Err(format!("expected skewed:<alpha>, t:<df> or cpu, got {text:?}")),
    }
}

/// Positive integers from a budget-style list.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct List(pub Vec<usize>);

pub fn parse_list(text: &str) -> Result<List, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim) {
        let nums: Vec<&str> = part.split(':').collect();
        let num = |s: &str| s.trim().parse::<usize>().map_err(|_| format!("not a non-negative integer: {s:?}"));
        match nums[..] {
            [one] => out.push(num(one)?),
            [start, stop, step] => {
                let (start, stop, step) = (num(start)?, num(stop)?, num(step)?);
                if step == 0 || start > stop {
                    return Err(format!("range {part:?} needs step > 0 and start <= stop"));
                }
                out.extend((start..=stop).step_by(step));
            }
            _ => return Err(format!("expected an integer or start:stop:step, got {part:?}")),
        }
    }
    if out.contains(&0) {
        return Err("values must be positive".into());
    }
    Ok(List(out))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Methods(pub Vec<Method>);

fn parse_methods(text: &str) -> Result<Methods, String> {
    text.split(',')
        .map(|s| Method::parse(s.trim()).ok_or_else(|| format!("unknown method {s:?}")))
        .collect::<Result<Vec<_>, _>>()
        .map(Methods)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("20,30,50,75").unwrap().0, vec![20, 30, 50, 75]);
        assert_eq!(parse_list("100:500:100").unwrap().0, vec![100, 200, 300, 400, 500]);
        assert_eq!(parse_list("5, 10:20:5").unwrap().0, vec![5, 10, 15, 20]);
        assert!(parse_list("10:5:1").is_err());
        assert!(parse_list("1:5:0").is_err());
        assert!(parse_list("0").is_err());
        assert!(parse_list("a").is_err());
    }

    #[test]
    fn spec_kinds() {
        assert_eq!(parse_spec_kind("skewed:3").unwrap(), SpecKind::Skewed(3.0));
        assert_eq!(parse_spec_kind("t:3").unwrap(), SpecKind::T(3));
        assert_eq!(parse_spec_kind("cpu").unwrap(), SpecKind::Cpu);
        assert!(parse_spec_kind("t:0").is_err());
        assert!(parse_spec_kind("skewed:-1").is_err());
        assert!(parse_spec_kind("gauss:1").is_err());
        assert!(SpecKind::T(3).build(None, Some(5), 0).is_err());
        assert!(SpecKind::Cpu.build(Some(100), None, 0).is_err());
    }

    #[test]
    fn definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
