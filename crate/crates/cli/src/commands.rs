//! Subcommand implementations.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::DVector;
use optsel::bench::{
    float, generate_design, run_benchmark_on, support_study, to_json_string, BenchConfig, BenchmarkReport, DesignSpec,
    Method, CPU_BETA0,
};
use optsel::selectors::{
    baseline_sample, build_distributions, fedorov_exchange, greedy_from_weights, random_start, sample_hard,
    sample_soft, AuditLevel, BaselineMethod,
};
use optsel::transforms::{conditioning_diagnostic, glm_transform, prediction_transform};
use optsel::{
    objective, solve_relaxation, subset_objective, DesignMatrix, GlmSpec, Mode, Selection, SolverConfig, SolverStatus,
};
use serde::Serialize;

use crate::args::{
    BenchmarkArgs, CertificateArgs, Command, CpuBenchArgs, DesignArgs, MethodArg, SelectArgs, SolveArgs, SolverArgs,
    SupportStudyArgs,
};
use crate::error::CliError;
use crate::ingest::read_matrix;
use crate::tables;

/// Worker cap read when `--threads` is absent.
pub const THREADS_ENV: &str = "OPTSEL_THREADS";

pub fn run(command: Command) -> Result<(), CliError> {
    match command {
        Command::Solve(a) => solve(&a),
        Command::Select(a) => select(&a),
        Command::Certificate(a) => certificate(&a),
        Command::Benchmark(a) => benchmark(&a),
        Command::CpuBench(a) => cpu_bench(&a),
        Command::SupportStudy(a) => support(&a),
    }
}

fn mode_name(mode: Mode) -> &'static str {
    match mode {
        Mode::WithReplacement => "with-rep",
        Mode::WithoutReplacement => "without-rep",
    }
}

impl SolverArgs {
    fn config(&self) -> SolverConfig {
        SolverConfig { max_iters: self.max_iters, rel_tol: self.rel_tol, ..SolverConfig::default() }
    }
}

fn load_design(a: &DesignArgs) -> Result<DesignMatrix, CliError> {
    let x = DesignMatrix::new(read_matrix(&a.design)?)?;
    if let (Some(family), Some(pilot)) = (a.glm, &a.pilot) {
        let b = read_matrix(pilot)?;
        if b.nrows() != 1 && b.ncols() != 1 {
            return Err(optsel::Error::DimensionMismatch(format!(
                "pilot must be a single row or column, got {}x{}",
                b.nrows(),
                b.ncols()
            ))
            .into());
        }
        let beta = DVector::from_iterator(b.len(), b.iter().copied());
        return Ok(glm_transform(&x, &GlmSpec::new(family.into(), beta)?)?);
    }
    if let Some(z) = &a.predict_on {
        return Ok(prediction_transform(&x, &read_matrix(z)?)?);
    }
    Ok(x)
}

/// `out.json`, or `out.sidecar.json` when `out` is itself JSON.
pub fn sidecar_path(out: &Path) -> PathBuf {
    match out.extension().and_then(|e| e.to_str()) {
        Some("json") => out.with_extension("sidecar.json"),
        _ => out.with_extension("json"),
    }
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::output(path, e))
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    Ok(to_json_string(value)?)
}

/// Runs `body`; on a non-usage failure the error document replaces the sidecar.
fn with_sidecar(sidecar: &Path, body: impl FnOnce() -> Result<(), CliError>) -> Result<(), CliError> {
    let result = body();
    if let Err(e) = &result {
        if e.exit_code() != 1 {
            let _ = fs::write(sidecar, e.to_json() + "\n");
        }
    }
    result
}

fn threads(flag: Option<u64>) -> Result<Option<usize>, CliError> {
    if let Some(t) = flag {
        return Ok(Some(t as usize));
    }
    match std::env::var(THREADS_ENV) {
        Ok(text) => match text.trim().parse::<usize>() {
            Ok(t) if t >= 1 => Ok(Some(t)),
            _ => Err(CliError::Usage(format!("{THREADS_ENV} must be a positive integer, got {text:?}"))),
        },
        Err(_) => Ok(None),
    }
}

fn require_seed(strict: bool, seed: Option<u64>) -> Result<u64, CliError> {
    match (strict, seed) {
        (true, None) => Err(CliError::Usage("--strict-repro requires --seed".into())),
        (_, s) => Ok(s.unwrap_or(0)),
    }
}

#[derive(Serialize)]
struct SolveReport {
    k: usize,
    mode: &'static str,
    n: usize,
    p: usize,
    #[serde(with = "float")]
    objective: f64,
    #[serde(with = "float")]
    initial_objective: f64,
    iterations: usize,
    status: SolverStatus,
    support_size: usize,
    #[serde(with = "float")]
    conditioning: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn solve(a: &SolveArgs) -> Result<(), CliError> {
    let sidecar = sidecar_path(&a.out);
    with_sidecar(&sidecar, || {
        let x = load_design(&a.design)?;
        let mode: Mode = a.mode.into();
        let start = Instant::now();
        let (w, trace) = solve_relaxation(&x, a.k, mode, &a.solver.config())?;
        let seconds = start.elapsed().as_secs_f64();
        let mut csv = String::from("index,weight\n");
        for (i, v) in w.as_slice().iter().enumerate() {
            writeln!(csv, "{i},{v:e}").unwrap();
        }
        let report = SolveReport {
            k: a.k,
            mode: mode_name(mode),
            n: x.n(),
            p: x.p(),
            objective: trace.final_objective(),
            initial_objective: trace.initial_objective,
            iterations: trace.iterations.len(),
            status: trace.status,
            support_size: w.default_support().len(),
            conditioning: conditioning_diagnostic(&x, &w)?,
            wall_time_s: (!a.strict_repro).then_some(seconds),
        };
        write(&a.out, &csv)?;
        write(&sidecar, &json(&report)?)?;
        println!(
            "f(pi*) = {:.6e} after {} iterations ({:?}); support {} of {}",
            report.objective, report.iterations, report.status, report.support_size, report.n
        );
        Ok(())
    })
}

#[derive(Serialize)]
struct SelectReport {
    method: &'static str,
    mode: &'static str,
    k: usize,
    seed: Option<u64>,
    n: usize,
    p: usize,
    selected: usize,
    distinct: usize,
    /// `F(Ŝ; X)`.
    #[serde(with = "float")]
    objective: f64,
    /// Relaxed optimum at `certificate_budget`, a lower bound on `objective`.
    #[serde(with = "float")]
    certificate: f64,
    /// `max(k, selected)`: soft sampling may overshoot `k`.
    certificate_budget: usize,
    #[serde(with = "float")]
    ratio: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    wall_time_s: Option<f64>,
}

fn relaxed_value(x: &DesignMatrix, k: usize, mode: Mode, cfg: &SolverConfig) -> Result<f64, CliError> {
    Ok(solve_relaxation(x, k, mode, cfg)?.1.final_objective())
}

fn select(a: &SelectArgs) -> Result<(), CliError> {
    let seed = a.method.is_randomized().then(|| require_seed(a.strict_repro, a.seed)).transpose()?;
    let mode: Mode = a.mode.into();
    if mode == Mode::WithReplacement && !matches!(a.method, MethodArg::SamplingSoft | MethodArg::SamplingHard) {
        return Err(CliError::Usage(format!(
            "--mode with-rep applies to the sampling methods, not {}",
            a.method.name()
        )));
    }
    let sidecar = sidecar_path(&a.out);
    with_sidecar(&sidecar, || {
        let x = load_design(&a.design)?;
        let cfg = a.solver.config();
        let s = seed.unwrap_or(0);
        let start = Instant::now();
        let (sel, relaxed): (Selection, Option<f64>) = match a.method {
            MethodArg::SamplingSoft | MethodArg::SamplingHard => {
                let (w, _) = solve_relaxation(&x, a.k, mode, &cfg)?;
                let d = build_distributions(&w, &x)?;
                let sel = if a.method == MethodArg::SamplingSoft {
                    sample_soft(&d, &w, a.k, mode, s)?
                } else {
                    sample_hard(&d, &w, a.k, mode, s)?
                };
                (sel, Some(objective(&w, &x)?))
            }
            MethodArg::Greedy => {
                let (w, _) = solve_relaxation(&x, a.k, mode, &cfg)?;
                let out = greedy_from_weights(&x, &w, a.k, AuditLevel::Off)?;
                (out.selection, Some(out.relaxation_objective))
            }
            MethodArg::Fedorov => {
                let init = random_start(&x, a.k, s)?;
                (fedorov_exchange(&x, a.k, &init, a.max_exchanges, s)?, None)
            }
            MethodArg::Uniform => (baseline_sample(&x, a.k, BaselineMethod::Uniform, s)?, None),
            MethodArg::Leverage => (baseline_sample(&x, a.k, BaselineMethod::LeverageScore, s)?, None),
            MethodArg::Plength => (baseline_sample(&x, a.k, BaselineMethod::PredictiveLength, s)?, None),
        };
        let seconds = start.elapsed().as_secs_f64();
        let f = subset_objective(&x, &sel)?;
        let budget = a.k.max(sel.total());
        let certificate = match relaxed {
            Some(v) if budget == a.k => v,
            _ => relaxed_value(&x, budget, mode, &cfg)?,
        };
        let report = SelectReport {
            method: a.method.name(),
            mode: mode_name(mode),
            k: a.k,
            seed,
            n: x.n(),
            p: x.p(),
            selected: sel.total(),
            distinct: sel.distinct(),
            objective: f,
            certificate,
            certificate_budget: budget,
            ratio: f / certificate,
            wall_time_s: (!a.strict_repro).then_some(seconds),
        };
        let mut csv = String::from("index,multiplicity\n");
        for (i, m) in sel.indices().iter().zip(sel.multiplicities()) {
            writeln!(csv, "{i},{m}").unwrap();
        }
        write(&a.out, &csv)?;
        write(&sidecar, &json(&report)?)?;
        println!(
            "{}: {} points ({} distinct), F = {:.6e}, certificate = {:.6e}, ratio = {:.6}",
            report.method, report.selected, report.distinct, f, certificate, report.ratio
        );
        Ok(())
    })
}

#[derive(Serialize)]
struct CertificateReport {
    k: usize,
    mode: &'static str,
    n: usize,
    p: usize,
    #[serde(with = "float")]
    certificate: f64,
    iterations: usize,
    status: SolverStatus,
    support_size: usize,
}

fn certificate(a: &CertificateArgs) -> Result<(), CliError> {
    let x = load_design(&a.design)?;
    let mode: Mode = a.mode.into();
    let (w, trace) = solve_relaxation(&x, a.k, mode, &a.solver.config())?;
    let report = CertificateReport {
        k: a.k,
        mode: mode_name(mode),
        n: x.n(),
        p: x.p(),
        certificate: trace.final_objective(),
        iterations: trace.iterations.len(),
        status: trace.status,
        support_size: w.default_support().len(),
    };
    let text = json(&report)?;
    match &a.out {
        Some(path) => write(path, &text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn emit_report(report: &BenchmarkReport, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => write(path, &report.to_json()?),
        None => Ok(()),
    }
}

fn benchmark(a: &BenchmarkArgs) -> Result<(), CliError> {
    let seed = require_seed(a.strict_repro, a.seed)?;
    let spec = a.spec.build(a.n, a.p, seed).map_err(CliError::Usage)?;
    let methods = a.methods.as_ref().map_or_else(|| Method::ALL.to_vec(), |m| m.0.clone());
    let mut cfg = BenchConfig::new(a.trials as usize, a.sigma, seed);
    cfg.threads = threads(a.threads)?;
    cfg.per_coefficient = a.per_coefficient;
    if spec == DesignSpec::cpu() {
        cfg.beta0 = Some(DVector::from_column_slice(&CPU_BETA0));
    }
    let x = generate_design(&spec)?;
    let mut report = run_benchmark_on(&x, &spec, &methods, &a.budgets.0, &cfg)?;
    if a.strict_repro {
        report = report.without_timings();
    }
    emit_report(&report, a.out.as_deref())?;
    print!("{}", tables::median_tables(&report));
    if a.per_coefficient {
        print!("{}", tables::coefficient_tables(&report));
    }
    Ok(())
}

fn cpu_bench(a: &CpuBenchArgs) -> Result<(), CliError> {
    let seed = require_seed(a.strict_repro, a.seed)?;
    let spec = DesignSpec::cpu();
    let mut cfg = BenchConfig::new(a.trials as usize, 1.0, seed);
    cfg.threads = threads(a.threads)?;
    cfg.per_coefficient = true;
    cfg.beta0 = Some(DVector::from_column_slice(&CPU_BETA0));
    let x = generate_design(&spec)?;
    let mut report = run_benchmark_on(&x, &spec, &Method::ALL, &a.budgets.0, &cfg)?;
    if a.strict_repro {
        report = report.without_timings();
    }
    emit_report(&report, a.out.as_deref())?;
    print!("{}", tables::coefficient_tables(&report));
    Ok(())
}

fn support(a: &SupportStudyArgs) -> Result<(), CliError> {
    let first = *a.p_values.0.first().ok_or_else(|| CliError::Usage("--p-values is empty".into()))?;
    if a.spec == crate::args::SpecKind::Cpu {
        return Err(CliError::Usage("the support study needs a synthetic pool".into()));
    }
    let base = a.spec.build(Some(a.n), Some(first), a.seed).map_err(CliError::Usage)?;
    let study = support_study(&base, &a.p_values.0, a.k_per_p, &a.solver.config())?;
    if let Some(path) = &a.out {
        write(path, &json(&study)?)?;
    }
    print!("{}", tables::support_table(&study));
    Ok(())
}
