//! Multi-trial experiment runner.
//!
//! The design pool is fixed by its spec. Each trial draws its own `β₀` and
//! response noise; the relaxation, greedy selection and Fedorov exchange are
//! deterministic given `(X, k)` and run once per budget.

use std::time::Instant;

use nalgebra::DVector;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::generate::{generate_design, DesignSpec, CPU_BETA0};
use super::report::{BenchmarkReport, Cell, RelaxationInfo, ReportMeta, Summary, TrialStats};
use crate::design::DesignMatrix;
use crate::error::{Error, Result};
use crate::relaxation::{objective, solve_relaxation, Mode, SolverConfig, WeightVector};
use crate::selectors::{
    baseline_sample, build_distributions, fedorov_exchange, greedy_from_weights, random_start, sample_hard, subset_ols,
    AuditLevel, BaselineMethod, SamplingDistributions, Selection,
};

/// The compared selection methods.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    /// L1: uniform sampling without replacement.
    Uniform,
    /// L2: sampling proportional to leverage scores.
    Leverage,
    /// L3: sampling proportional to row norms.
    PredictiveLength,
    /// L4*: hard-budget sampling from the relaxed optimum.
    SamplingHard,
    /// L5*: greedy removal seeded by the relaxed optimum.
    Greedy,
    /// L6: Fedorov exchange from a random start.
    Fedorov,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Uniform,
        Method::Leverage,
        Method::PredictiveLength,
        Method::SamplingHard,
        Method::Greedy,
        Method::Fedorov,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Method::Uniform => "L1",
            Method::Leverage => "L2",
            Method::PredictiveLength => "L3",
            Method::SamplingHard => "L4*",
            Method::Greedy => "L5*",
            Method::Fedorov => "L6",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Method::Uniform => "uniform",
            Method::Leverage => "leverage",
            Method::PredictiveLength => "plength",
            Method::SamplingHard => "sampling-hard",
            Method::Greedy => "greedy",
            Method::Fedorov => "fedorov",
        }
    }

    pub fn parse(text: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.name() == text || m.label().eq_ignore_ascii_case(text))
    }

    fn baseline(self) -> Option<BaselineMethod> {
        match self {
            Method::Uniform => Some(BaselineMethod::Uniform),
            Method::Leverage => Some(BaselineMethod::LeverageScore),
            Method::PredictiveLength => Some(BaselineMethod::PredictiveLength),
            _ => None,
        }
    }

    fn stream(self) -> u64 {
        self as u64 + 1
    }
}

/// Knobs beyond the core `(spec, methods, budgets, trials, sigma, seed)` tuple.
#[derive(Clone, Debug)]
pub struct BenchConfig {
    pub trials: usize,
    pub sigma: f64,
    pub master_seed: u64,
    /// Worker cap; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    pub solver: SolverConfig,
    pub fedorov_max_exchanges: usize,
    /// Report `|β̂_j − β₀_j|` per coefficient.
    pub per_coefficient: bool,
    /// Fixed true coefficients; `None` draws `β₀ ~ N(0, I)` per trial.
    pub beta0: Option<DVector<f64>>,
}

impl BenchConfig {
    pub fn new(trials: usize, sigma: f64, master_seed: u64) -> Self {
        Self {
            trials,
            sigma,
            master_seed,
            threads: None,
            solver: SolverConfig::default(),
            fedorov_max_exchanges: 100_000,
            per_coefficient: false,
            beta0: None,
        }
    }
}

/// splitmix64 finalizer.
fn mix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream seed for `(master, parts...)`.
pub fn derive_seed(master: u64, parts: &[u64]) -> u64 {
    parts.iter().fold(mix(master), |acc, &p| mix(acc ^ mix(p)))
}

const STREAM_TRIAL: u64 = 1;
const STREAM_SELECT: u64 = 2;
const STREAM_DUPLICATE: u64 = 3;
const STREAM_FEDOROV: u64 = 4;

/// Everything about budget `k` that does not change between trials.
struct BudgetSetup {
    k: usize,
    info: RelaxationInfo,
    relaxation_time: f64,
    weights: Option<(WeightVector, SamplingDistributions)>,
    greedy: Option<(Selection, f64)>,
    fedorov: Option<(Selection, f64)>,
}

fn prepare_budget(x: &DesignMatrix, k: usize, methods: &[Method], cfg: &BenchConfig) -> BudgetSetup {
    let clock = Instant::now();
    let solved = solve_relaxation(x, k, Mode::WithoutReplacement, &cfg.solver);
    let relaxation_time = clock.elapsed().as_secs_f64();
    let (info, weights) = match solved {
        Ok((w, trace)) => {
            let info = RelaxationInfo {
                k,
                certificate: objective(&w, x).unwrap_or(f64::NAN),
                support_size: w.default_support().len(),
                iterations: trace.iterations.len(),
            };
            let dists = build_distributions(&w, x).ok();
            (info, dists.map(|d| (w, d)))
        }
        Err(_) => (RelaxationInfo { k, certificate: f64::NAN, support_size: 0, iterations: 0 }, None),
    };

    let greedy = if methods.contains(&Method::Greedy) && k > x.p() {
        weights.as_ref().and_then(|(w, _)| {
            let clock = Instant::now();
            let out = greedy_from_weights(x, w, k, AuditLevel::Off).ok()?;
            Some((out.selection, relaxation_time + clock.elapsed().as_secs_f64()))
        })
    } else {
        None
    };

    let fedorov = if methods.contains(&Method::Fedorov) {
        let seed = derive_seed(cfg.master_seed, &[STREAM_FEDOROV, k as u64]);
        let clock = Instant::now();
        random_start(x, k, seed)
            .and_then(|init| fedorov_exchange(x, k, &init, cfg.fedorov_max_exchanges, seed))
            .ok()
            .map(|sel| (sel, clock.elapsed().as_secs_f64()))
    } else {
        None
    };

    BudgetSetup { k, info, relaxation_time, weights, greedy, fedorov }
}

/// Metrics of one method on one trial.
#[derive(Clone, Debug)]
struct Outcome {
    objective: f64,
    sq_error: f64,
    delta_norm: f64,
    coef_error: Vec<f64>,
    seconds: f64,
    within_budget: bool,
}

impl Outcome {
    fn failed(p: usize, seconds: f64) -> Self {
        Self {
            objective: f64::INFINITY,
            sq_error: f64::INFINITY,
            delta_norm: f64::INFINITY,
            coef_error: vec![f64::INFINITY; p],
            seconds,
            within_budget: false,
        }
    }
}

/// `F(S; X)`, or `+∞` when the selected Gram matrix is singular.
pub fn eval_objective(x: &DesignMatrix, sel: &Selection) -> f64 {
    crate::selectors::subset_objective(x, sel).unwrap_or(f64::INFINITY)
}

fn select_for_trial(x: &DesignMatrix, method: Method, setup: &BudgetSetup, seed: u64) -> (Result<Selection>, f64) {
    let k = setup.k;
    let clock = Instant::now();
    let sel = match method {
        Method::Uniform | Method::Leverage | Method::PredictiveLength => {
            baseline_sample(x, k, method.baseline().expect("baseline method"), seed)
        }
        Method::SamplingHard => match &setup.weights {
            Some((w, d)) => sample_hard(d, w, k, Mode::WithoutReplacement, seed),
            None => Err(Error::SingularWeighting),
        },
        Method::Greedy => {
            return setup.greedy.as_ref().map_or((Err(Error::RankCollapse), 0.0), |(s, t)| (Ok(s.clone()), *t));
        }
        Method::Fedorov => {
            return setup.fedorov.as_ref().map_or((Err(Error::RankCollapse), 0.0), |(s, t)| (Ok(s.clone()), *t));
        }
    };
    let mut seconds = clock.elapsed().as_secs_f64();
    if method == Method::SamplingHard {
        seconds += setup.relaxation_time;
    }
    (sel, seconds)
}

/// Responses for the expanded selection: the first copy of a row reuses the
/// pool response, every further copy gets fresh noise.
fn responses_for(
    x: &DesignMatrix,
    sel: &Selection,
    y_pool: &[f64],
    beta0: &DVector<f64>,
    sigma: f64,
    seed: u64,
) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(sel.total());
    for (&i, &m) in sel.indices().iter().zip(sel.multiplicities()) {
        out.push(y_pool[i]);
        for _ in 1..m {
            let eps: f64 = StandardNormal.sample(&mut rng);
            out.push(x.row(i).dot(beta0) + sigma * eps);
        }
    }
    out
}

fn run_trial(
    x: &DesignMatrix,
    setups: &[BudgetSetup],
    methods: &[Method],
    cfg: &BenchConfig,
    t: usize,
) -> Vec<Outcome> {
    let (n, p) = (x.n(), x.p());
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.master_seed, &[STREAM_TRIAL, t as u64]));
    let beta0 = match &cfg.beta0 {
        Some(b) => b.clone(),
        None => DVector::from_fn(p, |_, _| StandardNormal.sample(&mut rng)),
    };
    let mean = x.matrix() * &beta0;
    let y_pool: Vec<f64> = (0..n)
        .map(|i| {
            let eps: f64 = StandardNormal.sample(&mut rng);
            mean[i] + cfg.sigma * eps
        })
        .collect();
    let full = Selection::from_set(0..n, n).expect("full pool");
    let full_error = subset_ols(x, &full, &y_pool).map_or(f64::INFINITY, |b| (b - &beta0).norm_squared());

    let mut out = Vec::with_capacity(setups.len() * methods.len());
    for setup in setups {
        for &method in methods {
            let seed = derive_seed(cfg.master_seed, &[STREAM_SELECT, t as u64, method.stream(), setup.k as u64]);
            let (sel, seconds) = select_for_trial(x, method, setup, seed);
            let Ok(sel) = sel else {
                out.push(Outcome::failed(p, seconds));
                continue;
            };
            let objective = eval_objective(x, &sel);
            let dup_seed = derive_seed(cfg.master_seed, &[STREAM_DUPLICATE, t as u64, method.stream(), setup.k as u64]);
            let y = responses_for(x, &sel, &y_pool, &beta0, cfg.sigma, dup_seed);
            let outcome = match subset_ols(x, &sel, &y) {
                Ok(beta) if objective.is_finite() => {
                    let diff = beta - &beta0;
                    let sq = diff.norm_squared();
                    Outcome {
                        objective,
                        sq_error: if full_error > 0.0 {
                            sq / full_error
                        } else if sq == 0.0 {
                            1.0
                        } else {
                            f64::INFINITY
                        },
                        delta_norm: sq.sqrt(),
                        coef_error: diff.iter().map(|d| d.abs()).collect(),
                        seconds,
                        within_budget: sel.total() <= setup.k,
                    }
                }
                _ => Outcome::failed(p, seconds),
            };
            out.push(outcome);
        }
    }
    out
}

/// Runs `methods × budgets` over `trials` trials on the pool described by `spec`.
pub fn run_benchmark(
    spec: &DesignSpec,
    methods: &[Method],
    budgets: &[usize],
    trials: usize,
    sigma: f64,
    master_seed: u64,
) -> Result<BenchmarkReport> {
    let x = generate_design(spec)?;
    run_benchmark_on(&x, spec, methods, budgets, &BenchConfig::new(trials, sigma, master_seed))
}

/// As [`run_benchmark`] on an already generated pool.
pub fn run_benchmark_on(
    x: &DesignMatrix,
    spec: &DesignSpec,
    methods: &[Method],
    budgets: &[usize],
    cfg: &BenchConfig,
) -> Result<BenchmarkReport> {
    if cfg.trials == 0 {
        return Err(Error::InvalidArgument("trials must be positive".into()));
    }
    if !(cfg.sigma >= 0.0 && cfg.sigma.is_finite()) {
        return Err(Error::InvalidArgument(format!("sigma must be finite and >= 0, got {}", cfg.sigma)));
    }
    if methods.is_empty() || budgets.is_empty() {
        return Err(Error::InvalidArgument("need at least one method and one budget".into()));
    }
    if let Some(&k) = budgets.iter().find(|&&k| k < x.p() || k > x.n()) {
        return Err(Error::InvalidArgument(format!("budget {k} outside [p, n] = [{}, {}]", x.p(), x.n())));
    }
    if let Some(b) = &cfg.beta0 {
        if b.len() != x.p() {
            return Err(Error::DimensionMismatch(format!(
                "beta0 has {} entries, design has {} columns",
                b.len(),
                x.p()
            )));
        }
    }
    cfg.solver.validate()?;

    let work = || {
        let setups: Vec<BudgetSetup> = budgets.par_iter().map(|&k| prepare_budget(x, k, methods, cfg)).collect();
        let per_trial: Vec<Vec<Outcome>> =
            (0..cfg.trials).into_par_iter().map(|t| run_trial(x, &setups, methods, cfg, t)).collect();
        (setups, per_trial)
    };
    let (setups, per_trial) = match cfg.threads {
        Some(threads) => rayon::ThreadPoolBuilder::new()
            .num_threads(threads.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let mut cells = Vec::with_capacity(setups.len() * methods.len());
    for (b, setup) in setups.iter().enumerate() {
        for (m, &method) in methods.iter().enumerate() {
            let slot = b * methods.len() + m;
            let outcomes: Vec<&Outcome> = per_trial.iter().map(|o| &o[slot]).collect();
            cells.push(Cell { method, k: setup.k, trial_stats: aggregate(&outcomes, setup, cfg, x.p()) });
        }
    }

    let mut notes = Vec::new();
    if matches!(spec.kind, super::generate::DesignKind::HeavyTailT { .. }) {
        notes.push("t entries are unit-scale and columns are not standardized".to_string());
    }
    match &cfg.beta0 {
        Some(_) => notes.push("beta0 fixed across trials".to_string()),
        None => notes.push("beta0 drawn from N(0, I) per trial".to_string()),
    }

    Ok(BenchmarkReport {
        meta: ReportMeta {
            version: env!("CARGO_PKG_VERSION").to_string(),
            design: *spec,
            master_seed: cfg.master_seed,
            trials: cfg.trials,
            sigma: cfg.sigma,
            budgets: budgets.to_vec(),
            methods: methods.to_vec(),
            relaxation: setups.iter().map(|s| s.info.clone()).collect(),
            notes,
        },
        cells,
    })
}

fn aggregate(outcomes: &[&Outcome], setup: &BudgetSetup, cfg: &BenchConfig, p: usize) -> TrialStats {
    let pick = |f: &dyn Fn(&Outcome) -> f64| Summary::of(&outcomes.iter().map(|o| f(o)).collect::<Vec<_>>());
    let certificate = setup.info.certificate;
    let min_certificate_ratio = outcomes
        .iter()
        .filter(|o| o.within_budget && o.objective.is_finite())
        .map(|o| o.objective / certificate)
        .fold(f64::INFINITY, f64::min);
    TrialStats {
        trials: outcomes.len(),
        failures: outcomes.iter().filter(|o| !o.objective.is_finite()).count(),
        objective: pick(&|o| o.objective),
        mse_ratio: pick(&|o| o.sq_error),
        delta_beta_norm: pick(&|o| o.delta_norm),
        coefficient_error: cfg.per_coefficient.then(|| (0..p).map(|j| pick(&|o| o.coef_error[j])).collect()),
        wall_time_s: Some(pick(&|o| o.seconds)),
        min_certificate_ratio,
    }
}

/// Budgets reported for the CPU fixture.
pub const CPU_BUDGETS: [usize; 4] = [20, 30, 50, 75];

/// All six methods on the CPU fixture with the published `β₀` and unit noise.
pub fn cpu_fixture_eval(budgets: &[usize], trials: usize, master_seed: u64) -> Result<BenchmarkReport> {
    let spec = DesignSpec::cpu();
    let x = generate_design(&spec)?;
    let mut cfg = BenchConfig::new(trials, 1.0, master_seed);
    cfg.per_coefficient = true;
    cfg.beta0 = Some(DVector::from_column_slice(&CPU_BETA0));
    run_benchmark_on(&x, &spec, &Method::ALL, budgets, &cfg)
}
