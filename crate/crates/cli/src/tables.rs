//! Plain-text median tables for standard output.

use std::fmt::Write as _;

use optsel::bench::{BenchmarkReport, DesignKind, DesignSpec, Method, Summary, SupportStudy, TrialStats};

fn describe(spec: &DesignSpec) -> String {
    match spec.kind {
        DesignKind::SkewedGaussian { alpha } => {
            format!("skewed Gaussian (alpha = {alpha}), n = {}, p = {}, seed {}", spec.n, spec.p, spec.rng_seed)
        }
        DesignKind::HeavyTailT { df } => {
            format!("t (df = {df}), n = {}, p = {}, seed {}", spec.n, spec.p, spec.rng_seed)
        }
        DesignKind::Fixture { .. } => format!("cpu fixture, n = {}, p = {}", spec.n, spec.p),
    }
}

fn row_label(m: Method) -> String {
    format!("{} {}", m.label(), m.name())
}

fn metric_table(out: &mut String, r: &BenchmarkReport, title: &str, pick: fn(&TrialStats) -> f64) {
    writeln!(out, "\n{title}").unwrap();
    write!(out, "{:<18}", "method").unwrap();
    for k in &r.meta.budgets {
        write!(out, "{:>12}", format!("k={k}")).unwrap();
    }
    out.push('\n');
    for &m in &r.meta.methods {
        write!(out, "{:<18}", row_label(m)).unwrap();
        for &k in &r.meta.budgets {
            let v = r.cell(m, k).map_or(f64::NAN, |c| pick(&c.trial_stats));
            write!(out, "{v:>12.4e}").unwrap();
        }
        out.push('\n');
    }
}

/// Medians of `F(Ŝ; X)` and of the MSE ratio, methods by budgets.
pub fn median_tables(r: &BenchmarkReport) -> String {
    let mut out = format!(
        "pool: {}\ntrials: {}, sigma: {}, master seed: {}\n",
        describe(&r.meta.design),
        r.meta.trials,
        r.meta.sigma,
        r.meta.master_seed
    );
    write!(out, "\n{:<18}", "certificate").unwrap();
    for info in &r.meta.relaxation {
        write!(out, "{:>12.4e}", info.certificate).unwrap();
    }
    out.push('\n');
    metric_table(&mut out, r, "median F(S; X)", |s| s.objective.median);
    metric_table(&mut out, r, "median MSE ratio", |s| s.mse_ratio.median);
    let failed: Vec<String> = r
        .cells
        .iter()
        .filter(|c| c.trial_stats.failures > 0)
        .map(|c| format!("{} k={}: {}", c.method.label(), c.k, c.trial_stats.failures))
        .collect();
    if !failed.is_empty() {
        writeln!(out, "\nfailed trials (singular selections): {}", failed.join(", ")).unwrap();
    }
    out
}

/// Per-budget blocks of median `|Δβ_j|` and `‖Δβ‖₂`.
pub fn coefficient_tables(r: &BenchmarkReport) -> String {
    let mut out =
        format!("pool: {}\ntrials: {}, master seed: {}\n", describe(&r.meta.design), r.meta.trials, r.meta.master_seed);
    let p = r.meta.design.p;
    for &k in &r.meta.budgets {
        write!(out, "\nk = {k}\n{:<18}", "method").unwrap();
        for j in 1..=p {
            write!(out, "{:>9}", format!("|db{j}|")).unwrap();
        }
        writeln!(out, "{:>9}", "|db|_2").unwrap();
        for &m in &r.meta.methods {
            let Some(cell) = r.cell(m, k) else { continue };
            write!(out, "{:<18}", row_label(m)).unwrap();
            let none = vec![Summary { median: f64::NAN, q1: f64::NAN, q3: f64::NAN }; p];
            for s in cell.trial_stats.coefficient_error.as_ref().unwrap_or(&none) {
                write!(out, "{:>9.3}", s.median).unwrap();
            }
            writeln!(out, "{:>9.3}", cell.trial_stats.delta_beta_norm.median).unwrap();
        }
    }
    out
}

pub fn support_table(s: &SupportStudy) -> String {
    let mut out = format!("pool: {}, k = {} p\n\n", describe(&s.base), s.k_per_p);
    writeln!(out, "{:>6}{:>8}{:>10}{:>8}{:>10}", "p", "k", "support", "excess", "bound").unwrap();
    for pt in &s.points {
        writeln!(out, "{:>6}{:>8}{:>10}{:>8}{:>10}", pt.p, pt.k, pt.support, pt.excess, pt.bound).unwrap();
    }
    writeln!(out, "\nexcess ~ {:.4} + {:.4} p + {:.4} p^2", s.fit.intercept, s.fit.linear, s.fit.quadratic).unwrap();
    out
}
