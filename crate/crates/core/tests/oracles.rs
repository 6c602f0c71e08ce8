//! Solver and selector outputs checked against independent oracles.

use nalgebra::{DMatrix, DVector};
use optsel::bench::eval_objective;
use optsel::linalg::{inverse_sqrt, SpdMatrix};
use optsel::relaxation::{minimax_certificate, objective, solve_relaxation, Mode, SolverConfig, WeightVector};
use optsel::selectors::{
    build_distributions, fedorov_exchange, greedy_remove, greedy_select, random_start, sample_hard, sample_soft,
    Selection,
};
use optsel::{DesignMatrix, Error};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

fn gaussian_design(seed: u64, n: usize, p: usize) -> DesignMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    DesignMatrix::new(DMatrix::from_fn(n, p, |_, _| StandardNormal.sample(&mut rng))).unwrap()
}

/// `(a, b, c)` entries of a weighted 2×2 Gram matrix.
fn gram2(x: &DesignMatrix, w: &[f64]) -> (f64, f64, f64) {
    let (mut a, mut b, mut c) = (0.0, 0.0, 0.0);
    for (i, &wi) in w.iter().enumerate() {
        let (u, v) = (x.matrix()[(i, 0)], x.matrix()[(i, 1)]);
        a += wi * u * u;
        b += wi * u * v;
        c += wi * v * v;
    }
    (a, b, c)
}

fn f2(x: &DesignMatrix, w: &[f64]) -> f64 {
    let (a, b, c) = gram2(x, w);
    let det = a * c - b * b;
    if det <= 1e-13 * (a * c).max(1e-300) {
        f64::INFINITY
    } else {
        (a + c) / det
    }
}

/// `−x_iᵀ Σ^{-2} x_i` from the closed-form 2×2 inverse.
fn grad2(x: &DesignMatrix, w: &[f64]) -> Vec<f64> {
    let (a, b, c) = gram2(x, w);
    let det = a * c - b * b;
    let inv = [[c / det, -b / det], [-b / det, a / det]];
    (0..x.n())
        .map(|i| {
            let (u, v) = (x.matrix()[(i, 0)], x.matrix()[(i, 1)]);
            let s = [inv[0][0] * u + inv[0][1] * v, inv[1][0] * u + inv[1][1] * v];
            -(s[0] * s[0] + s[1] * s[1])
        })
        .collect()
}

/// Linear minimizer over `{0 ≤ y ≤ 1, Σy ≤ k}`: unit weight on the `k` most negative entries.
fn lmo(g: &[f64], k: usize) -> Vec<f64> {
    let mut order: Vec<usize> = (0..g.len()).collect();
    order.sort_by(|&i, &j| g[i].total_cmp(&g[j]));
    let mut y = vec![0.0; g.len()];
    for &i in order.iter().take(k) {
        if g[i] < 0.0 {
            y[i] = 1.0;
        }
    }
    y
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(u, v)| u * v).sum()
}

/// Frank–Wolfe with exact line search by golden section, returning the best
/// value found and the smallest duality-gap lower bound on the optimum.
fn frank_wolfe(x: &DesignMatrix, k: usize, iters: usize) -> (f64, f64) {
    let n = x.n();
    let mut w = vec![k as f64 / n as f64; n];
    let mut lower = f64::NEG_INFINITY;
    for _ in 0..iters {
        let g = grad2(x, &w);
        let s = lmo(&g, k);
        let d: Vec<f64> = s.iter().zip(&w).map(|(a, b)| a - b).collect();
        let f = f2(x, &w);
        lower = lower.max(f + dot(&g, &d));
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let phi = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..80 {
            let m1 = hi - phi * (hi - lo);
            let m2 = lo + phi * (hi - lo);
            let at = |t: f64| f2(x, &w.iter().zip(&d).map(|(a, b)| a + t * b).collect::<Vec<_>>());
            if at(m1) < at(m2) {
                hi = m2;
            } else {
                lo = m1;
            }
        }
        let t = 0.5 * (lo + hi);
        w = w.iter().zip(&d).map(|(a, b)| a + t * b).collect();
    }
    (f2(x, &w), lower)
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

fn exhaustive_best(x: &DesignMatrix, k: usize) -> f64 {
    subsets(x.n(), k)
        .iter()
        .map(|s| {
            let mut w = vec![0.0; x.n()];
            for &i in s {
                w[i] = 1.0;
            }
            f2(x, &w)
        })
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn pgd_matches_frank_wolfe_on_small_pools() {
    for seed in 0..10 {
        let x = gaussian_design(seed, 8, 2);
        let (w, trace) = solve_relaxation(&x, 3, Mode::WithoutReplacement, &SolverConfig::default()).unwrap();
        let f = trace.final_objective();
        let (fw_value, fw_lower) = frank_wolfe(&x, 3, 3000);
        // PGD is no worse than a long Frank–Wolfe run and above its certified lower bound.
        assert!(f <= fw_value * (1.0 + 1e-6), "seed {seed}: pgd {f} vs fw {fw_value}");
        assert!(f >= fw_lower * (1.0 - 1e-9), "seed {seed}: pgd {f} below bound {fw_lower}");
        assert!((f - fw_value).abs() <= 1e-3 * fw_value, "seed {seed}: pgd {f} vs fw {fw_value}");
        // Duality gap at the PGD point from the independent gradient.
        let g = grad2(&x, w.as_slice());
        let s = lmo(&g, 3);
        let gap = dot(&g, w.as_slice()) - dot(&g, &s);
        assert!(gap <= 1e-4 * f, "seed {seed}: relative gap {}", gap / f);
    }
}

#[test]
fn certificate_is_below_every_subset() {
    for seed in 0..10 {
        let x = gaussian_design(100 + seed, 8, 2);
        let cert = minimax_certificate(&x, 3, Mode::WithoutReplacement).unwrap();
        let best = exhaustive_best(&x, 3);
        assert_eq!(subsets(8, 3).len(), 56);
        assert!(cert <= best * (1.0 + 1e-12), "seed {seed}: {cert} > {best}");
    }
    let id = DesignMatrix::identity(4);
    let cert = minimax_certificate(&id, 4, Mode::WithoutReplacement).unwrap();
    assert!((cert - 4.0).abs() < 1e-9);
}

#[test]
fn greedy_is_within_the_guarantee_of_the_exhaustive_optimum() {
    for seed in 0..20 {
        let x = gaussian_design(200 + seed, 8, 2);
        let sel = greedy_select(&x, 3, &SolverConfig::default()).unwrap();
        let f = eval_objective(&x, &sel);
        let factor = 1.0 + 6.0 / (2.0 * 2.0);
        assert!(f <= factor * exhaustive_best(&x, 3), "seed {seed}");
    }
    for seed in 0..20 {
        let x = gaussian_design(300 + seed, 10, 2);
        let all: Vec<usize> = (0..10).collect();
        let sel = greedy_remove(&x, &all, 4).unwrap();
        assert!(eval_objective(&x, &sel) <= 3.0 * exhaustive_best(&x, 4), "seed {seed}");
    }
}

#[test]
fn greedy_on_identity_plus_one_row() {
    let mut rows: Vec<Vec<f64>> = (0..3).map(|i| (0..3).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    rows.push(vec![0.6, 0.0, 0.8]);
    let x = DesignMatrix::from_rows(&rows).unwrap();
    let sel = greedy_select(&x, 4, &SolverConfig::default()).unwrap();
    let cert = minimax_certificate(&x, 4, Mode::WithoutReplacement).unwrap();
    assert!(eval_objective(&x, &sel) <= (1.0 + 6.0 / 2.0) * cert);
}

#[test]
fn fedorov_usually_finds_the_exhaustive_optimum() {
    let mut hits = 0;
    for seed in 0..100 {
        let x = gaussian_design(400 + seed, 10, 2);
        let init = random_start(&x, 4, seed).unwrap();
        let sel = fedorov_exchange(&x, 4, &init, 1000, seed).unwrap();
        let f = eval_objective(&x, &sel);
        assert!(f <= eval_objective(&x, &init));
        if f <= exhaustive_best(&x, 4) * (1.0 + 1e-9) {
            hits += 1;
        }
    }
    assert!(hits >= 90, "exhaustive optimum reached on {hits} of 100 seeds");
}

#[test]
fn hard_sampling_is_within_a_constant_of_the_certificate() {
    let x = gaussian_design(500, 50, 3);
    let k = 12;
    let (w, _) = solve_relaxation(&x, k, Mode::WithoutReplacement, &SolverConfig::default()).unwrap();
    let cert = objective(&w, &x).unwrap();
    let d = build_distributions(&w, &x).unwrap();
    let mut values: Vec<f64> = (0..200u64)
        .map(|seed| match sample_hard(&d, &w, k, Mode::WithoutReplacement, seed) {
            Ok(s) => eval_objective(&x, &s),
            Err(Error::EmptySelection { .. }) => f64::INFINITY,
            Err(e) => panic!("{e}"),
        })
        .collect();
    values.sort_by(f64::total_cmp);
    let median = 0.5 * (values[99] + values[100]);
    assert!(median <= 4.0 * cert, "median {median} vs certificate {cert}");
}

#[test]
fn soft_sampling_mean_size_matches_the_budget() {
    let x = gaussian_design(600, 100, 5);
    let k = 20;
    let (w, _) = solve_relaxation(&x, k, Mode::WithoutReplacement, &SolverConfig::default()).unwrap();
    let d = build_distributions(&w, &x).unwrap();
    let sizes: Vec<f64> = (0..2000u64)
        .map(|seed| match sample_soft(&d, &w, k, Mode::WithoutReplacement, seed) {
            Ok(s) => s.total() as f64,
            Err(Error::EmptySelection { drawn, .. }) => drawn as f64,
            Err(e) => panic!("{e}"),
        })
        .collect();
    let n = sizes.len() as f64;
    let mean = sizes.iter().sum::<f64>() / n;
    let var = sizes.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / (n - 1.0);
    let se = (var / n).sqrt();
    assert!((mean - k as f64).abs() <= 3.0 * se, "mean {mean}, se {se}");
}

#[test]
fn soft_sampling_spectral_sandwich() {
    let (n, p) = (2000, 5);
    let k = 20 * p;
    let x = gaussian_design(700, n, p);
    let (w, _) = solve_relaxation(&x, k, Mode::WithoutReplacement, &SolverConfig::default()).unwrap();
    let sigma = SpdMatrix::new(x.weighted_gram(w.as_slice())).unwrap();
    let root = inverse_sqrt(&sigma);
    let d = build_distributions(&w, &x).unwrap();
    let trials = 200;
    let mut inside = 0;
    for seed in 0..trials {
        let Ok(sel) = sample_soft(&d, &w, k, Mode::WithoutReplacement, seed) else {
            continue;
        };
        let g = x.subset_gram(sel.indices(), sel.multiplicities());
        let m = &root * g * &root;
        let eig = m.symmetric_eigenvalues();
        if eig.min() >= 0.5 && eig.max() <= 1.5 {
            inside += 1;
        }
    }
    assert!(inside as f64 >= 0.8 * trials as f64, "{inside} of {trials} within [0.5, 1.5]");
}

#[test]
fn distributions_are_normalized_on_random_instances() {
    for seed in 0..20 {
        let x = gaussian_design(800 + seed, 40, 4);
        for mode in [Mode::WithReplacement, Mode::WithoutReplacement] {
            let (w, _) = solve_relaxation(&x, 10, mode, &SolverConfig::default()).unwrap();
            let d = build_distributions(&w, &x).unwrap();
            assert!((d.p1.sum() - 1.0).abs() <= 1e-9);
            assert!((d.p2.sum() - 1.0).abs() <= 1e-9);
            assert!(d.p1.iter().chain(d.p2.iter()).all(|v| *v >= 0.0));
            if mode == Mode::WithoutReplacement {
                assert!(d.p2.iter().all(|v| 10.0 * v <= 1.0 + 1e-9));
            }
        }
    }
}

#[test]
fn eval_objective_matches_expanded_gram_and_is_monotone_in_multiplicity() {
    for seed in 0..20 {
        let x = gaussian_design(900 + seed, 12, 3);
        let counts = [(0, 2), (3, 1), (5, 3), (7, 1), (11, 1)];
        let sel = Selection::from_counts(counts, Mode::WithReplacement, 8).unwrap();
        let expanded = x.select_rows(&sel.expanded());
        let oracle = (expanded.transpose() * &expanded).try_inverse().unwrap().trace();
        let f = eval_objective(&x, &sel);
        assert!((f - oracle).abs() <= 1e-10 * oracle);
        for pos in 0..counts.len() {
            let mut more = counts;
            more[pos].1 *= 2;
            let bigger = Selection::from_counts(more, Mode::WithReplacement, 16).unwrap();
            assert!(eval_objective(&x, &bigger) <= f * (1.0 + 1e-12));
        }
    }
    let id = DesignMatrix::identity(3);
    assert!((eval_objective(&id, &Selection::from_set(0..3, 3).unwrap()) - 3.0).abs() < 1e-15);
    let singular = Selection::from_set([0, 1], 2).unwrap();
    assert_eq!(eval_objective(&id, &singular), f64::INFINITY);
}

#[test]
fn weights_from_solver_are_feasible() {
    let x = gaussian_design(1000, 30, 3);
    for mode in [Mode::WithReplacement, Mode::WithoutReplacement] {
        let (w, _) = solve_relaxation(&x, 9, mode, &SolverConfig::default()).unwrap();
        let again = WeightVector::new(DVector::from_column_slice(w.as_slice()), 9.0, mode == Mode::WithoutReplacement);
        assert!(again.is_ok());
    }
}
