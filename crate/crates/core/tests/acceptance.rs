//! Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
//! criterion fails. Every check compares the library against an oracle
//! written here, independently of the code under test.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use byzweight::config::{AttackCount, AttackKind, ExperimentConfig};
use byzweight::experiment::{run_grid, CellResult, Scenario};
use byzweight::sample_check::{monte_carlo_validate, SampleCheckParams};
use byzweight::sim::{aggregate_trimmed_mean, aggregate_weighted_median};
use byzweight::task::{
    objective_gap_bound, Dataset, DropoutMask, Model, ModelSpec, ParamVector, SyntheticTask,
};
use byzweight::weights::{
    mwp, ratio, solve_u_star, tradeoff_report, truncate, Rational, TruncationQuery, TruncationStatus, WeightVector,
};
use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, StandardNormal};

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn report(n: usize, title: &str, o: &Outcome) {
    let mut out = std::io::stdout().lock();
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "criterion {n:>2} {verdict} [{title}] {}", o.detail);
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn normal(r: &mut ChaCha8Rng) -> f64 {
    StandardNormal.sample(r)
}

fn frac(num: u64, den: u64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

// ---------------------------------------------------------------------------
// Criterion 1: U* against an exhaustive scan.

#[derive(Debug, PartialEq, Eq)]
enum Expected {
    Solved(u64),
    NoTruncationNeeded,
    Infeasible,
}

/// Scan every cap `U` in `1..=max`, keeping the two truncated sums up to date
/// in O(1) per step. The top set is the last `K - floor((1 - p) K)` sorted values.
fn scan_u_star(values: &[u64], alpha: (u64, u64), alpha_star: (u64, u64)) -> Expected {
    let mut s = values.to_vec();
    s.sort_unstable();
    let k = s.len() as u64;
    let start = ((alpha.1 - alpha.0) * k / alpha.1) as usize;
    let max = *s.last().unwrap();
    let ok = |top: u128, total: u128| top * alpha_star.1 as u128 <= alpha_star.0 as u128 * total;

    // Sums at U = 1: every positive value contributes one.
    let mut below = s.iter().take_while(|&&x| x < 1).count();
    let mut below_top = s[start..].iter().take_while(|&&x| x < 1).count();
    let mut total = (s.len() - below) as u128;
    let mut top = (s.len() - start - below_top) as u128;
    let mut best = None;
    for u in 1..=max {
        if u > 1 {
            while below < s.len() && s[below] < u {
                below += 1;
            }
            while start + below_top < s.len() && s[start + below_top] < u {
                below_top += 1;
            }
            total += (s.len() - below) as u128;
            top += (s.len() - start - below_top) as u128;
        }
        if ok(top, total) {
            best = Some(u);
        }
    }
    if max == 0 {
        return Expected::Infeasible;
    }
    match best {
        Some(u) if u == max => Expected::NoTruncationNeeded,
        Some(u) => Expected::Solved(u),
        None => Expected::Infeasible,
    }
}

fn random_values(r: &mut ChaCha8Rng, k: usize, max_value: u64) -> Vec<u64> {
    let style = r.random_range(0..4);
    let lognormal = LogNormal::new(3.0, 2.5).unwrap();
    let mut v: Vec<u64> = (0..k)
        .map(|_| match style {
            0 => r.random_range(0..=max_value),
            1 => (lognormal.sample(r) as u64).min(max_value),
            2 => r.random_range(0..=20.min(max_value)),
            _ => {
                if r.random_bool(0.1) {
                    r.random_range(0..=max_value)
                } else {
                    r.random_range(0..=max_value / 100 + 1)
                }
            }
        })
        .collect();
    if v.iter().all(|&x| x == 0) {
        v[0] = 1;
    }
    v
}

fn criterion_1() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(1);
    let mut mismatches = Vec::new();
    let mut tally = BTreeMap::new();
    for _ in 0..1000 {
        let k = r.random_range(1..=50usize);
        let values = random_values(&mut r, k, 1_000_000);
        let j = r.random_range(1..=k as u64);
        let alpha_star = if r.random_bool(0.5) { (3, 10) } else { (1, 2) };
        let want = scan_u_star(&values, (j, k as u64), alpha_star);
        let q = TruncationQuery::new(frac(j, k as u64), frac(alpha_star.0, alpha_star.1)).unwrap();
        let got = match solve_u_star(&WeightVector::new(values.clone()).unwrap(), &q).unwrap().status {
            TruncationStatus::Solved { u_star } => Expected::Solved(u_star),
            TruncationStatus::NoTruncationNeeded => Expected::NoTruncationNeeded,
            TruncationStatus::Infeasible => Expected::Infeasible,
        };
        let label = match want {
            Expected::Solved(_) => "solved",
            Expected::NoTruncationNeeded => "untouched",
            Expected::Infeasible => "infeasible",
        };
        *tally.entry(label).or_insert(0) += 1;
        if got != want && mismatches.len() < 3 {
            mismatches.push(format!("{values:?} alpha={j}/{k}: got {got:?}, want {want:?}"));
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        mismatches.is_empty() && secs < 10.0,
        format!("1000 instances {tally:?}, mismatches {}, {secs:.2} s {}", mismatches.len(), mismatches.join("; ")),
    )
}

// ---------------------------------------------------------------------------
// Criterion 2: monotonicity.

fn criterion_2() -> Outcome {
    let mut r = rng(2);
    let mut violations = 0;
    let mut curves = 0;
    for _ in 0..200 {
        let k = r.random_range(1..=30usize);
        let values = random_values(&mut r, k, 400);
        let v = WeightVector::new(values).unwrap();
        let p = frac(r.random_range(1..=k as u64), k as u64);
        let mut prev: Option<Rational> = None;
        for u in 1..=v.max() + 1 {
            let m = mwp(&truncate(&v, u).unwrap(), &p).unwrap();
            if prev.as_ref().is_some_and(|x| m < *x) {
                violations += 1;
            }
            prev = Some(m);
        }
        for alpha_star in [frac(3, 10), frac(1, 2)] {
            let curve = tradeoff_report(&v, &alpha_star).unwrap();
            curves += usize::from(!curve.is_empty());
            for pair in curve.points.windows(2) {
                if !(pair[1].alpha < pair[0].alpha && pair[1].u_star >= pair[0].u_star) {
                    violations += 1;
                }
            }
            for point in &curve.points {
                let q = TruncationQuery::new(point.alpha.clone(), alpha_star.clone()).unwrap();
                if solve_u_star(&v, &q).unwrap().u_star() != Some(point.u_star) {
                    violations += 1;
                }
            }
        }
    }
    outcome(violations == 0, format!("200 vectors, {curves} nonempty curves, {violations} violations"))
}

// ---------------------------------------------------------------------------
// Criterion 3: L1 optimality against every alternative vector below N.

fn mwp_small(values: &[u64], p: (u64, u64)) -> Option<(u64, u64)> {
    let mut s = values.to_vec();
    s.sort_unstable();
    let total: u64 = s.iter().sum();
    if total == 0 {
        return None;
    }
    let k = s.len() as u64;
    let start = ((p.1 - p.0) * k / p.1) as usize;
    Some((s[start..].iter().sum(), total))
}

/// L1 distance of truncation at the largest real-valued cap satisfying the
/// bound. `den * top(U) - num * total(U)` is piecewise linear in `U` with
/// kinks at the sorted values, so the cap is found by interpolation.
fn fractional_cap_distance(n: &[u64], p: (u64, u64), alpha_star: (u64, u64)) -> Option<Rational> {
    let mut s = n.to_vec();
    s.sort_unstable();
    let k = s.len() as u64;
    let start = ((p.1 - p.0) * k / p.1) as usize;
    let g = |u: &Rational| -> Rational {
        let capped = |x: &u64| frac(*x, 1).min(u.clone());
        let top: Rational = s[start..].iter().map(capped).sum();
        let total: Rational = s.iter().map(capped).sum();
        top * frac(alpha_star.1, 1) - total * frac(alpha_star.0, 1)
    };
    let distance = |u: &Rational| -> Rational {
        s.iter().map(|&x| (frac(x, 1) - u.clone()).max(frac(0, 1))).sum()
    };
    let mut a = frac(0, 1);
    let mut breakpoints: Vec<u64> = s.iter().copied().filter(|&x| x > 0).collect();
    breakpoints.dedup();
    for b in breakpoints {
        let b = frac(b, 1);
        let gb = g(&b);
        if gb > frac(0, 1) {
            if a == frac(0, 1) {
                return None;
            }
            let ga = g(&a);
            let root = a.clone() + (b - a.clone()) * (-ga.clone()) / (gb - ga);
            return Some(distance(&root));
        }
        a = b;
    }
    Some(frac(0, 1))
}

fn for_each_below(n: &[u64], f: &mut dyn FnMut(&[u64])) {
    let mut m = vec![0u64; n.len()];
    loop {
        f(&m);
        let mut i = 0;
        loop {
            if i == n.len() {
                return;
            }
            if m[i] < n[i] {
                m[i] += 1;
                break;
            }
            m[i] = 0;
            i += 1;
        }
    }
}

fn criterion_3() -> Outcome {
    let mut r = rng(3);
    let mut beaten = 0;
    let mut beaten_fractional = 0;
    let mut example = String::new();
    let mut alternatives = 0u64;
    let mut instances = 0;
    for _ in 0..300 {
        let k = r.random_range(1..=5usize);
        let mut n: Vec<u64> = (0..k).map(|_| r.random_range(0..=12)).collect();
        if n.iter().all(|&x| x == 0) {
            n[0] = 1;
        }
        let v = WeightVector::new(n.clone()).unwrap();
        let j = r.random_range(1..=k as u64);
        let alpha_star = [(1u64, 3u64), (1, 2), (2, 3)][r.random_range(0..3)];
        let q = TruncationQuery::new(frac(j, k as u64), frac(alpha_star.0, alpha_star.1)).unwrap();
        let outcome = solve_u_star(&v, &q).unwrap();
        let truncated_distance = match outcome.status {
            TruncationStatus::Solved { u_star } => n.iter().map(|&x| x.saturating_sub(u_star)).sum::<u64>(),
            TruncationStatus::NoTruncationNeeded => 0,
            // Feasibility is monotone in the cap; nothing below N can be
            // feasible either, which the scan below also confirms.
            TruncationStatus::Infeasible => u64::MAX,
        };
        instances += 1;
        let fractional = fractional_cap_distance(&n, (j, k as u64), alpha_star).unwrap_or_else(|| frac(u64::MAX, 1));
        for_each_below(&n, &mut |m| {
            let Some((top, total)) = mwp_small(m, (j, k as u64)) else { return };
            if top * alpha_star.1 > alpha_star.0 * total {
                return;
            }
            alternatives += 1;
            let d: u64 = n.iter().zip(m).map(|(a, b)| a - b).sum();
            if d < truncated_distance {
                beaten += 1;
                if example.is_empty() {
                    example = format!("e.g. N={n:?} alpha={j}/{k} alpha*={}/{}: M={m:?} at distance {d} < {truncated_distance}", alpha_star.0, alpha_star.1);
                }
            }
            if frac(d, 1) < fractional {
                beaten_fractional += 1;
            }
        });
    }
    outcome(
        beaten == 0,
        format!(
            "{instances} instances, {alternatives} feasible alternatives M <= N, {beaten} closer than integer truncation, \
             {beaten_fractional} closer than truncation at a real-valued cap {example}"
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 4: certificate soundness.

fn lognormal_population(r: &mut ChaCha8Rng, k: usize) -> WeightVector {
    let d = LogNormal::new(2.0, 1.5).unwrap();
    WeightVector::new((0..k).map(|_| Distribution::<f64>::sample(&d, r).ceil() as u64).collect()).unwrap()
}

fn criterion_4() -> Outcome {
    let t0 = Instant::now();
    let mut r = rng(4);
    let mut worst: f64 = 0.0;
    let mut settings = 0;
    let mut vacuous = 0;
    let mut pass = true;
    for &delta in &[0.05, 0.1] {
        for &k in &[200usize, 1000] {
            // Populations where the bound just fails: the cap one above U*,
            // plus a two-level population slightly over the bound.
            let mut cases = Vec::new();
            for _ in 0..3 {
                let pop = lognormal_population(&mut r, 1000);
                let q = TruncationQuery::new(ratio(1, 4), ratio(1, 2)).unwrap();
                if let Some(u) = solve_u_star(&pop, &q).unwrap().u_star() {
                    cases.push((pop, u + 1));
                }
            }
            let mut two_level = vec![10u64; 750];
            two_level.extend(vec![31u64; 250]);
            cases.push((WeightVector::new(two_level).unwrap(), 31));
            for (i, (pop, cap)) in cases.into_iter().enumerate() {
                let p = SampleCheckParams::new(k, ratio(1, 4), ratio(1, 2), delta, cap).unwrap();
                let s = monte_carlo_validate(&pop, &p, 2000, 40 + i as u64).unwrap();
                settings += 1;
                vacuous += usize::from(s.condition_holds);
                let rate = s.false_cert_rate();
                worst = worst.max(rate / delta);
                pass &= rate <= delta;
            }
        }
    }
    let secs = t0.elapsed().as_secs_f64();
    outcome(
        pass && vacuous == 0 && secs < 60.0,
        format!(
            "{settings} (delta, k, population) settings x 2000 trials, bound violated in {} of them, worst rate/delta {worst:.3}, {secs:.1} s",
            settings - vacuous
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 5: objective-gap bound.

fn random_shards(r: &mut ChaCha8Rng, task: &SyntheticTask, k: usize) -> Vec<Dataset> {
    (0..k).map(|i| task.sample(r.random_range(1..=20), r.random(), i as u64)).collect()
}

fn criterion_5() -> Outcome {
    let mut r = rng(5);
    let mut violations = Vec::new();
    let mut nonzero_at_top = 0;
    let mut declared_below = 0;
    for trial in 0..100 {
        let k = [3usize, 5, 10][trial % 3];
        let (dim, classes) = (r.random_range(2..=5), r.random_range(2..=5));
        let task = SyntheticTask::new(dim, classes, 2.0, r.random()).unwrap();
        let model = ModelSpec::SoftmaxRegression { dim, classes };
        let shards = random_shards(&mut r, &task, k);
        let declared: Vec<u64> = shards
            .iter()
            .map(|s| {
                let n = s.len() as u64;
                if r.random_bool(0.3) { n * r.random_range(2..=50) } else { n }
            })
            .collect();
        let w = ParamVector::new((0..model.param_count()).map(|_| StandardNormal.sample(&mut r)).collect());
        let max = *declared.iter().max().unwrap();
        let u = r.random_range(1..=max);
        let b = objective_gap_bound(&model, &w, &shards, &declared, u).unwrap();
        if !b.holds(1e-9) {
            let objectives: Vec<f64> = shards
                .iter()
                .map(|s| {
                    let idx: Vec<usize> = (0..s.len()).collect();
                    model.batch_loss_grad(&w, s, &idx, None, None)
                })
                .collect();
            let mean = |weights: &[f64]| -> f64 {
                weights.iter().zip(&objectives).map(|(a, f)| a * f).sum::<f64>() / weights.iter().sum::<f64>()
            };
            let d = mean(&declared.iter().map(|&x| x as f64).collect::<Vec<_>>());
            let t = mean(&declared.iter().map(|&x| x.min(u) as f64).collect::<Vec<_>>());
            if d < t {
                declared_below += 1;
            }
            violations.push(format!("K={k} U={u} declared={declared:?} lhs={:.6} rhs={:.6}", b.lhs, b.rhs));
        }
        let top = objective_gap_bound(&model, &w, &shards, &declared, max).unwrap();
        if top.lhs != 0.0 || top.rhs.abs() > 1e-12 {
            nonzero_at_top += 1;
        }
    }
    let example = violations.first().cloned().unwrap_or_default();
    outcome(
        violations.is_empty() && nonzero_at_top == 0,
        format!(
            "100 instances, {} with lhs > rhs + 1e-9 ({declared_below} of them with declared objective below truncated), \
             {nonzero_at_top} nonzero at U >= max {example}",
            violations.len()
        ),
    )
}

// ---------------------------------------------------------------------------
// Criterion 6: gradients against central differences.

fn relative_gradient_error(model: &ModelSpec, r: &mut ChaCha8Rng) -> f64 {
    let (dim, classes) = (model.dim(), model.classes());
    let rows = r.random_range(1..=6);
    let features: Vec<f64> = (0..rows * dim).map(|_| StandardNormal.sample(r)).collect();
    let labels: Vec<usize> = (0..rows).map(|_| r.random_range(0..classes)).collect();
    let data = Dataset::new(features, dim, labels, classes).unwrap();
    let idx: Vec<usize> = (0..rows).collect();
    let w: Vec<f64> = (0..model.param_count()).map(|_| 0.5 * normal(r)).collect();
    let mask = match model {
        ModelSpec::OneHiddenMlp { hidden, dropout, .. } => Some(DropoutMask::sample(rows, *hidden, *dropout, r)),
        _ => None,
    };
    let mut g = vec![0.0; w.len()];
    model.batch_loss_grad(&w, &data, &idx, mask.as_ref(), Some(&mut g));
    let h = 1e-5;
    let mut worst: f64 = 0.0;
    let mut probe = w.clone();
    for i in 0..w.len() {
        probe[i] = w[i] + h;
        let plus = model.batch_loss_grad(&probe, &data, &idx, mask.as_ref(), None);
        probe[i] = w[i] - h;
        let minus = model.batch_loss_grad(&probe, &data, &idx, mask.as_ref(), None);
        probe[i] = w[i];
        let fd = (plus - minus) / (2.0 * h);
        worst = worst.max((g[i] - fd).abs() / g[i].abs().max(fd.abs()).max(1e-3));
    }
    worst
}

fn criterion_6() -> Outcome {
    let mut r = rng(6);
    let mut worst_softmax: f64 = 0.0;
    let mut worst_mlp: f64 = 0.0;
    for _ in 0..50 {
        let (dim, classes) = (r.random_range(1..=6), r.random_range(2..=5));
        worst_softmax = worst_softmax.max(relative_gradient_error(&ModelSpec::SoftmaxRegression { dim, classes }, &mut r));
        let hidden = r.random_range(1..=8);
        let dropout = [0.0, 0.2, 0.5][r.random_range(0..3)];
        let mlp = ModelSpec::OneHiddenMlp { dim, hidden, classes, dropout };
        worst_mlp = worst_mlp.max(relative_gradient_error(&mlp, &mut r));
    }
    outcome(
        worst_softmax <= 1e-5 && worst_mlp <= 1e-5,
        format!("50 instances per model, worst relative error softmax {worst_softmax:.2e}, mlp {worst_mlp:.2e}"),
    )
}

// ---------------------------------------------------------------------------
// Criterion 7: weighted aggregators under uniform weights.

fn classic_median(mut xs: Vec<f64>) -> f64 {
    xs.sort_by(f64::total_cmp);
    xs[(xs.len() - 1) / 2]
}

fn classic_trimmed(mut xs: Vec<f64>, drop: usize) -> f64 {
    xs.sort_by(f64::total_cmp);
    let kept = &xs[drop..xs.len() - drop];
    kept.iter().sum::<f64>() / kept.len() as f64
}

fn criterion_7() -> Outcome {
    let mut r = rng(7);
    let mut worst: f64 = 0.0;
    for _ in 0..500 {
        let n = r.random_range(1..=15);
        let dim = r.random_range(1..=4);
        let updates: Vec<ParamVector> = (0..n)
            .map(|_| ParamVector::new((0..dim).map(|_| 10.0 * normal(&mut r)).collect()))
            .collect();
        let weight = [1.0, 0.5, 3.0, 7.25][r.random_range(0..4)];
        let weights = vec![weight; n];
        let drop = r.random_range(0..n.div_ceil(2));
        let beta = drop as f64 / n as f64;
        let median = aggregate_weighted_median(&updates, &weights).unwrap();
        let trimmed = aggregate_trimmed_mean(&updates, &weights, beta).unwrap();
        for j in 0..dim {
            let column: Vec<f64> = updates.iter().map(|u| u[j]).collect();
            worst = worst.max((median[j] - classic_median(column.clone())).abs());
            worst = worst.max((trimmed[j] - classic_trimmed(column, drop)).abs());
        }
    }
    outcome(worst <= 1e-12, format!("500 instances, worst absolute difference {worst:.2e}"))
}

// ---------------------------------------------------------------------------
// Criteria 8-10: the default experiment grid.

struct Grid {
    cells: Vec<CellResult>,
    secs: f64,
}

impl Grid {
    fn final_acc(&self, preprocess: &str, aggregator: &str, scenario: Scenario) -> f64 {
        let cell = self
            .cells
            .iter()
            .find(|c| c.key.preprocess_name() == preprocess && c.key.aggregator_name() == aggregator && c.key.scenario == scenario)
            .unwrap_or_else(|| panic!("missing cell {preprocess}/{aggregator}/{scenario}"));
        cell.run.final_accuracy().unwrap_or(f64::NAN)
    }
}

fn run_default_grid() -> Grid {
    let cfg = ExperimentConfig::default();
    let t0 = Instant::now();
    let cells = run_grid(&cfg).expect("default grid");
    Grid { cells, secs: t0.elapsed().as_secs_f64() }
}

const AGGREGATORS: [&str; 3] = ["mean", "median", "trimmed"];

fn criterion_8(g: &Grid) -> Outcome {
    let none = Scenario::NONE;
    let mut pass = g.secs < 300.0;
    let mut parts = Vec::new();
    for agg in AGGREGATORS {
        let p = g.final_acc("passthrough", agg, none);
        let t = g.final_acc("truncate", agg, none);
        pass &= (p - t).abs() <= 0.02;
        parts.push(format!("{agg}: passthrough {p:.4} truncate {t:.4}"));
    }
    let ignore_median = g.final_acc("ignore", "median", none);
    let weighted_median = g.final_acc("passthrough", "median", none);
    pass &= ignore_median <= weighted_median - 0.03;
    parts.push(format!("ignore median {ignore_median:.4} vs weighted {weighted_median:.4}"));
    outcome(pass, format!("{}; full 45-cell grid {:.0} s", parts.join(", "), g.secs))
}

fn criterion_9(g: &Grid) -> Outcome {
    let attack = Scenario::new(AttackKind::Negation, AttackCount::Single);
    let chance = 1.0 / ExperimentConfig::default().task.classes as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for agg in AGGREGATORS {
        let a = g.final_acc("passthrough", agg, attack);
        pass &= a <= chance + 0.05;
        parts.push(format!("passthrough {agg} {a:.4}"));
    }
    for agg in ["median", "trimmed"] {
        let a = g.final_acc("truncate", agg, attack);
        let base = g.final_acc("truncate", agg, Scenario::NONE);
        pass &= (a - base).abs() <= 0.05;
        parts.push(format!("truncate {agg} {a:.4} (no attack {base:.4})"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_10(g: &Grid) -> Outcome {
    let chance = 1.0 / ExperimentConfig::default().task.classes as f64;
    let mut pass = true;
    let mut parts = Vec::new();
    for kind in [AttackKind::Negation, AttackKind::LabelShift] {
        let attack = Scenario::new(kind, AttackCount::Fraction);
        for agg in ["median", "trimmed"] {
            let a = g.final_acc("truncate", agg, attack);
            let base = g.final_acc("truncate", agg, Scenario::NONE);
            let ok = (a - base).abs() <= 0.05;
            pass &= ok;
            parts.push(format!("{attack} truncate {agg} {a:.4} (no attack {base:.4}){}", if ok { "" } else { " FAIL" }));
        }
        let a = g.final_acc("passthrough", "mean", attack);
        let ok = a <= chance + 0.05;
        pass &= ok;
        parts.push(format!("{attack} passthrough mean {a:.4}{}", if ok { "" } else { " FAIL" }));
    }
    outcome(pass, parts.join(", "))
}

// ---------------------------------------------------------------------------
// Criterion 11: byte-identical CLI output.

fn simulate(dir: &Path, name: &str, parallel: bool) -> BTreeMap<String, Vec<u8>> {
    let out = dir.join(name);
    let config = dir.join(format!("{name}.toml"));
    let text = format!(
        "[training]\nrounds = 15\nparallel = {parallel}\n[output]\ndir = \"{}\"\n",
        out.display()
    );
    std::fs::write(&config, text).unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_byzweight"))
        .args(["simulate", "--config"])
        .arg(&config)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    std::fs::read_dir(&out)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), std::fs::read(e.path()).unwrap())
        })
        .collect()
}

fn criterion_11() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let a = simulate(dir.path(), "a", true);
    let b = simulate(dir.path(), "b", true);
    let c = simulate(dir.path(), "c", false);
    let identical = a == b && a == c;
    outcome(
        identical && a.len() == 46,
        format!("{} files per run; two parallel runs and one sequential run byte-identical: {identical}", a.len()),
    )
}

fn main() {
    let mut failed = Vec::new();
    let mut check = |n: usize, title: &str, o: Outcome| {
        report(n, title, &o);
        if !o.pass {
            failed.push(n);
        }
    };
    check(1, "U* oracle equivalence", criterion_1());
    check(2, "mwp and trade-off monotonicity", criterion_2());
    check(3, "L1 optimality of truncation", criterion_3());
    check(4, "certificate soundness", criterion_4());
    check(5, "objective-gap bound", criterion_5());
    check(6, "gradient correctness", criterion_6());
    check(7, "aggregator reductions", criterion_7());
    let grid = run_default_grid();
    check(8, "no-attack grid", criterion_8(&grid));
    check(9, "single inflated negation attacker", criterion_9(&grid));
    check(10, "10% attackers", criterion_10(&grid));
    check(11, "determinism", criterion_11());
    let mut out = std::io::stdout().lock();
    if failed.is_empty() {
        let _ = writeln!(out, "acceptance: all 11 criteria pass");
    } else {
        let _ = writeln!(out, "acceptance: failing criteria {failed:?}");
        drop(out);
        std::process::exit(1);
    }
}
