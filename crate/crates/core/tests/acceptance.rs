//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Run all criteria with `cargo test -p scde-core --test acceptance`, or a
//! subset with `cargo test -p scde-core --test acceptance -- 1 7 10`.
//! Failing criteria are reported without failing the run unless `--strict`
//! is passed.

mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use common::{binary_threshold, block_rows};
use scde_core::analysis::{complexity_profile, latency_wd, DecodeMode, COMPARISON_GRID};
use scde_core::threshold::{
    capacity_gap, find_l_star, find_w_star, fsd_threshold, wd_threshold, SaturationResult,
    ThresholdConfig, ThresholdResult,
};
use scde_core::{EnsembleSpec, PdeConfig, Result, Rule, SubspaceTables};

/// Windows the saturation searches of the suite may try.
const W_MAX: usize = 40;
/// Iteration cap for criteria on finite-length chains, large enough that
/// only convergence or a stall ends a run.
const LONG_RUN: usize = 1_000_000;
/// Couplings the `L*` search may try.
const L_MAX: usize = 40;

/// Order of decoding complexity of `C1(3,6,m,2)` at `ε = 0.44`, by `(m, W)`.
#[rustfmt::skip]
const ORDER_AT_044: &[((u32, usize), f64)] = &[
    ((1, 12), 1.14e3), ((2, 6), 1.03e3),
    ((1, 20), 1.77e3), ((2, 10), 1.37e3), ((4, 5), 2.77e3), ((5, 4), 4.92e3),
    ((1, 24), 2.07e3), ((2, 12), 1.62e3), ((3, 8), 2.05e3), ((4, 6), 3.07e3), ((6, 4), 8.96e3), ((8, 3), 3.12e4),
    ((1, 30), 2.49e3), ((2, 15), 1.98e3), ((3, 10), 2.51e3), ((5, 6), 5.91e3), ((6, 5), 9.77e3), ((10, 3), 1.12e5),
    ((1, 40), 3.09e3), ((2, 20), 2.55e3), ((4, 10), 4.88e3), ((5, 8), 7.75e3), ((8, 5), 3.67e4), ((10, 4), 1.13e5),
    ((1, 60), 3.94e3), ((2, 30), 3.58e3), ((3, 20), 4.71e3), ((4, 15), 7.10e3), ((5, 12), 1.13e4), ((6, 10), 1.88e4),
    ((10, 6), 1.66e5),
];

fn spec(s: &str) -> EnsembleSpec {
    s.parse().unwrap_or_else(|e| panic!("{s}: {e}"))
}

fn type2(m: u32) -> EnsembleSpec {
    EnsembleSpec::type_p(3, 2, m, 2, 100).unwrap()
}

fn long_runs() -> ThresholdConfig {
    ThresholdConfig {
        pde: PdeConfig {
            max_iters: LONG_RUN,
            ..PdeConfig::default()
        },
        ..ThresholdConfig::default()
    }
}

/// Results shared between criteria.
#[derive(Default)]
struct Cache {
    fsd_type2: BTreeMap<u32, ThresholdResult>,
    w_star_type2: BTreeMap<u32, SaturationResult>,
}

impl Cache {
    fn fsd(&mut self, m: u32) -> Result<ThresholdResult> {
        if let Some(r) = self.fsd_type2.get(&m) {
            return Ok(r.clone());
        }
        let r = fsd_threshold(&type2(m), &ThresholdConfig::default())?;
        self.fsd_type2.insert(m, r.clone());
        Ok(r)
    }

    fn w_star(&mut self, m: u32) -> Result<SaturationResult> {
        if let Some(r) = self.w_star_type2.get(&m) {
            return Ok(r.clone());
        }
        let r = find_w_star(&type2(m), &ThresholdConfig::default(), W_MAX)?;
        self.w_star_type2.insert(m, r.clone());
        Ok(r)
    }
}

type Verdict = Result<(bool, String)>;

fn binary_oracle() -> Verdict {
    let mut ok = true;
    let mut notes = Vec::new();
    for j in [3u32, 4, 5] {
        let ours =
            fsd_threshold(&EnsembleSpec::block(j, 2, 1)?, &ThresholdConfig::default())?.epsilon;
        let oracle = binary_threshold(&block_rows(j, 2), 1e-6);
        ok &= (ours - oracle).abs() <= 1e-6;
        if j == 3 {
            ok &= (ours - 0.4294).abs() <= 1e-3;
        }
        notes.push(format!(
            "B({j},{},1) {ours:.6} vs oracle {oracle:.6}",
            2 * j
        ));
    }
    Ok((ok, notes.join(", ")))
}

fn capacity_proximity() -> Verdict {
    let s = type2(5);
    let r = wd_threshold(&s, 5, &ThresholdConfig::default())?;
    let gap = capacity_gap(s.design_rate()?, r.epsilon)?;
    let asymptotic = capacity_gap(0.5, r.epsilon)?;
    Ok((
        gap <= 0.002,
        format!(
            "epsilon {:.6}, gap {:.3}% at R_L, {:.3}% at the L -> infinity rate 1/2",
            r.epsilon,
            100.0 * gap,
            100.0 * asymptotic
        ),
    ))
}

fn w_star_reproduction(cache: &mut Cache) -> Verdict {
    let expected = [10usize, 8, 8, 6, 5, 5, 4, 4, 4, 4];
    let mut ok = true;
    let mut exact_from_4 = true;
    let mut got = Vec::new();
    for (m, &want) in (1u32..=10).zip(&expected) {
        let star = cache.w_star(m)?.star_value;
        ok &= star.abs_diff(want) <= 1;
        exact_from_4 &= m < 4 || star == want;
        got.push(format!("{star}"));
    }
    let want: Vec<String> = expected.iter().map(|w| w.to_string()).collect();
    Ok((
        ok,
        format!(
            "W* = [{}], expected [{}], exact for m >= 4: {exact_from_4}",
            got.join(", "),
            want.join(", ")
        ),
    ))
}

fn l_star_reproduction() -> Verdict {
    let cfg = long_runs();
    let mut ok = true;
    let mut notes = Vec::new();
    for (m, want) in [(1u32, 15usize), (3, 10), (6, 8), (8, 8), (10, 8)] {
        match find_l_star(&type2(m), &cfg, L_MAX) {
            Ok(r) => {
                ok &= r.star_value.abs_diff(want) <= 1;
                notes.push(format!("m={m}: {} (expected {want})", r.star_value));
            }
            Err(e) => {
                ok = false;
                notes.push(format!("m={m}: {e}"));
            }
        }
    }
    Ok((ok, notes.join(", ")))
}

fn window_monotonicity() -> Verdict {
    let cfg = ThresholdConfig::default();
    let mut violations = Vec::new();
    let mut sequences = 0;
    for m in [1u32, 2, 4, 8] {
        let mut specs = vec![EnsembleSpec::classical(3, 2, m, 20)?];
        for p in 1..=3 {
            specs.push(EnsembleSpec::type_p(3, 2, m, p, 20)?);
        }
        for s in specs {
            let mut prev = 0.0;
            for w in s.coupling_width() + 1..=15 {
                let eps = wd_threshold(&s, w, &cfg)?.epsilon;
                if eps < prev {
                    violations.push(format!("{s} W={w}: {eps:.6} < {prev:.6}"));
                }
                prev = eps;
            }
            sequences += 1;
        }
    }
    Ok((
        violations.is_empty(),
        format!(
            "{sequences} sequences at L=20, violations: [{}]",
            violations.join("; ")
        ),
    ))
}

fn full_window_matches_flooding() -> Verdict {
    let cfg = long_runs();
    let mut ok = true;
    let mut notes = Vec::new();
    for s in [
        "C1(3,6,1,2,L=10)",
        "C1(3,6,3,1,L=8)",
        "C2(3,6,2,L=8)",
        "C1(3,6,5,3,L=8)",
        "C3(4,8,2,L=6)",
    ] {
        let s = spec(s);
        let full = wd_threshold(&s, s.positions() + s.coupling_width(), &cfg)?.epsilon;
        let fsd = fsd_threshold(&s, &cfg)?.epsilon;
        ok &= (full - fsd).abs() <= 1e-6;
        notes.push(format!("{s} {full:.7}/{fsd:.7}"));
    }
    // Halving the stall threshold leaves flooding thresholds in place.
    let s = spec("C1(3,6,2,2,L=10)");
    let base = fsd_threshold(&s, &cfg)?.epsilon;
    let mut halved = cfg;
    halved.pde.stall_eps /= 2.0;
    let finer = fsd_threshold(&s, &halved)?.epsilon;
    ok &= (base - finer).abs() <= 1e-6;
    notes.push(format!("halved stall {base:.7}/{finer:.7}"));
    Ok((ok, notes.join(", ")))
}

fn permutation_invariance() -> Verdict {
    let cfg = ThresholdConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for m in [1u32, 3, 6] {
        let a = fsd_threshold(&EnsembleSpec::type_p(3, 2, m, 1, 100)?, &cfg)?.epsilon;
        let b = fsd_threshold(&EnsembleSpec::type_p(3, 2, m, 3, 100)?, &cfg)?.epsilon;
        ok &= (a - b).abs() <= 1e-6;
        notes.push(format!("m={m}: {a:.6}/{b:.6}"));
    }
    Ok((ok, notes.join(", ")))
}

fn non_monotone_flooding(cache: &mut Cache) -> Verdict {
    let (e1, e5, e10) = (
        cache.fsd(1)?.epsilon,
        cache.fsd(5)?.epsilon,
        cache.fsd(10)?.epsilon,
    );
    Ok((
        e1 < e5 && e10 < e5,
        format!("eps*(1) {e1:.6}, eps*(5) {e5:.6}, eps*(10) {e10:.6}"),
    ))
}

fn type3_divergence() -> Verdict {
    let cfg = ThresholdConfig::default();
    let mut plateau = Vec::new();
    let mut flooding = Vec::new();
    for m in 4u32..=10 {
        let s = EnsembleSpec::type_p(3, 2, m, 3, 100)?;
        plateau.push(find_w_star(&s, &cfg, W_MAX)?.plateau_value);
        flooding.push(fsd_threshold(&s, &cfg)?.epsilon);
    }
    let decreasing = plateau.windows(2).all(|p| p[1] < p[0]);
    let non_decreasing = flooding.windows(2).all(|p| p[1] >= p[0]);
    let fmt = |v: &[f64]| {
        v.iter()
            .map(|x| format!("{x:.6}"))
            .collect::<Vec<_>>()
            .join(", ")
    };
    Ok((
        decreasing && non_decreasing,
        format!(
            "m=4..10 WD plateau [{}], FSD [{}]",
            fmt(&plateau),
            fmt(&flooding)
        ),
    ))
}

fn minimum_window() -> Verdict {
    let r = wd_threshold(&spec("C4(5,10,2)"), 4, &ThresholdConfig::default())?;
    Ok((
        r.epsilon == 0.0 && r.window_too_small,
        format!("epsilon {}, flag {}", r.epsilon, r.window_too_small),
    ))
}

fn slow_saturation() -> Verdict {
    let r = find_w_star(&spec("C1(2,4,1)"), &ThresholdConfig::default(), W_MAX)?;
    Ok((
        r.star_value.abs_diff(30) <= 1,
        format!(
            "W* = {} (expected 30), plateau {:.6}",
            r.star_value, r.plateau_value
        ),
    ))
}

fn complexity_savings(cache: &mut Cache) -> Verdict {
    let cfg = PdeConfig::default();
    let mut ok = true;
    let mut notes = Vec::new();
    for m in 1u32..=10 {
        let s = type2(m);
        let star = cache.w_star(m)?;
        let wd_eps = star
            .trace
            .iter()
            .find(|(w, _)| *w == star.star_value)
            .map(|(_, e)| *e)
            .unwrap_or(star.plateau_value);
        let eps = cache.fsd(m)?.epsilon.min(wd_eps);
        let fsd = complexity_profile(&s, DecodeMode::Fsd, eps, &cfg)?;
        let wd = complexity_profile(&s, DecodeMode::Wd(star.star_value), eps, &cfg)?;
        let saving = 1.0 - wd.order / fsd.order;
        ok &= (0.65..=1.0).contains(&saving);
        notes.push(format!("m={m}: {:.1}%", 100.0 * saving));
    }
    Ok((ok, notes.join(", ")))
}

fn comparison_table() -> Verdict {
    let cfg = PdeConfig::default();
    let anchor = complexity_profile(&type2(2), DecodeMode::Wd(6), 0.488, &cfg)?.order;
    let mut ok = anchor > 9.25e3 / 2.0 && anchor < 9.25e3 * 2.0;
    let mut notes = vec![format!("(2,6)@0.488 {anchor:.3e}")];

    let mut rows: BTreeMap<u64, Vec<(u32, f64)>> = BTreeMap::new();
    let mut off_band = Vec::new();
    for &(m, w) in COMPARISON_GRID {
        let order = complexity_profile(&type2(m), DecodeMode::Wd(w), 0.44, &cfg)?.order;
        let reference = ORDER_AT_044
            .iter()
            .find(|(key, _)| *key == (m, w))
            .map(|(_, v)| *v)
            .expect("grid cell without a reference value");
        if !(order > reference / 2.0 && order < reference * 2.0) {
            off_band.push(format!("({m},{w}) {order:.3e} vs {reference:.2e}"));
        }
        rows.entry(latency_wd(2, m, w)?.latency)
            .or_default()
            .push((m, order));
    }
    ok &= off_band.is_empty();
    let mut winners = Vec::new();
    for (latency, cells) in &rows {
        let best = cells
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|c| c.0)
            .unwrap();
        ok &= best == 2;
        winners.push(format!("T={latency}: m={best}"));
    }
    notes.push(format!("row minima at 0.44 [{}]", winners.join(", ")));
    notes.push(format!("outside 2x: [{}]", off_band.join("; ")));
    Ok((ok, notes.join(", ")))
}

fn random_message(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    let mut p: Vec<f64> = (0..d)
        .map(|_| {
            if rng.gen_bool(0.2) {
                0.0
            } else {
                rng.gen::<f64>()
            }
        })
        .collect();
    if p.iter().all(|&x| x == 0.0) {
        p[rng.gen_range(0..d)] = 1.0;
    }
    let s: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= s);
    p
}

fn cdf(p: &[f64]) -> Vec<f64> {
    p.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

/// `p ⪯ q` up to `tol`.
fn degraded(p: &[f64], q: &[f64], tol: f64) -> bool {
    cdf(p).iter().zip(cdf(q)).all(|(a, b)| *a >= b - tol)
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn algebra_suite() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut violations: BTreeMap<&str, usize> = BTreeMap::new();
    let mut flag = |name: &'static str, bad: bool| {
        *violations.entry(name).or_default() += bad as usize;
    };
    for m in 1u32..=8 {
        let t = SubspaceTables::new(m)?;
        let d = t.len();
        let combine = |rule, a: &[f64], b: &[f64]| -> Result<Vec<f64>> {
            let mut out = vec![0.0; d];
            t.combine_into(rule, a, b, &mut out)?;
            Ok(out)
        };
        for i in 0..d {
            for j in 0..d {
                let c: f64 = (0..d).map(|n| t.c(i, j, n)).sum();
                let v: f64 = (0..d).map(|n| t.v(i, j, n)).sum();
                flag(
                    "coefficient sums",
                    (c - 1.0).abs() > 1e-12 || (v - 1.0).abs() > 1e-12,
                );
                let c_off = (0..d)
                    .any(|n| t.c(i, j, n) != 0.0 && (n < i.max(j) || n > (m as usize).min(i + j)));
                let v_off = (0..d)
                    .any(|n| t.v(i, j, n) != 0.0 && (n + (m as usize) < i + j || n > i.min(j)));
                flag("coefficient support", c_off || v_off);
            }
        }
        for _ in 0..1000 {
            let (p, q, r) = (
                random_message(&mut rng, d),
                random_message(&mut rng, d),
                random_message(&mut rng, d),
            );
            for (rule, coef) in [(Rule::Check, 0), (Rule::Variable, 1)] {
                let raw: f64 = (0..d)
                    .flat_map(|i| (0..d).map(move |j| (i, j)))
                    .map(|(i, j)| {
                        let k: f64 = (0..d)
                            .map(|n| {
                                if coef == 0 {
                                    t.c(i, j, n)
                                } else {
                                    t.v(i, j, n)
                                }
                            })
                            .sum();
                        p[i] * q[j] * k
                    })
                    .sum();
                flag("normalization closure", (raw - 1.0).abs() > 1e-9);

                let pq = combine(rule, &p, &q)?;
                flag(
                    "commutativity",
                    max_diff(&pq, &combine(rule, &q, &p)?) > 1e-12,
                );

                let left = combine(rule, &pq, &r)?;
                let right = combine(rule, &p, &combine(rule, &q, &r)?)?;
                flag("associativity", max_diff(&left, &right) > 1e-10);

                let id = t.identity(rule);
                flag(
                    "identity",
                    max_diff(&combine(rule, &p, id.probs())?, &p) > 1e-12,
                );

                // p' has the pointwise larger CDF of p and q, hence p' ⪯ q.
                let lower: Vec<f64> = cdf(&p).iter().zip(cdf(&q)).map(|(a, b)| a.max(b)).collect();
                let better: Vec<f64> = (0..d)
                    .map(|n| {
                        if n == 0 {
                            lower[0]
                        } else {
                            (lower[n] - lower[n - 1]).max(0.0)
                        }
                    })
                    .collect();
                let a = combine(rule, &better, &r)?;
                let b = combine(rule, &q, &r)?;
                flag("degradation monotonicity", !degraded(&a, &b, 1e-12));
            }
        }
        for k in 0..20 {
            let lo = scde_core::DeMessage::initial(m, k as f64 / 20.0)?;
            let hi = scde_core::DeMessage::initial(m, (k + 1) as f64 / 20.0)?;
            flag(
                "initial message order",
                !degraded(lo.probs(), hi.probs(), 1e-12),
            );
        }
    }
    let total: usize = violations.values().sum();
    let detail: Vec<String> = violations.iter().map(|(k, v)| format!("{k} {v}")).collect();
    Ok((
        total == 0,
        format!("m=1..8, violations: {}", detail.join(", ")),
    ))
}

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let strict = args.iter().any(|a| a == "--strict");
    let selected: Vec<usize> = args.iter().filter_map(|a| a.parse().ok()).collect();
    let wanted = |n: usize| selected.is_empty() || selected.contains(&n);
    let mut cache = Cache::default();
    let mut failures = 0;
    let suite_start = Instant::now();
    for n in 1..=14 {
        if !wanted(n) {
            continue;
        }
        let start = Instant::now();
        let (name, verdict) = match n {
            1 => ("binary oracle equivalence", binary_oracle()),
            2 => ("capacity proximity", capacity_proximity()),
            3 => ("W* reproduction", w_star_reproduction(&mut cache)),
            4 => ("L* reproduction", l_star_reproduction()),
            5 => ("window monotonicity", window_monotonicity()),
            6 => (
                "full window equals flooding",
                full_window_matches_flooding(),
            ),
            7 => ("row-permutation invariance", permutation_invariance()),
            8 => (
                "non-monotone flooding curve",
                non_monotone_flooding(&mut cache),
            ),
            9 => ("type-3 divergence", type3_divergence()),
            10 => ("minimum-window convention", minimum_window()),
            11 => ("slow (2,4) saturation", slow_saturation()),
            12 => ("complexity savings", complexity_savings(&mut cache)),
            13 => ("comparison table", comparison_table()),
            _ => ("algebra properties", algebra_suite()),
        };
        let (ok, detail) = verdict.unwrap_or_else(|e| (false, format!("error: {e}")));
        failures += !ok as usize;
        println!(
            "criterion {n:>2} {} {name}: {detail} [{:.0}s]",
            if ok { "PASS" } else { "FAIL" },
            start.elapsed().as_secs_f64()
        );
    }
    println!(
        "acceptance: {failures} failing criteria [{:.0}s]",
        suite_start.elapsed().as_secs_f64()
    );
    if strict && failures > 0 {
        std::process::exit(1);
    }
}
