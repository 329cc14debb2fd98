//! Dimension-domain messages for q-ary density evolution on the BEC.
//!
//! With `q = 2^m` and the all-zero codeword, the set of symbols a BP
//! message still allows is a subspace of `GF(2)^m`, so density evolution
//! only needs the distribution of that subspace's dimension `n = 0..=m`.
//! A check node sums subspaces and a variable node intersects them; the
//! combining rules below average over uniformly random `GL(m,2)` edge labels.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Largest supported field exponent.
pub const DEFAULT_MAX_EXPONENT: u32 = 16;

/// Entries below zero by less than this are treated as cancellation noise.
const CLAMP_TOLERANCE: f64 = 1e-15;

/// Number of `k`-dimensional subspaces of `GF(2)^m`, computed exactly.
/// Zero when `k < 0` or `k > m`.
pub fn gaussian_binomial_exact(m: u32, k: i64) -> Result<u128> {
    if m > DEFAULT_MAX_EXPONENT {
        return invalid(format!(
            "m = {m} exceeds the supported maximum {DEFAULT_MAX_EXPONENT}"
        ));
    }
    if k < 0 || k > i64::from(m) {
        return Ok(0);
    }
    let k = k as u32;
    // prod_{l<k} (2^m - 2^l) / (2^k - 2^l) = prod_{l<k} (2^{m-l} - 1) / (2^{k-l} - 1);
    // every prefix of the product is itself a Gaussian binomial, so the
    // division is exact at each step.
    let mut g: u128 = 1;
    for l in 0..k {
        g = g * ((1u128 << (m - l)) - 1) / ((1u128 << (l + 1)) - 1);
    }
    Ok(g)
}

/// [`gaussian_binomial_exact`] as a float. Exact whenever the value is
/// below `2^53`, which holds for all `m <= 14`.
pub fn gaussian_binomial(m: u32, k: i64) -> Result<f64> {
    gaussian_binomial_exact(m, k).map(|g| g as f64)
}

fn check_indices(m: u32, idx: &[i64]) -> Result<()> {
    if m > DEFAULT_MAX_EXPONENT {
        return invalid(format!(
            "m = {m} exceeds the supported maximum {DEFAULT_MAX_EXPONENT}"
        ));
    }
    if idx.iter().any(|&x| x < 0 || x > i64::from(m)) {
        return invalid(format!("subspace dimensions {idx:?} must lie in [0, {m}]"));
    }
    Ok(())
}

fn g(a: i64, b: i64) -> f64 {
    if a < 0 {
        return 0.0;
    }
    gaussian_binomial(a as u32, b).expect("a <= m <= max exponent")
}

/// Probability that the sum of a fixed `i`-dimensional subspace and a
/// uniformly random `j`-dimensional subspace has dimension `n`.
pub fn coeff_c(m: u32, i: usize, j: usize, n: usize) -> Result<f64> {
    let (mm, i, j, n) = (i64::from(m), i as i64, j as i64, n as i64);
    check_indices(m, &[i, j, n])?;
    if n < i.max(j) || n > mm.min(i + j) {
        return Ok(0.0);
    }
    let num = g(mm - i, mm - n) * g(i, n - j) * 2f64.powi(((n - i) * (n - j)) as i32);
    Ok(num / g(mm, mm - j))
}

/// Probability that the intersection of a fixed `i`-dimensional subspace
/// and a uniformly random `j`-dimensional subspace has dimension `n`.
pub fn coeff_v(m: u32, i: usize, j: usize, n: usize) -> Result<f64> {
    let (mm, i, j, n) = (i64::from(m), i as i64, j as i64, n as i64);
    check_indices(m, &[i, j, n])?;
    if n < 0.max(i + j - mm) || n > i.min(j) {
        return Ok(0.0);
    }
    let num = g(i, n) * g(mm - i, j - n) * 2f64.powi(((i - n) * (j - n)) as i32);
    Ok(num / g(mm, j))
}

/// Probability vector over message dimensions `0..=m`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeMessage {
    probs: Vec<f64>,
}

impl DeMessage {
    /// Validates entries in `[0,1]` summing to one within `1e-9`, then renormalizes.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.len() < 2 {
            return invalid("a message needs m >= 1, i.e. at least two entries");
        }
        if probs.iter().any(|p| !(0.0..=1.0).contains(p)) {
            return invalid(format!("message entries must lie in [0,1]: {probs:?}"));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return invalid(format!("message entries sum to {sum}, not 1"));
        }
        let mut probs = probs;
        probs.iter_mut().for_each(|p| *p /= sum);
        Ok(DeMessage { probs })
    }

    /// Point mass on dimension `n`.
    pub fn delta(m: u32, n: usize) -> Self {
        assert!(n <= m as usize, "dimension {n} exceeds m = {m}");
        let mut probs = vec![0.0; m as usize + 1];
        probs[n] = 1.0;
        DeMessage { probs }
    }

    pub(crate) fn from_raw(probs: Vec<f64>) -> Self {
        DeMessage { probs }
    }

    /// Binomial dimension distribution of a freshly received symbol: each
    /// of the `m` bits is erased independently with probability `epsilon`.
    pub fn initial(m: u32, epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return invalid(format!("erasure probability {epsilon} outside [0,1]"));
        }
        if !(1..=DEFAULT_MAX_EXPONENT).contains(&m) {
            return invalid(format!("m = {m} outside [1, {DEFAULT_MAX_EXPONENT}]"));
        }
        let probs = (0..=m)
            .map(|n| {
                let binom = binomial(m, n);
                binom * epsilon.powi(n as i32) * (1.0 - epsilon).powi((m - n) as i32)
            })
            .collect();
        Ok(DeMessage { probs })
    }

    pub fn m(&self) -> u32 {
        (self.probs.len() - 1) as u32
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Probability that the symbol is fully determined.
    pub fn known(&self) -> f64 {
        self.probs[0]
    }

    /// `P(dim <= d)` for `d = 0..=m`.
    pub fn cdf(&self) -> Vec<f64> {
        self.probs
            .iter()
            .scan(0.0, |acc, p| {
                *acc += p;
                Some(*acc)
            })
            .collect()
    }

    /// Degradation order: `self` is at least as informative as `other` when
    /// its dimension CDF is pointwise no smaller (up to `tol`).
    pub fn dominates(&self, other: &DeMessage, tol: f64) -> bool {
        self.m() == other.m()
            && self
                .cdf()
                .iter()
                .zip(other.cdf())
                .all(|(a, b)| *a >= b - tol)
    }

    pub fn max_abs_diff(&self, other: &DeMessage) -> f64 {
        self.probs
            .iter()
            .zip(&other.probs)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

fn binomial(m: u32, n: u32) -> f64 {
    (0..n).fold(1.0, |acc, l| acc * f64::from(m - l) / f64::from(l + 1))
}

/// Which node rule a combining operation applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Rule {
    /// Subspace sum at a check node; identity is dimension 0.
    Check,
    /// Subspace intersection at a variable node; identity is dimension `m`.
    Variable,
}

/// `out[n] = Σ_{i,j} a[i]·b[j]·coef[(i·D + j)·D + n]` for a fixed length `D`.
fn accumulate<const D: usize>(coef: &[f64], a: &[f64], b: &[f64], out: &mut [f64]) {
    let (a, b): (&[f64; D], &[f64; D]) = (a.try_into().unwrap(), b.try_into().unwrap());
    let mut acc = [0.0f64; D];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate() {
            let w = ai * bj;
            if w == 0.0 {
                continue;
            }
            let row: &[f64; D] = coef[(i * D + j) * D..(i * D + j + 1) * D]
                .try_into()
                .unwrap();
            for (o, c) in acc.iter_mut().zip(row) {
                *o += c * w;
            }
        }
    }
    out.copy_from_slice(&acc);
}

macro_rules! dispatch_accumulate {
    ($d:expr, $coef:expr, $a:expr, $b:expr, $out:expr; $($n:literal)*) => {
        match $d {
            $($n => accumulate::<$n>($coef, $a, $b, $out),)*
            _ => unreachable!("message length outside table range"),
        }
    };
}

/// Precomputed `G`, `C` and `V` tables for one field exponent.
#[derive(Debug, Clone)]
pub struct SubspaceTables {
    m: u32,
    g: Vec<f64>,
    c: Vec<f64>,
    v: Vec<f64>,
}

impl SubspaceTables {
    pub fn new(m: u32) -> Result<Self> {
        if !(1..=DEFAULT_MAX_EXPONENT).contains(&m) {
            return invalid(format!("m = {m} outside [1, {DEFAULT_MAX_EXPONENT}]"));
        }
        let d = m as usize + 1;
        let mut g_tab = vec![0.0; d * d];
        for a in 0..d {
            for b in 0..d {
                g_tab[a * d + b] = gaussian_binomial(a as u32, b as i64)?;
            }
        }
        let mut c = vec![0.0; d * d * d];
        let mut v = vec![0.0; d * d * d];
        for i in 0..d {
            for j in 0..d {
                for n in 0..d {
                    c[(i * d + j) * d + n] = coeff_c(m, i, j, n)?;
                    v[(i * d + j) * d + n] = coeff_v(m, i, j, n)?;
                }
            }
        }
        Ok(SubspaceTables { m, g: g_tab, c, v })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    /// Message length `m + 1`.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.m as usize + 1
    }

    pub fn gaussian(&self, a: usize, b: usize) -> f64 {
        let d = self.len();
        self.g[a * d + b]
    }

    pub fn c(&self, i: usize, j: usize, n: usize) -> f64 {
        let d = self.len();
        self.c[(i * d + j) * d + n]
    }

    pub fn v(&self, i: usize, j: usize, n: usize) -> f64 {
        let d = self.len();
        self.v[(i * d + j) * d + n]
    }

    /// Identity element of a rule.
    pub fn identity(&self, rule: Rule) -> DeMessage {
        match rule {
            Rule::Check => DeMessage::delta(self.m, 0),
            Rule::Variable => DeMessage::delta(self.m, self.m as usize),
        }
    }

    /// Combines two raw probability slices into `out`, then clamps
    /// cancellation noise and renormalizes.
    pub fn combine_into(&self, rule: Rule, a: &[f64], b: &[f64], out: &mut [f64]) -> Result<()> {
        let coef = match rule {
            Rule::Check => &self.c,
            Rule::Variable => &self.v,
        };
        let d = self.len();
        if a.len() != d || b.len() != d || out.len() != d {
            return Err(Error::DimensionMismatch {
                left: a.len().max(b.len()),
                right: d,
            });
        }
        dispatch_accumulate!(d, coef, a, b, out; 2 3 4 5 6 7 8 9 10 11 12 13 14 15 16 17);
        normalize(out)
    }

    /// Sum rule `p1 ⊠ p2`.
    pub fn boxtimes(&self, p1: &DeMessage, p2: &DeMessage) -> Result<DeMessage> {
        self.combine(Rule::Check, p1, p2)
    }

    /// Intersection rule `p1 ⊡ p2`.
    pub fn boxdot(&self, p1: &DeMessage, p2: &DeMessage) -> Result<DeMessage> {
        self.combine(Rule::Variable, p1, p2)
    }

    pub fn combine(&self, rule: Rule, p1: &DeMessage, p2: &DeMessage) -> Result<DeMessage> {
        self.check_dim(p1)?;
        self.check_dim(p2)?;
        let mut out = vec![0.0; self.len()];
        self.combine_into(rule, &p1.probs, &p2.probs, &mut out)?;
        Ok(DeMessage { probs: out })
    }

    /// `e`-fold combination of `p` with itself; `e = 0` gives the identity.
    pub fn box_power(&self, p: &DeMessage, e: u32, rule: Rule) -> Result<DeMessage> {
        self.check_dim(p)?;
        let mut acc = self.identity(rule);
        if e == 0 {
            return Ok(acc);
        }
        acc = p.clone();
        let mut scratch = vec![0.0; self.len()];
        for _ in 1..e {
            self.combine_into(rule, &acc.probs, &p.probs, &mut scratch)?;
            std::mem::swap(&mut acc.probs, &mut scratch);
        }
        Ok(acc)
    }

    fn check_dim(&self, p: &DeMessage) -> Result<()> {
        if p.probs.len() != self.len() {
            return Err(Error::DimensionMismatch {
                left: self.len() - 1,
                right: p.probs.len() - 1,
            });
        }
        Ok(())
    }
}

/// Clamps cancellation noise to zero and rescales to unit mass.
pub(crate) fn normalize(p: &mut [f64]) -> Result<()> {
    let mut sum = 0.0;
    for x in p.iter_mut() {
        if *x < 0.0 {
            if *x < -CLAMP_TOLERANCE {
                return Err(Error::Numeric(format!("negative probability {x}")));
            }
            *x = 0.0;
        }
        sum += *x;
    }
    if !(sum > 0.0) || !sum.is_finite() {
        return Err(Error::Numeric(format!(
            "message mass {sum} cannot be normalized"
        )));
    }
    if sum != 1.0 {
        let inv = 1.0 / sum;
        p.iter_mut().for_each(|x| *x *= inv);
    }
    Ok(())
}

/// Stand-alone `⊠` for callers without a table cache.
pub fn boxtimes(p1: &DeMessage, p2: &DeMessage) -> Result<DeMessage> {
    if p1.m() != p2.m() {
        return Err(Error::DimensionMismatch {
            left: p1.m() as usize,
            right: p2.m() as usize,
        });
    }
    SubspaceTables::new(p1.m())?.boxtimes(p1, p2)
}

/// Stand-alone `⊡` for callers without a table cache.
pub fn boxdot(p1: &DeMessage, p2: &DeMessage) -> Result<DeMessage> {
    if p1.m() != p2.m() {
        return Err(Error::DimensionMismatch {
            left: p1.m() as usize,
            right: p2.m() as usize,
        });
    }
    SubspaceTables::new(p1.m())?.boxdot(p1, p2)
}
