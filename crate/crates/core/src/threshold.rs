//! Threshold bisection and saturation searches.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::{invalid, Error, Result};
use crate::pde::{PdeConfig, PdeEngine};
use crate::window::{WindowConfig, WindowedDecoder};

/// Two thresholds closer than this are numerically indistinguishable.
pub const INDISTINGUISHABLE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub pde: PdeConfig,
    /// Bisection stops once the bracket is at most this wide.
    pub resolution: f64,
    /// Tolerance of the `≅` comparison used by saturation searches.
    pub tolerance: f64,
    /// Larger parameter values that must reproduce a plateau before it is accepted.
    pub confirmations: usize,
    pub w_max: usize,
    pub l_max: usize,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        ThresholdConfig {
            pde: PdeConfig::default(),
            resolution: INDISTINGUISHABLE,
            tolerance: INDISTINGUISHABLE,
            confirmations: 3,
            w_max: 40,
            l_max: 100,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    /// Largest erasure probability verified to decode (the bracket's lower end).
    pub epsilon: f64,
    /// `(decodes, fails)`.
    pub bracket: (f64, f64),
    /// Number of density-evolution runs.
    pub evaluations: usize,
    /// Final bracket width.
    pub resolution: f64,
    /// Set when the window is smaller than `w + 1`; the threshold is then 0 by convention.
    pub window_too_small: bool,
}

impl ThresholdResult {
    fn too_small() -> Self {
        ThresholdResult {
            epsilon: 0.0,
            bracket: (0.0, 0.0),
            evaluations: 0,
            resolution: 0.0,
            window_too_small: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaturationResult {
    /// `W*` or `L*`.
    pub star_value: usize,
    /// `(parameter, threshold)` pairs in sweep order.
    pub trace: Vec<(usize, f64)>,
    pub plateau_value: f64,
}

/// Bisects `[lo, hi]` for the boundary of a predicate that holds at `lo`
/// and fails at `hi`; both ends are checked first.
pub fn bisect(
    mut decodes: impl FnMut(f64) -> Result<bool>,
    lo: f64,
    hi: f64,
    resolution: f64,
) -> Result<ThresholdResult> {
    if !(resolution > 0.0) {
        return invalid("bisection resolution must be positive");
    }
    if !(lo < hi) {
        return invalid(format!("empty bisection interval [{lo}, {hi}]"));
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut evaluations = 2;
    if !decodes(lo)? {
        return Err(Error::DegenerateBracket(format!(
            "decoding fails at the lower end {lo}"
        )));
    }
    if decodes(hi)? {
        return Err(Error::DegenerateBracket(format!(
            "decoding succeeds at the upper end {hi}"
        )));
    }
    while hi - lo > resolution {
        let mid = 0.5 * (lo + hi);
        evaluations += 1;
        if decodes(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(ThresholdResult {
        epsilon: lo,
        bracket: (lo, hi),
        evaluations,
        resolution: hi - lo,
        window_too_small: false,
    })
}

/// Flooding-schedule threshold of an ensemble.
pub fn fsd_threshold(spec: &EnsembleSpec, config: &ThresholdConfig) -> Result<ThresholdResult> {
    let engine = PdeEngine::new(&spec.base_matrix()?, spec.m)?;
    bisect(
        |eps| Ok(engine.run_fsd(eps, &config.pde, None)?.success),
        0.0,
        1.0,
        config.resolution,
    )
}

/// Windowed decoding threshold with window size `window`. Windows below
/// `w + 1` give threshold 0 with `window_too_small` set.
pub fn wd_threshold(
    spec: &EnsembleSpec,
    window: usize,
    config: &ThresholdConfig,
) -> Result<ThresholdResult> {
    let Some(chain) = spec.chain()? else {
        return invalid("windowed decoding needs a coupled ensemble");
    };
    if window < chain.width + 1 {
        return Ok(ThresholdResult::too_small());
    }
    let decoder = WindowedDecoder::new(chain, spec.m)?;
    let wcfg = WindowConfig::with_pde(window, config.pde);
    bisect(
        |eps| Ok(decoder.run(eps, &wcfg)?.success),
        0.0,
        1.0,
        config.resolution,
    )
}

/// Index of the first entry reproduced by the next `confirmations` entries.
fn plateau_start(values: &[f64], confirmations: usize, tol: f64) -> Option<usize> {
    (0..values.len()).find(|&c| {
        c + confirmations < values.len()
            && values[c + 1..=c + confirmations]
                .iter()
                .all(|v| (v - values[c]).abs() <= tol)
    })
}

fn saturate(
    params: impl Iterator<Item = usize>,
    mut threshold: impl FnMut(usize) -> Result<f64>,
    config: &ThresholdConfig,
    name: &'static str,
    cap: usize,
) -> Result<SaturationResult> {
    let mut trace: Vec<(usize, f64)> = Vec::new();
    let mut values = Vec::new();
    for p in params {
        let eps = threshold(p)?;
        trace.push((p, eps));
        values.push(eps);
        if let Some(c) = plateau_start(&values, config.confirmations, config.tolerance) {
            let plateau = values[c..].iter().copied().fold(f64::MIN, f64::max);
            return Ok(SaturationResult {
                star_value: trace[c].0,
                trace,
                plateau_value: plateau,
            });
        }
    }
    Err(Error::NoPlateau { param: name, cap })
}

/// Smallest window size whose threshold has reached the saturated value.
pub fn find_w_star(
    spec: &EnsembleSpec,
    config: &ThresholdConfig,
    w_max: usize,
) -> Result<SaturationResult> {
    let w = spec.coupling_width();
    if !spec.is_coupled() {
        return invalid("W* needs a coupled ensemble");
    }
    if w_max < w + 1 {
        return invalid(format!(
            "W_max = {w_max} is below the minimum window {}",
            w + 1
        ));
    }
    let cap = w_max.min(spec.length + w);
    saturate(
        w + 1..=cap,
        |window| Ok(wd_threshold(spec, window, config)?.epsilon),
        config,
        "W",
        cap,
    )
}

/// Smallest coupling length whose flooding threshold has saturated.
pub fn find_l_star(
    spec: &EnsembleSpec,
    config: &ThresholdConfig,
    l_max: usize,
) -> Result<SaturationResult> {
    if !spec.is_coupled() {
        return invalid("L* needs a coupled ensemble");
    }
    if l_max < 2 {
        return invalid("L_max must be at least 2");
    }
    saturate(
        2..=l_max,
        |l| Ok(fsd_threshold(&spec.with_length(l)?, config)?.epsilon),
        config,
        "L",
        l_max,
    )
}

/// Relative gap `(ε_Sh - ε) / ε_Sh` to the BEC capacity `ε_Sh = 1 - R`.
pub fn capacity_gap(rate: f64, epsilon: f64) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return invalid(format!("rate {rate} outside (0,1)"));
    }
    if !(0.0..=1.0).contains(&epsilon) {
        return invalid(format!("erasure probability {epsilon} outside [0,1]"));
    }
    let shannon = 1.0 - rate;
    Ok((shannon - epsilon) / shannon)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bisection_on_a_step() {
        let r = bisect(|e| Ok(e <= 0.3), 0.0, 1.0, 1e-6).unwrap();
        assert!(r.bracket.0 <= 0.3 && r.bracket.1 > 0.3);
        assert!(r.resolution <= 1e-6);
        assert_eq!(r.epsilon, r.bracket.0);
        assert_eq!(r.evaluations, 2 + 20);
        assert!(matches!(
            bisect(|_| Ok(true), 0.0, 1.0, 1e-6),
            Err(Error::DegenerateBracket(_))
        ));
        assert!(matches!(
            bisect(|_| Ok(false), 0.0, 1.0, 1e-6),
            Err(Error::DegenerateBracket(_))
        ));
    }

    #[test]
    fn plateau_detection() {
        let v = [0.40, 0.45, 0.47, 0.47, 0.4700005, 0.47];
        assert_eq!(plateau_start(&v, 3, 1e-6), Some(2));
        // A local flat on a rising curve is not enough.
        let v = [0.40, 0.45, 0.45, 0.46, 0.47, 0.47];
        assert_eq!(plateau_start(&v, 3, 1e-6), None);
    }

    #[test]
    fn gaps() {
        assert_eq!(capacity_gap(0.495, 0.505).unwrap(), 0.0);
        assert!((capacity_gap(0.495, 0.50424).unwrap() - 0.0015).abs() < 1e-4);
        assert!(capacity_gap(2.0 / 3.0, 1.0 / 3.0).unwrap().abs() < 1e-15);
        assert!(capacity_gap(1.0, 0.3).is_err());
        assert!(capacity_gap(0.5, 1.3).is_err());
    }

    #[test]
    fn block_threshold_m1() {
        let spec: EnsembleSpec = "B(3,6,1)".parse().unwrap();
        let r = fsd_threshold(&spec, &ThresholdConfig::default()).unwrap();
        assert!((r.epsilon - 0.4294).abs() < 1e-3, "{}", r.epsilon);
    }

    #[test]
    fn minimum_window_convention() {
        let spec: EnsembleSpec = "C4(5,10,2)".parse().unwrap();
        let r = wd_threshold(&spec, 4, &ThresholdConfig::default()).unwrap();
        assert!(r.window_too_small);
        assert_eq!(r.epsilon, 0.0);
        let block: EnsembleSpec = "B(3,6,2)".parse().unwrap();
        assert!(wd_threshold(&block, 3, &ThresholdConfig::default()).is_err());
    }
}
