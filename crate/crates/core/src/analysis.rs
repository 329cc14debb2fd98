//! Decoding latency and iteration-weighted complexity figures.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleSpec;
use crate::error::{invalid, Error, Result};
use crate::pde::{PdeConfig, PdeEngine};
use crate::window::{WindowConfig, WindowedDecoder};

/// `(m, W)` pairs of the latency/complexity comparison grid for `C1(3,6,m,2)`,
/// grouped by latency `2mW`.
#[rustfmt::skip]
pub const COMPARISON_GRID: &[(u32, usize)] = &[
    (1, 12), (2, 6),
    (1, 20), (2, 10), (4, 5), (5, 4),
    (1, 24), (2, 12), (3, 8), (4, 6), (6, 4), (8, 3),
    (1, 30), (2, 15), (3, 10), (5, 6), (6, 5), (10, 3),
    (1, 40), (2, 20), (4, 10), (5, 8), (8, 5), (10, 4),
    (1, 60), (2, 30), (3, 20), (4, 15), (5, 12), (6, 10), (10, 6),
];

/// Erasure probabilities the comparison grid is evaluated at.
pub const COMPARISON_EPSILONS: [f64; 2] = [0.488, 0.44];

/// Latency in bits, normalized by the lifting factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatencyReport {
    pub latency: u64,
    pub k: usize,
    pub m: u32,
    /// Number of column blocks the decoder must hold: `W`, or `L + w` for flooding.
    pub span: usize,
}

/// `T = k·m·W` for a window of `W` column blocks.
pub fn latency_wd(k: usize, m: u32, window: usize) -> Result<LatencyReport> {
    if k < 1 || m < 1 || window < 1 {
        return invalid("latency inputs k, m and W must be at least 1");
    }
    Ok(LatencyReport {
        latency: (k * window) as u64 * m as u64,
        k,
        m,
        span: window,
    })
}

/// Flooding over the whole chain behaves like a window of `L + w` blocks.
pub fn latency_fsd(k: usize, m: u32, length: usize, width: usize) -> Result<LatencyReport> {
    latency_wd(k, m, length + width)
}

/// `T = 4m`, the latency of the comparable two-row-block LDPC block code.
pub fn latency_block_fsd(m: u32) -> Result<LatencyReport> {
    latency_wd(2, m, 2)
}

/// Decoding schedule a complexity profile is measured under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DecodeMode {
    Fsd,
    Wd(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityReport {
    /// Per-position update counts `l_t`.
    pub updates: Vec<u64>,
    pub total: u64,
    pub order: f64,
    pub degree: u32,
    pub m: u32,
    pub rate: f64,
    pub length: usize,
    pub epsilon: f64,
}

/// `J·2^m·(m+1)·Σl_t / (R_L·m·L)`.
pub fn complexity_order(
    degree: u32,
    m: u32,
    rate: f64,
    length: usize,
    updates: &[u64],
) -> Result<f64> {
    if !(rate > 0.0 && rate < 1.0) {
        return invalid(format!("rate {rate} outside (0,1)"));
    }
    if degree < 1 || m < 1 || length < 1 {
        return invalid("J, m and L must be at least 1");
    }
    if m > 62 {
        return invalid("m too large");
    }
    let total: u64 = updates.iter().sum();
    let per_update = degree as f64 * (1u64 << m) as f64 * (m + 1) as f64;
    Ok(per_update * total as f64 / (rate * m as f64 * length as f64))
}

/// Runs one decode at `epsilon` and reports its complexity. Fails with
/// [`Error::DecodeFailure`] if the decoder does not converge.
pub fn complexity_profile(
    spec: &EnsembleSpec,
    mode: DecodeMode,
    epsilon: f64,
    config: &PdeConfig,
) -> Result<ComplexityReport> {
    let positions = spec.positions();
    let updates = match mode {
        DecodeMode::Fsd => {
            let engine = PdeEngine::new(&spec.base_matrix()?, spec.m)?;
            let out = engine.run_fsd(epsilon, config, None)?;
            if !out.success {
                return Err(Error::DecodeFailure { epsilon });
            }
            vec![out.iterations as u64; positions]
        }
        DecodeMode::Wd(window) => {
            let Some(chain) = spec.chain()? else {
                return invalid("windowed decoding needs a coupled ensemble");
            };
            let decoder = WindowedDecoder::new(chain, spec.m)?;
            let out = decoder.run(epsilon, &WindowConfig::with_pde(window, *config))?;
            if !out.success {
                return Err(Error::DecodeFailure { epsilon });
            }
            out.updates
        }
    };
    let rate = spec.design_rate()?;
    let order = complexity_order(spec.degree, spec.m, rate, positions, &updates)?;
    Ok(ComplexityReport {
        total: updates.iter().sum(),
        updates,
        order,
        degree: spec.degree,
        m: spec.m,
        rate,
        length: positions,
        epsilon,
    })
}
