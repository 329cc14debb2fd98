//! Windowed decoding density evolution over a coupled chain.
//!
//! At position `t` the window covers column blocks `t..t+W-1` and row
//! blocks `t..t+W-1`, clipped at the chain termination. Only the first
//! column block (the target symbols) must converge before the window slides.
//! Columns that slid out are never updated again: rows still in the window
//! read their last variable-to-check messages. Messages of symbols that stay
//! in the window carry over to the next position.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::pde::{FailureKind, PdeConfig, PdeEngine};
use crate::protograph::CoupledChain;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowConfig {
    /// Window size `W` in column blocks.
    pub window: usize,
    pub pde: PdeConfig,
}

impl WindowConfig {
    pub fn new(window: usize) -> Self {
        WindowConfig {
            window,
            pde: PdeConfig::default(),
        }
    }

    pub fn with_pde(window: usize, pde: PdeConfig) -> Self {
        WindowConfig { window, pde }
    }
}

/// The rows and columns active at one window position.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WindowSlice {
    /// 1-based position `t`.
    pub position: usize,
    /// Active column blocks, 1-based and inclusive.
    pub col_blocks: (usize, usize),
    /// Active row blocks, 1-based and inclusive.
    pub row_blocks: (usize, usize),
    /// Active symbol columns (0-based base-matrix indices).
    pub cols: Range<usize>,
    /// Active check rows (0-based base-matrix indices).
    pub rows: Range<usize>,
    /// Target symbols: the first column block of the window.
    pub targets: Range<usize>,
    /// Nonzero entries `(row, col)` linking active rows to already decoded columns.
    pub boundary: Vec<(usize, usize)>,
}

/// Geometry of window position `t` (1-based) for window size `W`.
pub fn window_slice(chain: &CoupledChain, t: usize, window: usize) -> Result<WindowSlice> {
    let l = chain.length;
    if t < 1 || t > l {
        return invalid(format!("window position {t} outside [1, {l}]"));
    }
    if window < 1 {
        return invalid("window size must be at least 1");
    }
    let col_hi = (t + window - 1).min(l);
    let row_hi = (t + window - 1).min(chain.row_blocks());
    let (bc, br) = (chain.block_cols, chain.block_rows);
    let cols = (t - 1) * bc..col_hi * bc;
    let rows = (t - 1) * br..row_hi * br;
    let targets = (t - 1) * bc..t * bc;
    let boundary = rows
        .clone()
        .flat_map(|r| (0..(t - 1) * bc).map(move |c| (r, c)))
        .filter(|&(r, c)| chain.base.get(r, c) > 0)
        .collect();
    Ok(WindowSlice {
        position: t,
        col_blocks: (t, col_hi),
        row_blocks: (t, row_hi),
        cols,
        rows,
        targets,
        boundary,
    })
}

/// Result of a windowed decoding run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WdOutcome {
    pub success: bool,
    /// 1-based position whose targets failed to converge.
    pub first_failed_position: Option<usize>,
    pub failure_kind: Option<FailureKind>,
    /// Iterations spent at each window position (0 for positions not reached).
    pub window_iterations: Vec<usize>,
    /// `l_t`: iterations in which the symbols of position `t` were updated.
    pub updates: Vec<u64>,
    /// Smallest target APP dimension-0 mass reached at each position.
    pub target_app_dim0: Vec<f64>,
}

impl WdOutcome {
    pub fn total_updates(&self) -> u64 {
        self.updates.iter().sum()
    }
}

/// Windowed decoder bound to a chain and field exponent.
#[derive(Debug, Clone)]
pub struct WindowedDecoder {
    chain: CoupledChain,
    engine: PdeEngine,
}

impl WindowedDecoder {
    pub fn new(chain: CoupledChain, m: u32) -> Result<Self> {
        let engine = PdeEngine::new(&chain.base, m)?;
        Ok(WindowedDecoder { chain, engine })
    }

    pub fn chain(&self) -> &CoupledChain {
        &self.chain
    }

    pub fn engine(&self) -> &PdeEngine {
        &self.engine
    }

    /// Smallest admissible window, `w + 1`.
    pub fn min_window(&self) -> usize {
        self.chain.width + 1
    }

    pub fn run(&self, epsilon: f64, config: &WindowConfig) -> Result<WdOutcome> {
        let (l, w) = (self.chain.length, self.chain.width);
        if config.window < w + 1 {
            return Err(Error::WindowTooSmall {
                window: config.window,
                min: w + 1,
            });
        }
        if config.window > l + w {
            return invalid(format!(
                "window size {} exceeds L + w = {}",
                config.window,
                l + w
            ));
        }
        config.pde.validate()?;

        let engine = &self.engine;
        let mut state = engine.initialize(epsilon)?;
        let channel = engine.channel(epsilon)?;
        let mut out = WdOutcome {
            success: true,
            first_failed_position: None,
            failure_kind: None,
            window_iterations: vec![0; l],
            updates: vec![0; l],
            target_app_dim0: vec![0.0; l],
        };
        for t in 1..=l {
            let slice = window_slice(&self.chain, t, config.window)?;
            let rows: Vec<usize> = slice.rows.clone().collect();
            let cols: Vec<usize> = slice.cols.clone().collect();
            let targets: Vec<usize> = slice.targets.clone().collect();
            let row_range = slice.rows.clone();
            let (b_lo, b_hi) = slice.col_blocks;
            let updates = &mut out.updates;
            let outcome = engine.iterate(
                &mut state,
                &channel,
                &rows,
                &|r| row_range.contains(&r),
                &cols,
                &targets,
                &config.pde,
                || {
                    for u in &mut updates[b_lo - 1..b_hi] {
                        *u += 1;
                    }
                },
            )?;
            out.window_iterations[t - 1] = outcome.iterations;
            out.target_app_dim0[t - 1] = outcome.app_dim0.iter().copied().fold(1.0, f64::min);
            if !outcome.success {
                out.success = false;
                out.first_failed_position = Some(t);
                out.failure_kind = outcome.failure_kind;
                break;
            }
        }
        Ok(out)
    }
}

/// Windowed decoding of `chain` at field exponent `m`.
pub fn run_wd(
    chain: &CoupledChain,
    m: u32,
    epsilon: f64,
    config: &WindowConfig,
) -> Result<WdOutcome> {
    WindowedDecoder::new(chain.clone(), m)?.run(epsilon, config)
}
