//! Flooding-schedule q-ary protograph density evolution.
//!
//! One message pair is tracked per nonzero base entry `(i, j)`; its
//! multiplicity `b_{i,j}` enters through powers of the node rules. An edge
//! excludes only its own copy among the `b_{i,j}` parallel edges, so the
//! outgoing message on `(i, j)` combines every other neighbour raised to its
//! multiplicity with `b_{i,j} - 1` copies of the incoming message on `(i, j)`.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::protograph::BaseMatrix;
use crate::subspace::{DeMessage, Rule, SubspaceTables};

/// Stopping rule for density evolution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PdeConfig {
    /// Success once every checked APP has dimension-0 mass at least `1 - delta`.
    pub delta: f64,
    pub max_iters: usize,
    /// Failure once the summed APP dimension-0 gain of an iteration drops below this.
    pub stall_eps: f64,
}

impl Default for PdeConfig {
    fn default() -> Self {
        PdeConfig {
            delta: 1e-6,
            max_iters: 10_000,
            stall_eps: 1e-12,
        }
    }
}

impl PdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return invalid(format!("delta = {} must lie in (0,1)", self.delta));
        }
        if self.max_iters < 1 {
            return invalid("max_iters must be at least 1");
        }
        if !(self.stall_eps > 0.0) {
            return invalid("stall_eps must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FailureKind {
    MaxIters,
    Stalled,
}

/// Result of one density-evolution run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodeOutcome {
    pub success: bool,
    pub iterations: usize,
    /// Final APP dimension-0 mass of each checked column, in the order given.
    pub app_dim0: Vec<f64>,
    pub failure_kind: Option<FailureKind>,
}

/// A nonzero base entry.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub row: usize,
    pub col: usize,
    pub mult: u32,
}

/// Per-edge check-to-variable and variable-to-check messages, stored flat
/// with stride `m + 1` in the engine's edge order.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeState {
    stride: usize,
    pub(crate) to_check: Vec<f64>,
    pub(crate) to_var: Vec<f64>,
}

impl EdgeState {
    pub fn num_edges(&self) -> usize {
        self.to_check.len() / self.stride
    }

    /// Variable-to-check message on edge `e`.
    pub fn p_v(&self, e: usize) -> &[f64] {
        &self.to_check[e * self.stride..(e + 1) * self.stride]
    }

    /// Check-to-variable message on edge `e`.
    pub fn p_c(&self, e: usize) -> &[f64] {
        &self.to_var[e * self.stride..(e + 1) * self.stride]
    }
}

/// Channel message of every column, stored flat with stride `m + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMessages {
    stride: usize,
    data: Vec<f64>,
}

impl ChannelMessages {
    pub fn uniform(cols: usize, msg: &DeMessage) -> Self {
        let stride = msg.probs().len();
        let mut data = Vec::with_capacity(cols * stride);
        for _ in 0..cols {
            data.extend_from_slice(msg.probs());
        }
        ChannelMessages { stride, data }
    }

    pub fn from_messages(msgs: &[DeMessage]) -> Result<Self> {
        let Some(first) = msgs.first() else {
            return invalid("channel needs at least one column");
        };
        let stride = first.probs().len();
        if msgs.iter().any(|p| p.probs().len() != stride) {
            return invalid("channel messages must share one field exponent");
        }
        Ok(ChannelMessages {
            stride,
            data: msgs
                .iter()
                .flat_map(|p| p.probs().iter().copied())
                .collect(),
        })
    }

    pub fn column(&self, j: usize) -> &[f64] {
        &self.data[j * self.stride..(j + 1) * self.stride]
    }

    pub fn cols(&self) -> usize {
        self.data.len() / self.stride
    }
}

/// Scratch buffers for one node update.
#[derive(Debug, Default)]
struct Workspace {
    full: Vec<f64>,
    minus: Vec<f64>,
    prefix: Vec<f64>,
    suffix: Vec<f64>,
    tmp: Vec<f64>,
    old: Vec<f64>,
    app: Vec<f64>,
    edges: Vec<usize>,
    full_id: Vec<bool>,
    minus_id: Vec<bool>,
    prefix_id: Vec<bool>,
    suffix_id: Vec<bool>,
}

impl Workspace {
    fn reserve(&mut self, degree: usize, d: usize) {
        let need = (degree + 1) * d;
        for buf in [
            &mut self.full,
            &mut self.minus,
            &mut self.prefix,
            &mut self.suffix,
        ] {
            if buf.len() < need {
                buf.resize(need, 0.0);
            }
        }
        if self.tmp.len() < d {
            self.tmp.resize(d, 0.0);
            self.old.resize(d, 0.0);
        }
        for flags in [
            &mut self.full_id,
            &mut self.minus_id,
            &mut self.prefix_id,
            &mut self.suffix_id,
        ] {
            if flags.len() < degree + 1 {
                flags.resize(degree + 1, true);
            }
        }
    }
}

/// Density-evolution engine bound to one base matrix and field exponent.
#[derive(Debug, Clone)]
pub struct PdeEngine {
    tables: SubspaceTables,
    rows: usize,
    cols: usize,
    edges: Vec<Edge>,
    row_edges: Vec<Vec<usize>>,
    col_edges: Vec<Vec<usize>>,
}

impl PdeEngine {
    pub fn new(base: &BaseMatrix, m: u32) -> Result<Self> {
        let tables = SubspaceTables::new(m)?;
        let edges: Vec<Edge> = base
            .nonzeros()
            .map(|(row, col, mult)| Edge { row, col, mult })
            .collect();
        let mut row_edges = vec![Vec::new(); base.rows()];
        let mut col_edges = vec![Vec::new(); base.cols()];
        for (e, edge) in edges.iter().enumerate() {
            row_edges[edge.row].push(e);
            col_edges[edge.col].push(e);
        }
        Ok(PdeEngine {
            tables,
            rows: base.rows(),
            cols: base.cols(),
            edges,
            row_edges,
            col_edges,
        })
    }

    pub fn tables(&self) -> &SubspaceTables {
        &self.tables
    }

    pub fn m(&self) -> u32 {
        self.tables.m()
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Index of the edge for base entry `(row, col)`, if nonzero.
    pub fn edge_index(&self, row: usize, col: usize) -> Option<usize> {
        self.row_edges
            .get(row)?
            .iter()
            .copied()
            .find(|&e| self.edges[e].col == col)
    }

    pub fn row_edges(&self, row: usize) -> &[usize] {
        &self.row_edges[row]
    }

    pub fn col_edges(&self, col: usize) -> &[usize] {
        &self.col_edges[col]
    }

    /// Every variable-to-check message starts as the channel message and
    /// every check-to-variable message as the uninformative `δ_m`.
    pub fn initialize(&self, epsilon: f64) -> Result<EdgeState> {
        let init = DeMessage::initial(self.m(), epsilon)?;
        let top = self.tables.identity(Rule::Variable);
        let d = self.tables.len();
        let n = self.edges.len();
        let mut to_check = Vec::with_capacity(n * d);
        let mut to_var = Vec::with_capacity(n * d);
        for _ in 0..n {
            to_check.extend_from_slice(init.probs());
            to_var.extend_from_slice(top.probs());
        }
        Ok(EdgeState {
            stride: d,
            to_check,
            to_var,
        })
    }

    /// Channel messages `p^(0)(ε)` for every column.
    pub fn channel(&self, epsilon: f64) -> Result<ChannelMessages> {
        Ok(ChannelMessages::uniform(
            self.cols,
            &DeMessage::initial(self.m(), epsilon)?,
        ))
    }

    /// Recomputes the check-to-variable messages of the given rows from the
    /// current variable-to-check messages.
    pub fn check_update(
        &self,
        state: &mut EdgeState,
        rows: impl IntoIterator<Item = usize>,
    ) -> Result<()> {
        let mut ws = Workspace::default();
        let mut scratch_edges = Vec::new();
        for r in rows {
            scratch_edges.clear();
            scratch_edges.extend_from_slice(&self.row_edges[r]);
            self.node_update(
                Rule::Check,
                None,
                &scratch_edges,
                &state.to_check,
                &mut state.to_var,
                None,
                None,
                &mut ws,
            )?;
        }
        Ok(())
    }

    /// Recomputes the variable-to-check messages of the given columns. Only
    /// edges whose row satisfies `row_active` take part.
    pub fn variable_update(
        &self,
        state: &mut EdgeState,
        channel: &ChannelMessages,
        cols: impl IntoIterator<Item = usize>,
        row_active: &dyn Fn(usize) -> bool,
    ) -> Result<()> {
        let mut ws = Workspace::default();
        let mut scratch_edges = Vec::new();
        for c in cols {
            scratch_edges.clear();
            scratch_edges.extend(
                self.col_edges[c]
                    .iter()
                    .copied()
                    .filter(|&e| row_active(self.edges[e].row)),
            );
            self.node_update(
                Rule::Variable,
                Some(channel.column(c)),
                &scratch_edges,
                &state.to_var,
                &mut state.to_check,
                None,
                None,
                &mut ws,
            )?;
        }
        Ok(())
    }

    /// A-posteriori message of column `j` from its channel message and the
    /// check messages of active rows.
    pub fn app(
        &self,
        state: &EdgeState,
        channel: &ChannelMessages,
        j: usize,
        row_active: &dyn Fn(usize) -> bool,
    ) -> Result<DeMessage> {
        let d = self.tables.len();
        let mut acc = channel.column(j).to_vec();
        let mut pow = vec![0.0; d];
        let mut tmp = vec![0.0; d];
        for &e in &self.col_edges[j] {
            let edge = self.edges[e];
            if !row_active(edge.row) {
                continue;
            }
            let msg = state.p_c(e);
            pow.copy_from_slice(msg);
            for _ in 1..edge.mult {
                self.tables
                    .combine_into(Rule::Variable, &pow, msg, &mut tmp)?;
                std::mem::swap(&mut pow, &mut tmp);
            }
            self.tables
                .combine_into(Rule::Variable, &acc, &pow, &mut tmp)?;
            std::mem::swap(&mut acc, &mut tmp);
        }
        Ok(DeMessage::from_raw(acc))
    }

    /// One flooding iteration that skips every node whose inputs are
    /// bitwise unchanged since it last ran, which leaves all messages
    /// identical to a full sweep. `v_changed` and `c_changed` flag edges whose
    /// variable-to-check or check-to-variable message changed since its
    /// consumer last ran; `force` recomputes every node. Refreshes
    /// `app_dim0[i]` for each recomputed `active_cols[i]` and returns the
    /// summed APP dimension-0 gain.
    #[allow(clippy::too_many_arguments)]
    fn lazy_iteration(
        &self,
        state: &mut EdgeState,
        channel: &ChannelMessages,
        active_rows: &[usize],
        active_cols: &[usize],
        row_active: &dyn Fn(usize) -> bool,
        force: bool,
        v_changed: &mut [bool],
        c_changed: &mut [bool],
        app_dim0: &mut [f64],
        ws: &mut Workspace,
    ) -> Result<f64> {
        for &r in active_rows {
            let edges = &self.row_edges[r];
            if !force && !edges.iter().any(|&e| v_changed[e]) {
                continue;
            }
            for &e in edges {
                v_changed[e] = false;
            }
            self.node_update(
                Rule::Check,
                None,
                edges,
                &state.to_check,
                &mut state.to_var,
                None,
                Some(c_changed),
                ws,
            )?;
        }
        let mut full = std::mem::take(&mut ws.app);
        full.resize(self.tables.len(), 0.0);
        let mut edges = std::mem::take(&mut ws.edges);
        let mut gain = 0.0;
        for (i, &c) in active_cols.iter().enumerate() {
            edges.clear();
            edges.extend(
                self.col_edges[c]
                    .iter()
                    .copied()
                    .filter(|&e| row_active(self.edges[e].row)),
            );
            if !force && !edges.iter().any(|&e| c_changed[e]) {
                continue;
            }
            for &e in &edges {
                c_changed[e] = false;
            }
            self.node_update(
                Rule::Variable,
                Some(channel.column(c)),
                &edges,
                &state.to_var,
                &mut state.to_check,
                Some(&mut full),
                Some(v_changed),
                ws,
            )?;
            gain += full[0] - app_dim0[i];
            app_dim0[i] = full[0];
        }
        ws.app = full;
        ws.edges = edges;
        Ok(gain)
    }

    /// Generic extrinsic node update. For each edge `k` in `edges` writes
    /// `prior ∘ (∘_{s≠k} x_s^{b_s}) ∘ x_k^{b_k - 1}` into `outputs`, and the
    /// full product `prior ∘ (∘_s x_s^{b_s})` into `full` when requested.
    #[allow(clippy::too_many_arguments)]
    fn node_update(
        &self,
        rule: Rule,
        prior: Option<&[f64]>,
        edges: &[usize],
        inputs: &[f64],
        outputs: &mut [f64],
        full: Option<&mut [f64]>,
        mut changed: Option<&mut [bool]>,
        ws: &mut Workspace,
    ) -> Result<()> {
        let t = &self.tables;
        let d = t.len();
        let deg = edges.len();
        ws.reserve(deg, d);
        let slot = |k: usize| k * d..(k + 1) * d;

        // Powers x^{b-1} and x^b of every incoming message.
        for (k, &e) in edges.iter().enumerate() {
            let x = &inputs[e * d..(e + 1) * d];
            let b = self.edges[e].mult;
            if b == 1 {
                ws.minus_id[k] = true;
                ws.full[slot(k)].copy_from_slice(x);
                ws.full_id[k] = false;
                continue;
            }
            ws.minus[slot(k)].copy_from_slice(x);
            ws.minus_id[k] = false;
            for _ in 2..b {
                t.combine_into(rule, &ws.minus[slot(k)], x, &mut ws.tmp[..d])?;
                ws.minus[slot(k)].copy_from_slice(&ws.tmp[..d]);
            }
            t.combine_into(rule, &ws.minus[slot(k)], x, &mut ws.tmp[..d])?;
            ws.full[slot(k)].copy_from_slice(&ws.tmp[..d]);
            ws.full_id[k] = false;
        }

        // prefix[k] = prior ∘ full[0] ∘ ... ∘ full[k-1]
        match prior {
            Some(p) => {
                ws.prefix[slot(0)].copy_from_slice(p);
                ws.prefix_id[0] = false;
            }
            None => ws.prefix_id[0] = true,
        }
        for k in 0..deg {
            if ws.prefix_id[k] {
                let (src, dst) = (slot(k), slot(k + 1));
                ws.prefix[dst].copy_from_slice(&ws.full[src]);
                ws.prefix_id[k + 1] = ws.full_id[k];
            } else {
                let (lhs, rhs) = ws.prefix.split_at_mut((k + 1) * d);
                t.combine_into(rule, &lhs[k * d..], &ws.full[slot(k)], &mut rhs[..d])?;
                ws.prefix_id[k + 1] = false;
            }
        }
        // suffix[k] = full[k] ∘ ... ∘ full[deg-1]
        ws.suffix_id[deg] = true;
        for k in (0..deg).rev() {
            if ws.suffix_id[k + 1] {
                let src = slot(k);
                ws.suffix[src.clone()].copy_from_slice(&ws.full[src]);
                ws.suffix_id[k] = ws.full_id[k];
            } else {
                let (lhs, rhs) = ws.suffix.split_at_mut((k + 1) * d);
                t.combine_into(rule, &ws.full[slot(k)], &rhs[..d], &mut lhs[k * d..])?;
                ws.suffix_id[k] = false;
            }
        }

        for (k, &e) in edges.iter().enumerate() {
            let out = &mut outputs[e * d..(e + 1) * d];
            if changed.is_some() {
                ws.old[..d].copy_from_slice(out);
            }
            // Collect the up-to-three factors that are not identities.
            let mut factors: [Option<&[f64]>; 3] = [None, None, None];
            let mut nf = 0;
            if !ws.prefix_id[k] {
                factors[nf] = Some(&ws.prefix[slot(k)]);
                nf += 1;
            }
            if !ws.suffix_id[k + 1] {
                factors[nf] = Some(&ws.suffix[slot(k + 1)]);
                nf += 1;
            }
            if !ws.minus_id[k] {
                factors[nf] = Some(&ws.minus[slot(k)]);
                nf += 1;
            }
            match nf {
                0 => out.copy_from_slice(t.identity(rule).probs()),
                1 => out.copy_from_slice(factors[0].unwrap()),
                2 => t.combine_into(rule, factors[0].unwrap(), factors[1].unwrap(), out)?,
                _ => {
                    t.combine_into(
                        rule,
                        factors[0].unwrap(),
                        factors[1].unwrap(),
                        &mut ws.tmp[..d],
                    )?;
                    t.combine_into(rule, &ws.tmp[..d], factors[2].unwrap(), out)?;
                }
            }
            if let Some(flags) = changed.as_deref_mut() {
                if out != &ws.old[..d] {
                    flags[e] = true;
                }
            }
        }

        if let Some(full) = full {
            if ws.prefix_id[deg] {
                full.copy_from_slice(t.identity(rule).probs());
            } else {
                full.copy_from_slice(&ws.prefix[slot(deg)]);
            }
        }
        Ok(())
    }

    /// Iterates flooding updates on the active rows and columns until every
    /// target column has APP dimension-0 mass at least `1 - δ`, progress
    /// stalls, or the iteration cap is hit. `on_iteration` runs after each
    /// completed iteration.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn iterate(
        &self,
        state: &mut EdgeState,
        channel: &ChannelMessages,
        active_rows: &[usize],
        row_active: &dyn Fn(usize) -> bool,
        active_cols: &[usize],
        targets: &[usize],
        config: &PdeConfig,
        mut on_iteration: impl FnMut(),
    ) -> Result<DecodeOutcome> {
        config.validate()?;
        let threshold = 1.0 - config.delta;
        // Position of each target within active_cols.
        let target_pos: Vec<usize> = targets
            .iter()
            .map(|t| {
                active_cols.iter().position(|c| c == t).ok_or_else(|| {
                    crate::error::Error::InvalidArgument(format!("target column {t} is not active"))
                })
            })
            .collect::<Result<_>>()?;

        let mut prev = Vec::with_capacity(active_cols.len());
        for &c in active_cols {
            prev.push(self.app(state, channel, c, row_active)?.known());
        }
        let converged = |apps: &[f64]| target_pos.iter().all(|&p| apps[p] >= threshold);
        let collect = |apps: &[f64]| target_pos.iter().map(|&p| apps[p]).collect::<Vec<_>>();
        if converged(&prev) {
            return Ok(DecodeOutcome {
                success: true,
                iterations: 0,
                app_dim0: collect(&prev),
                failure_kind: None,
            });
        }

        let mut app = prev;
        let mut v_changed = vec![false; self.edges.len()];
        let mut c_changed = vec![false; self.edges.len()];
        let mut ws = Workspace::default();
        for iter in 1..=config.max_iters {
            let progress = self.lazy_iteration(
                state,
                channel,
                active_rows,
                active_cols,
                row_active,
                iter == 1,
                &mut v_changed,
                &mut c_changed,
                &mut app,
                &mut ws,
            )?;
            on_iteration();
            if converged(&app) {
                return Ok(DecodeOutcome {
                    success: true,
                    iterations: iter,
                    app_dim0: collect(&app),
                    failure_kind: None,
                });
            }
            if progress < config.stall_eps {
                return Ok(DecodeOutcome {
                    success: false,
                    iterations: iter,
                    app_dim0: collect(&app),
                    failure_kind: Some(FailureKind::Stalled),
                });
            }
        }
        Ok(DecodeOutcome {
            success: false,
            iterations: config.max_iters,
            app_dim0: collect(&app),
            failure_kind: Some(FailureKind::MaxIters),
        })
    }

    /// Flooding-schedule decoding over the whole base matrix. Convergence is
    /// judged on `check_columns` (all columns when `None`).
    pub fn run_fsd(
        &self,
        epsilon: f64,
        config: &PdeConfig,
        check_columns: Option<&[usize]>,
    ) -> Result<DecodeOutcome> {
        let mut state = self.initialize(epsilon)?;
        let channel = self.channel(epsilon)?;
        let rows: Vec<usize> = (0..self.rows).collect();
        let cols: Vec<usize> = (0..self.cols).collect();
        if let Some(cc) = check_columns {
            if cc.iter().any(|&c| c >= self.cols) {
                return invalid("check column out of range");
            }
        }
        let targets = check_columns
            .map(<[usize]>::to_vec)
            .unwrap_or_else(|| cols.clone());
        self.iterate(
            &mut state,
            &channel,
            &rows,
            &|_| true,
            &cols,
            &targets,
            config,
            || {},
        )
    }
}

/// Flooding-schedule decoding of `base` at field exponent `m`.
pub fn run_fsd(
    base: &BaseMatrix,
    m: u32,
    epsilon: f64,
    config: &PdeConfig,
    check_columns: Option<&[usize]>,
) -> Result<DecodeOutcome> {
    PdeEngine::new(base, m)?.run_fsd(epsilon, config, check_columns)
}
