//! Protograph base matrices, edge spreadings and spatial coupling.
//!
//! A block base matrix `B` of size `(c-b) x c` is spread into `w+1`
//! component matrices `B_0..B_w` with `B_0 + ... + B_w = B`. Stacking and
//! shifting the components over `L` time instants gives the banded
//! `(L+w)(c-b) x Lc` base matrix of a terminated spatially coupled ensemble.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Dense non-negative integer matrix; entry `(i, j)` is the number of
/// parallel edges between check `i` and variable `j`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BaseMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<u32>,
}

impl BaseMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return invalid(format!("base matrix must be non-empty, got {rows}x{cols}"));
        }
        Ok(BaseMatrix {
            rows,
            cols,
            entries: vec![0; rows * cols],
        })
    }

    /// Builds a matrix from row vectors, which must all have the same length.
    pub fn from_rows<R: AsRef<[u32]>>(rows: &[R]) -> Result<Self> {
        let nrows = rows.len();
        let ncols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut out = BaseMatrix::zeros(nrows, ncols)?;
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != ncols {
                return invalid(format!(
                    "ragged rows: row {i} has {} entries, expected {ncols}",
                    row.len()
                ));
            }
            out.entries[i * ncols..(i + 1) * ncols].copy_from_slice(row);
        }
        Ok(out)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: u32) {
        self.entries[i * self.cols + j] = value;
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<u32>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn row_sum(&self, i: usize) -> u32 {
        self.row(i).iter().sum()
    }

    pub fn col_sum(&self, j: usize) -> u32 {
        (0..self.rows).map(|i| self.get(i, j)).sum()
    }

    /// Nonzero entries in row-major order as `(row, col, multiplicity)`.
    pub fn nonzeros(&self) -> impl Iterator<Item = (usize, usize, u32)> + '_ {
        self.entries
            .iter()
            .enumerate()
            .filter_map(move |(idx, &b)| (b > 0).then_some((idx / self.cols, idx % self.cols, b)))
    }

    /// Returns a copy with rows reordered so that row `i` of the result is
    /// row `perm[i]` of `self`.
    pub fn permute_rows(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.rows)?;
        let rows: Vec<&[u32]> = perm.iter().map(|&p| self.row(p)).collect();
        BaseMatrix::from_rows(&rows)
    }

    /// Returns a copy with columns reordered so that column `j` of the
    /// result is column `perm[j]` of `self`.
    pub fn permute_cols(&self, perm: &[usize]) -> Result<Self> {
        check_permutation(perm, self.cols)?;
        let mut out = BaseMatrix::zeros(self.rows, self.cols)?;
        for i in 0..self.rows {
            for (j, &p) in perm.iter().enumerate() {
                out.set(i, j, self.get(i, p));
            }
        }
        Ok(out)
    }
}

fn check_permutation(perm: &[usize], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    if perm.len() != n {
        return invalid(format!(
            "permutation has length {}, expected {n}",
            perm.len()
        ));
    }
    for &p in perm {
        if p >= n || std::mem::replace(&mut seen[p], true) {
            return invalid("not a permutation");
        }
    }
    Ok(())
}

impl fmt::Display for BaseMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for i in 0..self.rows {
            let row: Vec<String> = self.row(i).iter().map(|b| b.to_string()).collect();
            writeln!(f, "[{}]", row.join(" "))?;
        }
        Ok(())
    }
}

/// The `(J,K)`-regular block base matrix: a `1 x k` row with every entry `J`.
pub fn make_block_base(j: u32, k: usize) -> Result<BaseMatrix> {
    if j < 2 {
        return invalid(format!("variable degree J must be at least 2, got {j}"));
    }
    if k < 1 {
        return invalid("ratio k = K/J must be at least 1");
    }
    BaseMatrix::from_rows(&[vec![j; k]])
}

/// All columns `[J_0, ..., J_w]` with `J_0 + ... + J_w = J` and each
/// `J_i` in `1..=J-w`, in lexicographic order.
pub fn enumerate_edge_spreadings(j: u32, w: usize) -> Result<Vec<Vec<u32>>> {
    if w < 1 || w as u64 > u64::from(j).saturating_sub(1) {
        return invalid(format!(
            "coupling width w = {w} must lie in [1, J-1] for J = {j}"
        ));
    }
    let max_part = j - w as u32;
    let mut out = Vec::new();
    let mut current = Vec::with_capacity(w + 1);
    compositions(j, w + 1, max_part, &mut current, &mut out);
    Ok(out)
}

fn compositions(
    remaining: u32,
    parts: usize,
    max_part: u32,
    cur: &mut Vec<u32>,
    out: &mut Vec<Vec<u32>>,
) {
    if parts == 0 {
        if remaining == 0 {
            out.push(cur.clone());
        }
        return;
    }
    for part in 1..=max_part.min(remaining) {
        // Each remaining slot needs at least one edge.
        if remaining - part < (parts - 1) as u32 {
            break;
        }
        cur.push(part);
        compositions(remaining - part, parts - 1, max_part, cur, out);
        cur.pop();
    }
}

/// The component matrices `B_0..B_w` of an edge spreading.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ComponentStack {
    components: Vec<BaseMatrix>,
    degree: u32,
}

impl ComponentStack {
    /// Validates a stack of `w+1` equally sized components. The component
    /// sum must have constant column degree `J` with `1 <= w <= J-1`; for
    /// single-row components each stacked column must belong to `E(J,w)`.
    pub fn new(components: Vec<BaseMatrix>) -> Result<Self> {
        if components.len() < 2 {
            return invalid("an edge spreading needs at least two components (w >= 1)");
        }
        let (rows, cols) = (components[0].rows(), components[0].cols());
        if components
            .iter()
            .any(|c| c.rows() != rows || c.cols() != cols)
        {
            return invalid("component matrices must all have the same shape");
        }
        let w = components.len() - 1;
        let col_degree = |j: usize| components.iter().map(|c| c.col_sum(j)).sum::<u32>();
        let degree = col_degree(0);
        if (1..cols).any(|j| col_degree(j) != degree) {
            return invalid("component sum must have constant column degree J");
        }
        if w as u32 > degree.saturating_sub(1) {
            return invalid(format!(
                "coupling width w = {w} exceeds J-1 = {}",
                degree.saturating_sub(1)
            ));
        }
        if rows == 1 {
            let max_part = degree - w as u32;
            for j in 0..cols {
                if components
                    .iter()
                    .any(|c| c.get(0, j) < 1 || c.get(0, j) > max_part)
                {
                    return invalid(format!(
                        "column {j} of the stack is not in E({degree},{w}): entries must lie in 1..={max_part}"
                    ));
                }
            }
        }
        Ok(ComponentStack { components, degree })
    }

    /// Builds a single-row stack from its `(w+1) x k` stacked form, one
    /// inner vector per component row.
    pub fn from_stacked_rows(stacked: &[Vec<u32>]) -> Result<Self> {
        let components = stacked
            .iter()
            .map(|row| BaseMatrix::from_rows(&[row.as_slice()]))
            .collect::<Result<Vec<_>>>()?;
        ComponentStack::new(components)
    }

    /// Builds a single-row stack from its columns, each a member of `E(J,w)`.
    pub fn from_columns(columns: &[Vec<u32>]) -> Result<Self> {
        let Some(first) = columns.first() else {
            return invalid("a stack needs at least one column");
        };
        let depth = first.len();
        if columns.iter().any(|c| c.len() != depth) {
            return invalid("stack columns must all have length w+1");
        }
        let stacked: Vec<Vec<u32>> = (0..depth)
            .map(|r| columns.iter().map(|c| c[r]).collect())
            .collect();
        ComponentStack::from_stacked_rows(&stacked)
    }

    pub fn width(&self) -> usize {
        self.components.len() - 1
    }

    pub fn degree(&self) -> u32 {
        self.degree
    }

    pub fn components(&self) -> &[BaseMatrix] {
        &self.components
    }

    /// Rows per component, `c - b`.
    pub fn block_rows(&self) -> usize {
        self.components[0].rows()
    }

    /// Columns per component, `c`.
    pub fn block_cols(&self) -> usize {
        self.components[0].cols()
    }

    /// Elementwise sum of the components, which recovers the block base matrix.
    pub fn component_sum(&self) -> BaseMatrix {
        let mut out = self.components[0].clone();
        for c in &self.components[1..] {
            for (o, e) in out.entries.iter_mut().zip(&c.entries) {
                *o += e;
            }
        }
        out
    }

    /// The vertical stack `[B_0; B_1; ...; B_w]`.
    pub fn stacked(&self) -> BaseMatrix {
        let rows: Vec<&[u32]> = self
            .components
            .iter()
            .flat_map(|c| (0..c.rows()).map(move |i| c.row(i)))
            .collect();
        BaseMatrix::from_rows(&rows).expect("components are non-empty")
    }

    /// Columns of the stacked matrix sorted lexicographically. Column
    /// permutations do not change the ensemble, and in this order `E_A`
    /// columns precede `E_B` columns.
    pub fn canonical(&self) -> ComponentStack {
        let stacked = self.stacked();
        let mut columns: Vec<Vec<u32>> = (0..stacked.cols())
            .map(|j| (0..stacked.rows()).map(|i| stacked.get(i, j)).collect())
            .collect();
        columns.sort();
        let perm: Vec<usize> = {
            let mut used = vec![false; stacked.cols()];
            columns
                .iter()
                .map(|col| {
                    let j = (0..stacked.cols())
                        .find(|&j| {
                            !used[j] && (0..stacked.rows()).all(|i| stacked.get(i, j) == col[i])
                        })
                        .expect("column exists");
                    used[j] = true;
                    j
                })
                .collect()
        };
        let components = self
            .components
            .iter()
            .map(|c| c.permute_cols(&perm).expect("valid permutation"))
            .collect();
        ComponentStack {
            components,
            degree: self.degree,
        }
    }

    /// True when both stacks describe the same ensemble up to a column permutation.
    pub fn equivalent(&self, other: &ComponentStack) -> bool {
        self.canonical() == other.canonical()
    }
}

/// The classical spreading with `w = J-1` and every component an all-ones row.
pub fn make_classical_spreading(j: u32, k: usize) -> Result<ComponentStack> {
    if j < 2 {
        return invalid(format!("variable degree J must be at least 2, got {j}"));
    }
    if k < 1 {
        return invalid("ratio k = K/J must be at least 1");
    }
    let stacked = vec![vec![1u32; k]; j as usize];
    ComponentStack::from_stacked_rows(&stacked)
}

/// `w = 1` spreading with `k-p+1` columns `E_A = [1, J-1]` followed by
/// `p-1` columns `E_B = [J-1, 1]`.
pub fn make_type_p_spreading(j: u32, k: usize, p: usize) -> Result<ComponentStack> {
    if j < 3 {
        return invalid(format!(
            "type-p spreading needs J >= 3 so that E_A != E_B, got {j}"
        ));
    }
    if k < 1 {
        return invalid("ratio k = K/J must be at least 1");
    }
    if p < 1 || p > k + 1 {
        return invalid(format!("type index p = {p} must lie in [1, {}]", k + 1));
    }
    let e_a = vec![1, j - 1];
    let e_b = vec![j - 1, 1];
    let columns: Vec<Vec<u32>> = std::iter::repeat_n(e_a, k + 1 - p)
        .chain(std::iter::repeat_n(e_b, p - 1))
        .collect();
    ComponentStack::from_columns(&columns)
}

/// A coupled base matrix together with its block geometry.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoupledChain {
    pub base: BaseMatrix,
    /// `c - b`
    pub block_rows: usize,
    /// `c`
    pub block_cols: usize,
    /// Coupling length `L`.
    pub length: usize,
    /// Coupling width `w`.
    pub width: usize,
}

impl CoupledChain {
    pub fn new(stack: &ComponentStack, length: usize) -> Result<Self> {
        Ok(CoupledChain {
            base: couple(stack, length)?,
            block_rows: stack.block_rows(),
            block_cols: stack.block_cols(),
            length,
            width: stack.width(),
        })
    }

    /// Number of row blocks, `L + w`.
    pub fn row_blocks(&self) -> usize {
        self.length + self.width
    }
}

/// Stacks and shifts the components: block column `t` holds `B_0..B_w` in
/// row blocks `t..t+w`.
pub fn couple(stack: &ComponentStack, length: usize) -> Result<BaseMatrix> {
    if length < 1 {
        return invalid("coupling length L must be at least 1");
    }
    let (br, bc, w) = (stack.block_rows(), stack.block_cols(), stack.width());
    let mut out = BaseMatrix::zeros((length + w) * br, length * bc)?;
    for t in 0..length {
        for (d, comp) in stack.components().iter().enumerate() {
            for i in 0..br {
                for j in 0..bc {
                    out.set((t + d) * br + i, t * bc + j, comp.get(i, j));
                }
            }
        }
    }
    Ok(out)
}

/// Coupling length argument of [`design_rate`]; `Infinite` gives the limit `b/c`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CouplingLength {
    Finite(usize),
    Infinite,
}

/// Design rate `R_L = 1 - (L+w)(c-b)/(Lc)` as an exact ratio `(num, den)`.
pub fn design_rate_ratio(stack: &ComponentStack, length: CouplingLength) -> Result<(i64, i64)> {
    let (br, bc, w) = (
        stack.block_rows() as i64,
        stack.block_cols() as i64,
        stack.width() as i64,
    );
    let (num, den) = match length {
        CouplingLength::Infinite => (bc - br, bc),
        CouplingLength::Finite(l) => {
            let l = l as i64;
            (l * bc - (l + w) * br, l * bc)
        }
    };
    if num <= 0 {
        let l = match length {
            CouplingLength::Finite(l) => l,
            CouplingLength::Infinite => 0,
        };
        return Err(Error::NonpositiveRate {
            l,
            w: stack.width(),
            cols: stack.block_cols(),
        });
    }
    Ok((num, den))
}

/// Design rate of the coupled ensemble.
pub fn design_rate(stack: &ComponentStack, length: CouplingLength) -> Result<f64> {
    let (num, den) = design_rate_ratio(stack, length)?;
    Ok(num as f64 / den as f64)
}
