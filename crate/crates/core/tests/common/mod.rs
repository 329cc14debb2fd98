//! Scalar erasure-probability density evolution on a binary protograph,
//! written independently of the subspace engine for cross-checking at m = 1.

#![allow(dead_code)]

/// Binary protograph DE state: erasure probabilities on each nonzero entry.
pub struct BinaryDe {
    rows: usize,
    cols: usize,
    mult: Vec<Vec<u32>>,
    eps: f64,
    /// Variable-to-check erasure probability, indexed `[row][col]`.
    x: Vec<Vec<f64>>,
    /// Check-to-variable erasure probability, indexed `[row][col]`.
    y: Vec<Vec<f64>>,
}

impl BinaryDe {
    pub fn new(base: &[Vec<u32>], eps: f64) -> Self {
        let rows = base.len();
        let cols = base[0].len();
        BinaryDe {
            rows,
            cols,
            mult: base.to_vec(),
            eps,
            x: vec![vec![eps; cols]; rows],
            y: vec![vec![1.0; cols]; rows],
        }
    }

    /// One flooding iteration: all checks, then all variables.
    pub fn step(&mut self) {
        for i in 0..self.rows {
            for j in 0..self.cols {
                let b = self.mult[i][j];
                if b == 0 {
                    continue;
                }
                let mut known = (1.0 - self.x[i][j]).powi(b as i32 - 1);
                for jj in 0..self.cols {
                    if jj != j && self.mult[i][jj] > 0 {
                        known *= (1.0 - self.x[i][jj]).powi(self.mult[i][jj] as i32);
                    }
                }
                self.y[i][j] = 1.0 - known;
            }
        }
        for j in 0..self.cols {
            for i in 0..self.rows {
                let b = self.mult[i][j];
                if b == 0 {
                    continue;
                }
                let mut erased = self.eps * self.y[i][j].powi(b as i32 - 1);
                for ii in 0..self.rows {
                    if ii != i && self.mult[ii][j] > 0 {
                        erased *= self.y[ii][j].powi(self.mult[ii][j] as i32);
                    }
                }
                self.x[i][j] = erased;
            }
        }
    }

    /// A-posteriori erasure probability of every column.
    pub fn app_erasure(&self) -> Vec<f64> {
        (0..self.cols)
            .map(|j| {
                (0..self.rows)
                    .filter(|&i| self.mult[i][j] > 0)
                    .fold(self.eps, |acc, i| {
                        acc * self.y[i][j].powi(self.mult[i][j] as i32)
                    })
            })
            .collect()
    }
}

/// Decodes when every APP erasure probability drops to `delta`; fails when the
/// summed APP improvement of an iteration falls below `stall` or after
/// `max_iters` iterations.
pub fn binary_decodes(
    base: &[Vec<u32>],
    eps: f64,
    delta: f64,
    max_iters: usize,
    stall: f64,
) -> bool {
    let mut de = BinaryDe::new(base, eps);
    let mut prev = de.app_erasure();
    if prev.iter().all(|&p| p <= delta) {
        return true;
    }
    for _ in 0..max_iters {
        de.step();
        let cur = de.app_erasure();
        if cur.iter().all(|&p| p <= delta) {
            return true;
        }
        let gain: f64 = prev.iter().zip(&cur).map(|(a, b)| a - b).sum();
        if gain < stall {
            return false;
        }
        prev = cur;
    }
    false
}

/// Bisection on `[0, 1]` down to width `tol`; returns the decoding end.
pub fn binary_threshold(base: &[Vec<u32>], tol: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > tol {
        let mid = (lo + hi) / 2.0;
        if binary_decodes(base, mid, 1e-6, 10_000, 1e-12) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

/// Base matrix of the `(J, kJ)` block ensemble.
pub fn block_rows(j: u32, k: usize) -> Vec<Vec<u32>> {
    vec![vec![j; k]]
}

/// Coupled band matrix built directly from a stack of `w + 1` single-row components.
pub fn coupled_rows(components: &[Vec<u32>], l: usize) -> Vec<Vec<u32>> {
    let w = components.len() - 1;
    let c = components[0].len();
    let mut out = vec![vec![0u32; l * c]; l + w];
    for t in 0..l {
        for (s, comp) in components.iter().enumerate() {
            for (cc, &v) in comp.iter().enumerate() {
                out[t + s][t * c + cc] = v;
            }
        }
    }
    out
}
