//! The functional as a weighted least-squares operator `J(v) = |L v|^2`.
//!
//! Every row of `L` is one residual or `H^2` term with the square root of
//! its quadrature weight folded in. Minimising over the free nodes turns
//! into the normal equations `L_u^T L_u w = -L_u^T L F` for the correction
//! `w` on top of the lift `F`.

use super::banded::BandedSym;
use super::grid::Grid;
use super::problem::DimensionlessProblem;
use super::stencil::{h2_term, H2_TERMS};

/// Row-compressed sparse operator over all grid nodes.
#[derive(Debug, Clone)]
pub struct LeastSquaresOperator {
    grid: Grid,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    /// Node -> free-unknown index.
    free_of_node: Vec<Option<usize>>,
    n_free: usize,
}

impl LeastSquaresOperator {
    pub fn new(prob: &DimensionlessProblem, alpha: f64) -> Self {
        let g = prob.grid;
        let n_rows = g.n_t * (g.n_x - 1) + H2_TERMS * g.nodes();
        let mut row_ptr = Vec::with_capacity(n_rows + 1);
        let mut cols = Vec::with_capacity(n_rows * 6);
        let mut vals = Vec::with_capacity(n_rows * 6);
        row_ptr.push(0);

        let cell = (g.h_x * g.h_t).sqrt();
        let inv_ht = 1.0 / g.h_t;
        let inv_hx2 = 1.0 / (g.h_x * g.h_x);
        for k in 0..g.n_t {
            for i in 1..g.n_x {
                let c = prob.coefficient(i, k) * inv_hx2;
                let entries = [
                    (g.idx(i, k + 1), inv_ht),
                    (g.idx(i, k), -inv_ht - 2.0 * c),
                    (g.idx(i - 1, k), c),
                    (g.idx(i + 1, k), c),
                ];
                for (col, val) in entries {
                    cols.push(col);
                    vals.push(cell * val);
                }
                row_ptr.push(cols.len());
            }
        }

        for k in 0..=g.n_t {
            for i in 0..=g.n_x {
                let w = (alpha * g.node_weight(i, k)).sqrt();
                for term in 0..H2_TERMS {
                    let (sx, st) = h2_term(term, i, k, g.n_x, g.n_t, g.h_x, g.h_t);
                    for (kk, ct) in st.iter() {
                        for (ii, cx) in sx.iter() {
                            if cx * ct != 0.0 {
                                cols.push(g.idx(ii, kk));
                                vals.push(w * cx * ct);
                            }
                        }
                    }
                    row_ptr.push(cols.len());
                }
            }
        }

        let mut free_of_node = vec![None; g.nodes()];
        let mut n_free = 0;
        for k in 1..=g.n_t {
            for i in 1..g.n_x {
                free_of_node[g.idx(i, k)] = Some(n_free);
                n_free += 1;
            }
        }

        Self {
            grid: g,
            row_ptr,
            cols,
            vals,
            free_of_node,
            n_free,
        }
    }

    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn n_rows(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn n_free(&self) -> usize {
        self.n_free
    }

    /// Free unknowns in node order.
    pub fn free_node_indices(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.free_of_node
            .iter()
            .enumerate()
            .filter_map(|(node, f)| f.map(|u| (node, u)))
    }

    fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.cols[a..b], &self.vals[a..b])
    }

    /// `L v` over all nodes.
    pub fn apply_full(&self, v: &[f64]) -> Vec<f64> {
        (0..self.n_rows())
            .map(|r| {
                let (c, x) = self.row(r);
                c.iter().zip(x).map(|(&j, &a)| a * v[j]).sum()
            })
            .collect()
    }

    /// `|L v|^2`.
    pub fn functional(&self, v: &[f64]) -> f64 {
        self.apply_full(v).iter().map(|r| r * r).sum()
    }

    /// Gradient of `|L v|^2` with respect to every node value.
    pub fn gradient_full(&self, v: &[f64]) -> Vec<f64> {
        let lv = self.apply_full(v);
        let mut grad = vec![0.0; v.len()];
        for (r, &res) in lv.iter().enumerate() {
            let (c, x) = self.row(r);
            for (&j, &a) in c.iter().zip(x) {
                grad[j] += 2.0 * a * res;
            }
        }
        grad
    }

    /// `L_u^T y` restricted to the free unknowns.
    pub fn transpose_free(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for (r, &yr) in y.iter().enumerate() {
            if yr == 0.0 {
                continue;
            }
            let (c, x) = self.row(r);
            for (&j, &a) in c.iter().zip(x) {
                if let Some(u) = self.free_of_node[j] {
                    out[u] += a * yr;
                }
            }
        }
        out
    }

    /// `L_u^T L_u w`.
    pub fn normal_matvec(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.n_free];
        for r in 0..self.n_rows() {
            let (c, x) = self.row(r);
            let mut s = 0.0;
            for (&j, &a) in c.iter().zip(x) {
                if let Some(u) = self.free_of_node[j] {
                    s += a * w[u];
                }
            }
            if s != 0.0 {
                for (&j, &a) in c.iter().zip(x) {
                    if let Some(u) = self.free_of_node[j] {
                        out[u] += a * s;
                    }
                }
            }
        }
        out
    }

    /// Diagonal of `L_u^T L_u`.
    pub fn normal_diagonal(&self) -> Vec<f64> {
        let mut d = vec![0.0; self.n_free];
        for (&j, &a) in self.cols.iter().zip(&self.vals) {
            if let Some(u) = self.free_of_node[j] {
                d[u] += a * a;
            }
        }
        d
    }

    /// Half-bandwidth of `L_u^T L_u` in free-unknown numbering.
    pub fn bandwidth(&self) -> usize {
        let mut bw = 0;
        for r in 0..self.n_rows() {
            let (c, _) = self.row(r);
            let us = c.iter().filter_map(|&j| self.free_of_node[j]);
            let (lo, hi) = us.fold((usize::MAX, 0), |(lo, hi), u| (lo.min(u), hi.max(u)));
            if lo != usize::MAX {
                bw = bw.max(hi - lo);
            }
        }
        bw
    }

    /// `L_u^T L_u` in symmetric band storage.
    pub fn normal_matrix(&self) -> BandedSym {
        let mut m = BandedSym::zeros(self.n_free, self.bandwidth());
        let mut entries: Vec<(usize, f64)> = Vec::with_capacity(16);
        for r in 0..self.n_rows() {
            let (c, x) = self.row(r);
            entries.clear();
            entries.extend(
                c.iter()
                    .zip(x)
                    .filter_map(|(&j, &a)| self.free_of_node[j].map(|u| (u, a))),
            );
            for &(p, ap) in &entries {
                for &(q, aq) in &entries {
                    if q <= p {
                        m.add(p, q, ap * aq);
                    }
                }
            }
        }
        m
    }
}
