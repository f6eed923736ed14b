//! Direct evaluation of the discrete Tikhonov functional
//! `sum (D_t v + c D_xx v)^2 h_x h_t + alpha |v|^2_{H^2}`.
//!
//! The residual is taken on nodes `1 <= i < n_x`, `0 <= k < n_t` with a
//! forward difference in `t` and a central second difference in `x`. The
//! `H^2` norm sums `v, v_x, v_t, v_xx, v_xt, v_tt` over every node with
//! trapezoid weights, so a constant `c` has squared norm `c^2 * area`.

use crate::error::{Error, Result};

use super::grid::Grid;
use super::problem::DimensionlessProblem;
use super::stencil::{h2_term, Stencil, H2_TERMS};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FunctionalParts {
    /// Discrete `int (Mv)^2`.
    pub residual: f64,
    /// Discrete `|v|^2_{H^2}` (not yet multiplied by `alpha`).
    pub h2_norm_sq: f64,
}

impl FunctionalParts {
    pub fn total(&self, alpha: f64) -> f64 {
        self.residual + alpha * self.h2_norm_sq
    }
}

fn check_len(v: &[f64], grid: &Grid) -> Result<()> {
    if v.len() != grid.nodes() {
        return Err(Error::Shape {
            expected: grid.nodes(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// `(Mv)(x_i, t_k)` for an interior residual node.
pub fn residual_at(v: &[f64], prob: &DimensionlessProblem, i: usize, k: usize) -> f64 {
    let g = &prob.grid;
    let v_t = (v[g.idx(i, k + 1)] - v[g.idx(i, k)]) / g.h_t;
    let v_xx = (v[g.idx(i - 1, k)] - 2.0 * v[g.idx(i, k)] + v[g.idx(i + 1, k)]) / (g.h_x * g.h_x);
    v_t + prob.coefficient(i, k) * v_xx
}

fn apply_2d(v: &[f64], grid: &Grid, sx: &Stencil, st: &Stencil) -> f64 {
    let mut acc = 0.0;
    for (k, ct) in st.iter() {
        for (i, cx) in sx.iter() {
            acc += cx * ct * v[grid.idx(i, k)];
        }
    }
    acc
}

/// Discrete squared `H^2` norm of a grid function.
pub fn h2_norm_sq(v: &[f64], grid: &Grid) -> Result<f64> {
    check_len(v, grid)?;
    let mut total = 0.0;
    for k in 0..=grid.n_t {
        for i in 0..=grid.n_x {
            let w = grid.node_weight(i, k);
            for term in 0..H2_TERMS {
                let (sx, st) = h2_term(term, i, k, grid.n_x, grid.n_t, grid.h_x, grid.h_t);
                let d = apply_2d(v, grid, &sx, &st);
                total += w * d * d;
            }
        }
    }
    Ok(total)
}

/// Discrete `int (Mv)^2`.
pub fn residual_norm_sq(v: &[f64], prob: &DimensionlessProblem) -> Result<f64> {
    let g = &prob.grid;
    check_len(v, g)?;
    let cell = g.h_x * g.h_t;
    let mut total = 0.0;
    for k in 0..g.n_t {
        for i in 1..g.n_x {
            let r = residual_at(v, prob, i, k);
            total += r * r;
        }
    }
    Ok(total * cell)
}

pub fn functional_parts(v: &[f64], prob: &DimensionlessProblem) -> Result<FunctionalParts> {
    Ok(FunctionalParts {
        residual: residual_norm_sq(v, prob)?,
        h2_norm_sq: h2_norm_sq(v, &prob.grid)?,
    })
}

/// The regularised functional `J_alpha(v)`.
pub fn discrete_functional(v: &[f64], prob: &DimensionlessProblem, alpha: f64) -> Result<f64> {
    Ok(functional_parts(v, prob)?.total(alpha))
}
