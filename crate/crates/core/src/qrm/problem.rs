use crate::error::{Error, Result};
use crate::interp::{extrapolate, ExtrapolatedWindow};
use crate::pricing::TRADING_DAYS;

use super::grid::Grid;

/// Data of the forward-in-time problem `v_t + sigma^2(t) A(x) v_xx = 0` on
/// the grid, with boundary values at `x = 0, 1` and initial values at
/// `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionlessProblem {
    pub grid: Grid,
    /// `A(x_i)`, `n_x + 1` samples.
    pub a_x: Vec<f64>,
    /// `sigma^2(t_k)`, `n_t + 1` samples.
    pub sigma_sq: Vec<f64>,
    /// Initial values `g(x_i)`.
    pub g: Vec<f64>,
    /// Boundary values at `x = 0` (the bid side), per time node.
    pub v_b: Vec<f64>,
    /// Boundary values at `x = 1` (the ask side), per time node.
    pub v_a: Vec<f64>,
}

/// `A(x) = (255 / 2) [x (s_a - s_b) + s_b]^2 / (s_a - s_b)^2`.
pub fn coefficient_a(x: f64, s_b: f64, s_a: f64) -> f64 {
    let width = s_a - s_b;
    let s = x * width + s_b;
    0.5 * TRADING_DAYS * s * s / (width * width)
}

impl DimensionlessProblem {
    pub fn validate(&self) -> Result<()> {
        let g = &self.grid;
        let nx = g.n_x + 1;
        let nt = g.n_t + 1;
        for (v, n) in [
            (&self.a_x, nx),
            (&self.g, nx),
            (&self.sigma_sq, nt),
            (&self.v_b, nt),
            (&self.v_a, nt),
        ] {
            if v.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: v.len(),
                });
            }
        }
        if let Some(&a) = self.a_x.iter().find(|a| !(**a > 0.0) || !a.is_finite()) {
            return Err(Error::domain("A(x)", a));
        }
        if let Some(&s) = self
            .sigma_sq
            .iter()
            .find(|s| !(**s > 0.0) || !s.is_finite())
        {
            return Err(Error::domain("sigma^2(t)", s));
        }
        let data = self.g.iter().chain(&self.v_b).chain(&self.v_a);
        if let Some(&v) = data.into_iter().find(|v| !v.is_finite()) {
            return Err(Error::domain("boundary data", v));
        }
        let scale = self.g.iter().fold(1.0_f64, |m, v| m.max(v.abs()));
        let tol = 1e-12 * scale;
        if (self.g[0] - self.v_b[0]).abs() > tol || (self.g[g.n_x] - self.v_a[0]).abs() > tol {
            return Err(Error::Config(format!(
                "initial data ({}, {}) does not match boundary data ({}, {}) at t = 0",
                self.g[0], self.g[g.n_x], self.v_b[0], self.v_a[0]
            )));
        }
        Ok(())
    }

    /// `sigma^2(t_k) A(x_i)`.
    #[inline]
    pub fn coefficient(&self, i: usize, k: usize) -> f64 {
        self.sigma_sq[k] * self.a_x[i]
    }

    /// Grid function equal to the data on the constrained nodes and to the
    /// linear blend `(1 - x) v_b(t) + x v_a(t)` inside.
    pub fn lift(&self) -> Vec<f64> {
        let g = &self.grid;
        let mut f = vec![0.0; g.nodes()];
        for k in 0..=g.n_t {
            for i in 0..=g.n_x {
                let x = g.x(i);
                f[g.idx(i, k)] = blend(self.v_b[k], self.v_a[k], x);
            }
            f[g.idx(0, k)] = self.v_b[k];
            f[g.idx(g.n_x, k)] = self.v_a[k];
        }
        for i in 0..=g.n_x {
            f[g.idx(i, 0)] = self.g[i];
        }
        f
    }

    /// True on nodes fixed by the data: `x = 0`, `x = 1`, `t = 0`.
    #[inline]
    pub fn is_constrained(&self, i: usize, k: usize) -> bool {
        i == 0 || i == self.grid.n_x || k == 0
    }
}

/// `(1 - x) lo + x hi`, exact when `lo == hi`.
#[inline]
fn blend(lo: f64, hi: f64, x: f64) -> f64 {
    lo + x * (hi - lo)
}

/// Maps a forecast window into dimensionless variables
/// `x = (s - s_b) / (s_a - s_b)` on the grid.
pub fn to_dimensionless(
    window: &ExtrapolatedWindow,
    s_b: f64,
    s_a: f64,
    grid: Grid,
) -> Result<DimensionlessProblem> {
    if !(s_b > 0.0) || !s_a.is_finite() {
        return Err(Error::domain("stock bid", s_b));
    }
    if s_b >= s_a {
        return Err(Error::domain("stock ask - bid", s_a - s_b));
    }
    if (grid.t_max - window.horizon()).abs() > 1e-12 * window.horizon() {
        return Err(Error::Config(format!(
            "grid covers t <= {} but the window extrapolates to {}",
            grid.t_max,
            window.horizon()
        )));
    }
    let a_x = (0..=grid.n_x)
        .map(|i| coefficient_a(grid.x(i), s_b, s_a))
        .collect();
    let mut sigma_sq = Vec::with_capacity(grid.n_t + 1);
    let mut v_b = Vec::with_capacity(grid.n_t + 1);
    let mut v_a = Vec::with_capacity(grid.n_t + 1);
    for k in 0..=grid.n_t {
        let t = grid.t(k);
        let s = window.sigma.at(t);
        sigma_sq.push(s * s);
        v_b.push(extrapolate(&window.option_bid, t, window.y)?);
        v_a.push(extrapolate(&window.option_ask, t, window.y)?);
    }
    let mut g: Vec<f64> = (0..=grid.n_x)
        .map(|i| blend(v_b[0], v_a[0], grid.x(i)))
        .collect();
    g[grid.n_x] = v_a[0];
    let prob = DimensionlessProblem {
        grid,
        a_x,
        sigma_sq,
        g,
        v_b,
        v_a,
    };
    prob.validate()?;
    Ok(prob)
}
