use crate::error::{Error, Result};
use crate::pricing::ONE_DAY;

/// Uniform node grid on `[0, 1] x [0, t_max]` with `n_x` by `n_t` cells.
///
/// Nodes are stored with `x` varying fastest: node `(i, k)` lives at
/// `k * (n_x + 1) + i`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub n_x: usize,
    pub n_t: usize,
    pub h_x: f64,
    pub h_t: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn new(n_x: usize, n_t: usize, t_max: f64) -> Result<Self> {
        // one-sided second-derivative stencils need four nodes
        if n_x < 3 || n_t < 3 {
            return Err(Error::Config(format!(
                "grid needs at least 3 cells per axis, got {n_x} x {n_t}"
            )));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::domain("t_max", t_max));
        }
        Ok(Self {
            n_x,
            n_t,
            h_x: 1.0 / n_x as f64,
            h_t: t_max / n_t as f64,
            t_max,
        })
    }

    /// 100 x 100 cells over two trading days: `h_x = 0.01`, `h_t = 7.84e-5`.
    pub fn two_day(n_x: usize, n_t: usize) -> Result<Self> {
        Self::new(n_x, n_t, 2.0 * ONE_DAY)
    }

    pub fn standard() -> Self {
        Self::two_day(100, 100).expect("static grid")
    }

    pub fn nodes(&self) -> usize {
        (self.n_x + 1) * (self.n_t + 1)
    }

    #[inline]
    pub fn idx(&self, i: usize, k: usize) -> usize {
        k * (self.n_x + 1) + i
    }

    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        i as f64 * self.h_x
    }

    #[inline]
    pub fn t(&self, k: usize) -> f64 {
        k as f64 * self.h_t
    }

    /// Trapezoid weight of node index `i` among `n + 1` nodes spaced `h`.
    pub(crate) fn trapezoid(i: usize, n: usize, h: f64) -> f64 {
        if i == 0 || i == n {
            0.5 * h
        } else {
            h
        }
    }

    pub(crate) fn node_weight(&self, i: usize, k: usize) -> f64 {
        Self::trapezoid(i, self.n_x, self.h_x) * Self::trapezoid(k, self.n_t, self.h_t)
    }

    /// Area `1 * t_max`.
    pub fn area(&self) -> f64 {
        self.t_max
    }
}
