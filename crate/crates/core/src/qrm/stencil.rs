//! One-dimensional difference stencils on `n + 1` uniform nodes.
//!
//! Interior nodes use second-order central differences; the two end nodes
//! use second-order one-sided formulas.

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Stencil {
    /// First node touched.
    pub start: usize,
    pub coefs: [f64; 4],
    pub len: usize,
}

impl Stencil {
    pub fn identity(i: usize) -> Self {
        Self {
            start: i,
            coefs: [1.0, 0.0, 0.0, 0.0],
            len: 1,
        }
    }

    pub fn first(i: usize, n: usize, h: f64) -> Self {
        let s = 0.5 / h;
        if i == 0 {
            Self {
                start: 0,
                coefs: [-3.0 * s, 4.0 * s, -s, 0.0],
                len: 3,
            }
        } else if i == n {
            Self {
                start: n - 2,
                coefs: [s, -4.0 * s, 3.0 * s, 0.0],
                len: 3,
            }
        } else {
            Self {
                start: i - 1,
                coefs: [-s, 0.0, s, 0.0],
                len: 3,
            }
        }
    }

    pub fn second(i: usize, n: usize, h: f64) -> Self {
        let s = 1.0 / (h * h);
        if i == 0 {
            Self {
                start: 0,
                coefs: [2.0 * s, -5.0 * s, 4.0 * s, -s],
                len: 4,
            }
        } else if i == n {
            Self {
                start: n - 3,
                coefs: [-s, 4.0 * s, -5.0 * s, 2.0 * s],
                len: 4,
            }
        } else {
            Self {
                start: i - 1,
                coefs: [s, -2.0 * s, s, 0.0],
                len: 3,
            }
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        (0..self.len).map(move |m| (self.start + m, self.coefs[m]))
    }
}

/// The six terms of the discrete `H^2` norm as (x-stencil, t-stencil)
/// factories: `v, v_x, v_t, v_xx, v_xt, v_tt`.
pub(crate) const H2_TERMS: usize = 6;

pub(crate) fn h2_term(
    term: usize,
    i: usize,
    k: usize,
    n_x: usize,
    n_t: usize,
    h_x: f64,
    h_t: f64,
) -> (Stencil, Stencil) {
    match term {
        0 => (Stencil::identity(i), Stencil::identity(k)),
        1 => (Stencil::first(i, n_x, h_x), Stencil::identity(k)),
        2 => (Stencil::identity(i), Stencil::first(k, n_t, h_t)),
        3 => (Stencil::second(i, n_x, h_x), Stencil::identity(k)),
        4 => (Stencil::first(i, n_x, h_x), Stencil::first(k, n_t, h_t)),
        5 => (Stencil::identity(i), Stencil::second(k, n_t, h_t)),
        _ => unreachable!("H2 has six terms"),
    }
}
