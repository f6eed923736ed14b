//! Quadratic fits through the last three trading days and their two-day
//! extrapolation, which supply the future boundary data of a forecast.

use crate::error::{Error, Result};
use crate::market_sim::MarketSeries;
use crate::pricing::ONE_DAY;

/// `a t^2 + b t + c`, with `t` in trading years and `t = 0` meaning today.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadratic {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl Quadratic {
    pub fn constant(c: f64) -> Self {
        Self { a: 0.0, b: 0.0, c }
    }

    /// Unrestricted evaluation.
    pub fn eval(&self, t: f64) -> f64 {
        (self.a * t + self.b) * t + self.c
    }
}

/// The quadratic through `(-2y, d_m2y)`, `(-y, d_my)` and `(0, d_0)`.
pub fn fit_quadratic(d_m2y: f64, d_my: f64, d_0: f64, y: f64) -> Result<Quadratic> {
    if !(y > 0.0) || !y.is_finite() {
        return Err(Error::domain("day length", y));
    }
    for v in [d_m2y, d_my, d_0] {
        if !v.is_finite() {
            return Err(Error::domain("node value", v));
        }
    }
    let c = d_0;
    let d1 = d_my - c;
    let d2 = d_m2y - c;
    let a = (d2 - 2.0 * d1) / (2.0 * y * y);
    let b = (a * y * y - d1) / y;
    Ok(Quadratic { a, b, c })
}

/// Evaluates a fitted quadratic forward in time; only `[0, 2y]` is allowed.
pub fn extrapolate(q: &Quadratic, t: f64, y: f64) -> Result<f64> {
    let limit = 2.0 * y;
    // tolerate round-off in grid times computed as k * h_t
    if !(t >= 0.0 && t <= limit * (1.0 + 1e-12)) {
        return Err(Error::Range { t, limit });
    }
    Ok(q.eval(t))
}

/// Future volatility over the forecast window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum VolCurve {
    Constant(f64),
    Fitted(Quadratic),
}

impl VolCurve {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            VolCurve::Constant(s) => *s,
            VolCurve::Fitted(q) => q.eval(t),
        }
    }
}

/// Extrapolated option bid, ask and volatility for `t` in `[0, 2y]` plus
/// today's stock quotes.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtrapolatedWindow {
    /// Index of "today" in the series.
    pub day: usize,
    pub y: f64,
    pub option_bid: Quadratic,
    pub option_ask: Quadratic,
    pub sigma: VolCurve,
    pub stock_bid: f64,
    pub stock_ask: f64,
}

impl ExtrapolatedWindow {
    pub fn horizon(&self) -> f64 {
        2.0 * self.y
    }

    /// Replaces the fitted volatility by a constant.
    pub fn with_constant_sigma(mut self, sigma: f64) -> Self {
        self.sigma = VolCurve::Constant(sigma);
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Degeneracy {
    /// Extrapolated bid reaches the ask somewhere in `[0, 2y]`.
    CrossedQuotes,
    /// Extrapolated volatility is not positive somewhere in `[0, 2y]`.
    NonPositiveVolatility,
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowFit {
    Ready(ExtrapolatedWindow),
    Degenerate { day: usize, reason: Degeneracy },
}

/// Number of sub-intervals of `[0, 2y]` sampled by the degeneracy guard.
pub const GUARD_SAMPLES: usize = 100;

/// Fits days `j-2, j-1, j` of the series and checks the extrapolation on
/// `[0, 2y]`.
pub fn extrapolate_window(series: &MarketSeries, j: usize) -> Result<WindowFit> {
    if j < 2 {
        return Err(Error::Index {
            index: j,
            reason: "two days of history are required".into(),
        });
    }
    if j >= series.len() {
        return Err(Error::Index {
            index: j,
            reason: format!("series has {} days", series.len()),
        });
    }
    let y = ONE_DAY;
    let fit = |col: &[f64]| fit_quadratic(col[j - 2], col[j - 1], col[j], y);
    let option_bid = fit(&series.option_bid)?;
    let option_ask = fit(&series.option_ask)?;
    let sigma = fit(&series.sigma_hat)?;

    for i in 0..=GUARD_SAMPLES {
        let t = 2.0 * y * i as f64 / GUARD_SAMPLES as f64;
        if option_bid.eval(t) >= option_ask.eval(t) {
            return Ok(WindowFit::Degenerate {
                day: j,
                reason: Degeneracy::CrossedQuotes,
            });
        }
        if sigma.eval(t) <= 0.0 {
            return Ok(WindowFit::Degenerate {
                day: j,
                reason: Degeneracy::NonPositiveVolatility,
            });
        }
    }

    let sigma = if sigma.a == 0.0 && sigma.b == 0.0 {
        VolCurve::Constant(sigma.c)
    } else {
        VolCurve::Fitted(sigma)
    };
    Ok(WindowFit::Ready(ExtrapolatedWindow {
        day: j,
        y,
        option_bid,
        option_ask,
        sigma,
        stock_bid: series.stock_bid[j],
        stock_ask: series.stock_ask[j],
    }))
}
