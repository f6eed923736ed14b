//! Closed-form Black-Scholes pricing for a European call with zero rate,
//! the Greeks used by the forecasting model, and the expected price drift
//! that appears when the stock volatility differs from the market's opinion.
//!
//! Time is measured in trading years of 255 days.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use crate::error::{Error, Result};

/// Trading days per year.
pub const TRADING_DAYS: f64 = 255.0;

/// One trading day in years.
pub const ONE_DAY: f64 = 1.0 / TRADING_DAYS;

/// Standard normal CDF `N(z) = P(Z <= z)`.
///
/// Evaluated through `erfc` so both tails keep full relative precision.
pub fn std_normal_cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

/// Complementary CDF `P(Z >= z) = 1 - N(z)`.
pub fn std_normal_ccdf(z: f64) -> f64 {
    0.5 * libm::erfc(z * FRAC_1_SQRT_2)
}

/// Standard normal density.
pub fn std_normal_pdf(z: f64) -> f64 {
    (-0.5 * z * z).exp() / (2.0 * PI).sqrt()
}

/// Inverse of [`std_normal_cdf`] on `(0, 1)`.
///
/// Acklam's rational approximation followed by two Halley refinements
/// against the erfc-based CDF.
pub fn inv_std_normal_cdf(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("probability", p));
    }
    if p == 0.5 {
        return Ok(0.0);
    }
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383_577_518_672_69e2,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    const P_LOW: f64 = 0.02425;

    let mut x = if p < P_LOW {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - P_LOW {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };

    for _ in 0..2 {
        // work on the smaller tail to avoid cancellation in N(x) - p
        let e = if x < 0.0 {
            std_normal_cdf(x) - p
        } else {
            (1.0 - p) - std_normal_ccdf(x)
        };
        let u = e / std_normal_pdf(x);
        x -= u / (1.0 + 0.5 * x * u);
    }
    Ok(x)
}

/// Contract terms of a European call.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OptionSpec {
    pub strike: f64,
    /// Maturity in years.
    pub maturity: f64,
    /// Risk-free rate. Every model in this crate uses zero.
    pub rate: f64,
}

impl OptionSpec {
    pub fn new(strike: f64, maturity: f64) -> Result<Self> {
        if !(strike > 0.0) || !strike.is_finite() {
            return Err(Error::domain("strike", strike));
        }
        if !(maturity > 0.0) || !maturity.is_finite() {
            return Err(Error::domain("maturity", maturity));
        }
        Ok(Self {
            strike,
            maturity,
            rate: 0.0,
        })
    }

    /// 90-day call struck at 100.
    pub fn standard() -> Self {
        Self {
            strike: 100.0,
            maturity: 90.0 * ONE_DAY,
            rate: 0.0,
        }
    }
}

/// Realised stock volatility `sigma` and the option market's opinion `sigma_hat`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VolPair {
    pub sigma: f64,
    pub sigma_hat: f64,
}

impl VolPair {
    pub fn new(sigma: f64, sigma_hat: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::domain("sigma", sigma));
        }
        if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
            return Err(Error::domain("sigma_hat", sigma_hat));
        }
        Ok(Self { sigma, sigma_hat })
    }
}

fn check_inputs(s: f64, tau: f64, sigma_hat: f64) -> Result<()> {
    if !(s > 0.0) || !s.is_finite() {
        return Err(Error::domain("stock price", s));
    }
    if !(tau > 0.0) || !tau.is_finite() {
        return Err(Error::domain("time to maturity", tau));
    }
    if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
        return Err(Error::domain("sigma_hat", sigma_hat));
    }
    Ok(())
}

/// `(theta_plus, theta_minus)` of the Black-Scholes formula.
fn thetas(s: f64, tau: f64, strike: f64, sigma_hat: f64) -> (f64, f64) {
    let vol_sqrt = sigma_hat * tau.sqrt();
    let log_m = (s / strike).ln();
    let half = 0.5 * sigma_hat * sigma_hat * tau;
    ((log_m + half) / vol_sqrt, (log_m - half) / vol_sqrt)
}

/// Call price `s N(theta+) - K N(theta-)`.
///
/// The true price is strictly positive; far out of the money it can fall
/// below the smallest normal double, in which case `f64::MIN_POSITIVE` is
/// returned so bid/ask spreads built on it stay ordered.
pub fn bs_call_price(s: f64, tau: f64, spec: &OptionSpec, sigma_hat: f64) -> Result<f64> {
    check_inputs(s, tau, sigma_hat)?;
    let (tp, tm) = thetas(s, tau, spec.strike, sigma_hat);
    let discount = (-spec.rate * tau).exp();
    let price = s * std_normal_cdf(tp) - discount * spec.strike * std_normal_cdf(tm);
    if s < spec.strike && price < f64::MIN_POSITIVE {
        return Ok(f64::MIN_POSITIVE);
    }
    Ok(price.max(s - spec.strike).max(0.0))
}

/// Second derivative of the call price in `s`.
pub fn greek_gamma(s: f64, tau: f64, spec: &OptionSpec, sigma_hat: f64) -> Result<f64> {
    check_inputs(s, tau, sigma_hat)?;
    let (tp, _) = thetas(s, tau, spec.strike, sigma_hat);
    Ok((-0.5 * tp * tp).exp() / (sigma_hat * s * (2.0 * PI * tau).sqrt()))
}

/// First derivative of the call price in `s`, `N(theta+)`.
pub fn greek_delta(s: f64, tau: f64, spec: &OptionSpec, sigma_hat: f64) -> Result<f64> {
    check_inputs(s, tau, sigma_hat)?;
    let (tp, _) = thetas(s, tau, spec.strike, sigma_hat);
    Ok(std_normal_cdf(tp))
}

/// Expected change of the option price over `dt` when the stock moves with
/// volatility `sigma` but the option is priced with `sigma_hat`:
/// `(sigma^2 - sigma_hat^2) / 2 * s^2 * Gamma * dt`.
pub fn expected_increment(
    s: f64,
    tau: f64,
    spec: &OptionSpec,
    vols: VolPair,
    dt: f64,
) -> Result<f64> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::domain("dt", dt));
    }
    let gamma = greek_gamma(s, tau, spec, vols.sigma_hat)?;
    let gap = vols.sigma * vols.sigma - vols.sigma_hat * vols.sigma_hat;
    Ok(0.5 * gap * s * s * gamma * dt)
}
