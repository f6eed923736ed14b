//! Probability of a profitable trade when the market misjudges volatility,
//! the binomial statistics of repeated trades, the two trading rules and the
//! confusion-matrix metrics of a backtest.

use crate::error::{Error, Result};
use crate::pricing::{inv_std_normal_cdf, std_normal_ccdf, VolPair};

/// Probability that the option price one interval `eps` ahead exceeds the
/// price expected by the market:
/// `P(Z >= (sigma_hat^2 - sigma^2) sqrt(eps) / (2 sqrt(sigma_hat^2 + sigma^2)))`.
///
/// Above one half exactly when `sigma > sigma_hat`.
pub fn trade_win_probability(vols: VolPair, eps: f64) -> Result<f64> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain("eps", eps));
    }
    let VolPair { sigma, sigma_hat } = VolPair::new(vols.sigma, vols.sigma_hat)?;
    let s2 = sigma * sigma;
    let h2 = sigma_hat * sigma_hat;
    let z = (h2 - s2) * eps.sqrt() / (2.0 * (h2 + s2).sqrt());
    Ok(std_normal_ccdf(z))
}

fn check_probability(p: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::domain("probability", p));
    }
    Ok(())
}

/// Dispersion `p (1 - p) / n` of the success frequency over `n` trades.
pub fn zeta_dispersion(p: f64, n: usize) -> Result<f64> {
    check_probability(p)?;
    if n == 0 {
        return Err(Error::Config("dispersion needs at least one trade".into()));
    }
    Ok(p * (1.0 - p) / n as f64)
}

fn check_open_probability(p: f64) -> Result<()> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::domain("probability", p));
    }
    Ok(())
}

/// `ln C(n, k)`.
fn ln_binomial(n: usize, k: usize) -> f64 {
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Probability that strictly more than half of `n` independent trades,
/// each winning with probability `p`, are profitable.
///
/// Summed in log space so large `n` neither overflows nor underflows.
pub fn majority_profit_probability(p: f64, n: usize) -> Result<f64> {
    check_open_probability(p)?;
    if n == 0 {
        return Err(Error::Config("need at least one trade".into()));
    }
    let (lp, lq) = (p.ln(), (-p).ln_1p());
    let logs: Vec<f64> = (n / 2 + 1..=n)
        .map(|k| ln_binomial(n, k) + k as f64 * lp + (n - k) as f64 * lq)
        .collect();
    let max = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = logs.iter().map(|l| (l - max).exp()).sum();
    Ok((max + sum.ln()).exp().min(1.0))
}

/// De Moivre-Laplace approximation of [`majority_profit_probability`],
/// `P(Z >= (1 - 2p) sqrt(n) / (2 sqrt(p (1 - p))))`.
pub fn majority_normal_approx(p: f64, n: usize) -> Result<f64> {
    check_open_probability(p)?;
    if n == 0 {
        return Err(Error::Config("need at least one trade".into()));
    }
    let z = (1.0 - 2.0 * p) * (n as f64).sqrt() / (2.0 * (p * (1.0 - p)).sqrt());
    Ok(std_normal_ccdf(z))
}

/// Smallest single-trade win probability for which the normal approximation
/// puts the chance of a winning majority at `alpha_conf`.
pub fn required_probability(alpha_conf: f64, n: usize) -> Result<f64> {
    required_probability_with_delta(alpha_conf, n, 0.0)
}

/// [`required_probability`] with an explicit correction `delta` for the
/// error of the normal approximation.
pub fn required_probability_with_delta(alpha_conf: f64, n: usize, delta: f64) -> Result<f64> {
    if !(alpha_conf > 0.5 && alpha_conf < 1.0) {
        return Err(Error::domain("confidence level", alpha_conf));
    }
    if n == 0 {
        return Err(Error::Config("need at least one trade".into()));
    }
    if !delta.is_finite() {
        return Err(Error::domain("delta", delta));
    }
    let z = inv_std_normal_cdf(alpha_conf - delta)?;
    let z2 = z * z;
    Ok(0.5 * (1.0 + (z2 / (n as f64 + z2)).sqrt()))
}

/// Volatility gap `sigma - sigma_hat` needed for [`required_probability`]
/// to be reached over `n` trades of length `eps`.
pub fn required_vol_gap(
    sigma: f64,
    sigma_hat: f64,
    eps: f64,
    alpha_conf: f64,
    n: usize,
) -> Result<f64> {
    let vols = VolPair::new(sigma, sigma_hat)?;
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::domain("eps", eps));
    }
    let p = required_probability(alpha_conf, n)?;
    let z = inv_std_normal_cdf(p)?.abs();
    let (s, h) = (vols.sigma, vols.sigma_hat);
    Ok(2.0 * (s * s + h * h).sqrt() / (eps.sqrt() * (s + h)) * z)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    Buy,
    Short,
    Abstain,
}

impl Action {
    pub fn as_str(&self) -> &'static str {
        match self {
            Action::Buy => "buy",
            Action::Short => "short",
            Action::Abstain => "abstain",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategyParams {
    /// Buy when `sigma - sigma_hat >= beta1`.
    pub beta1: f64,
    /// Short when `sigma - sigma_hat <= beta2`.
    pub beta2: f64,
    /// Price threshold of the forecast-driven rule.
    pub eta: f64,
}

impl Default for StrategyParams {
    fn default() -> Self {
        Self {
            beta1: 0.05,
            beta2: -0.05,
            eta: 0.0,
        }
    }
}

impl StrategyParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta1 > 0.0) {
            return Err(Error::domain("beta1", self.beta1));
        }
        if !(self.beta2 < 0.0) {
            return Err(Error::domain("beta2", self.beta2));
        }
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::domain("eta", self.eta));
        }
        Ok(())
    }
}

/// Which rule produced a signal, with the thresholds it used.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Rule {
    /// Both volatilities known.
    Ideal { beta1: f64, beta2: f64 },
    /// Only the forecast price known.
    Forecast { eta: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StrategySignal {
    pub action: Action,
    /// Forecast price; `sigma` for the ideal rule.
    pub v_pred: f64,
    /// Current price; `sigma_hat` for the ideal rule.
    pub v_now: f64,
    /// Threshold the decision was made against.
    pub threshold_used: f64,
    pub rule: Rule,
}

impl StrategySignal {
    /// Re-runs the producing rule on the recorded inputs.
    pub fn reevaluate(&self) -> Action {
        match self.rule {
            Rule::Ideal { beta1, beta2 } => ideal_action(self.v_pred - self.v_now, beta1, beta2),
            Rule::Forecast { eta } => forecast_action(self.v_pred, self.v_now, eta),
        }
    }
}

fn ideal_action(gap: f64, beta1: f64, beta2: f64) -> Action {
    if gap >= beta1 {
        Action::Buy
    } else if gap <= beta2 {
        Action::Short
    } else {
        Action::Abstain
    }
}

fn forecast_action(v_pred: f64, v_now: f64, eta: f64) -> Action {
    if v_pred >= v_now + eta {
        Action::Buy
    } else if v_pred < v_now - eta {
        Action::Short
    } else {
        Action::Abstain
    }
}

/// Trade on the volatility gap alone.
pub fn ideal_signal(vols: VolPair, params: &StrategyParams) -> StrategySignal {
    let action = ideal_action(vols.sigma - vols.sigma_hat, params.beta1, params.beta2);
    let threshold_used = match action {
        Action::Short => params.beta2,
        _ => params.beta1,
    };
    StrategySignal {
        action,
        v_pred: vols.sigma,
        v_now: vols.sigma_hat,
        threshold_used,
        rule: Rule::Ideal {
            beta1: params.beta1,
            beta2: params.beta2,
        },
    }
}

/// Trade on a forecast price: buy at `v_pred >= v_now + eta`, short at
/// `v_pred < v_now - eta`, otherwise stay out.
pub fn nonideal_signal(v_pred: f64, v_now: f64, eta: f64) -> StrategySignal {
    StrategySignal {
        action: forecast_action(v_pred, v_now, eta),
        v_pred,
        v_now,
        threshold_used: eta,
        rule: Rule::Forecast { eta },
    }
}

/// 1 when the forecast called a rise and the price did not fall.
pub fn indicator_xi_bar(v_pred_next: f64, v_now: f64, v_true_next: f64) -> u8 {
    u8::from(v_pred_next >= v_now && v_true_next >= v_now)
}

/// Binary trade outcomes in window order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct TradeOutcomeSeq {
    xi: Vec<u8>,
}

impl TradeOutcomeSeq {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_indicators(xi: Vec<u8>) -> Result<Self> {
        if let Some(j) = xi.iter().position(|&x| x > 1) {
            return Err(Error::Index {
                index: j,
                reason: format!("indicator {} is not 0 or 1", xi[j]),
            });
        }
        Ok(Self { xi })
    }

    pub fn push(&mut self, outcome: bool) {
        self.xi.push(u8::from(outcome));
    }

    pub fn len(&self) -> usize {
        self.xi.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xi.is_empty()
    }

    pub fn indicators(&self) -> &[u8] {
        &self.xi
    }

    pub fn successes(&self) -> usize {
        self.xi.iter().map(|&x| x as usize).sum()
    }
}

/// Success frequency of a trade sequence.
pub fn zeta_bar(outcomes: &TradeOutcomeSeq) -> Result<f64> {
    if outcomes.is_empty() {
        return Err(Error::EmptySeries);
    }
    Ok(outcomes.successes() as f64 / outcomes.len() as f64)
}

/// Confusion-matrix metrics with "price rises" as the positive class.
/// Ratios with a zero denominator are `None`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    /// Mean `|truth - forecast| / truth` in percent over traded windows.
    pub error_pct: Option<f64>,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
    pub abstained: usize,
}

fn ratio(num: usize, den: usize) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

/// Scores signals against the realised next-day prices.
pub fn compute_metrics(signals: &[StrategySignal], truths: &[f64]) -> Result<Metrics> {
    if signals.len() != truths.len() {
        return Err(Error::Shape {
            expected: signals.len(),
            actual: truths.len(),
        });
    }
    let mut m = Metrics::default();
    let mut err_sum = 0.0;
    for (sig, &truth) in signals.iter().zip(truths) {
        let rose = truth >= sig.v_now;
        match (sig.action, rose) {
            (Action::Abstain, _) => {
                m.abstained += 1;
                continue;
            }
            (Action::Buy, true) => m.tp += 1,
            (Action::Buy, false) => m.fp += 1,
            (Action::Short, false) => m.tn += 1,
            (Action::Short, true) => m.fn_ += 1,
        }
        err_sum += (truth - sig.v_pred).abs() / truth;
    }
    let traded = m.tp + m.fp + m.tn + m.fn_;
    m.accuracy = ratio(m.tp + m.tn, traded);
    m.precision = ratio(m.tp, m.tp + m.fp);
    m.recall = ratio(m.tp, m.tp + m.fn_);
    m.error_pct = (traded > 0).then(|| 100.0 * err_sum / traded as f64);
    Ok(m)
}
