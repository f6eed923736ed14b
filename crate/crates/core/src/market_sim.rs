//! Synthetic market generation and the on-disk series format.
//!
//! A stock path follows `ds = sigma s dW`, stepped exactly in log space.
//! Option quotes come from the Black-Scholes price of a call that is
//! reissued with a fresh 90-day maturity each time the previous one expires.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::pricing::{bs_call_price, OptionSpec, ONE_DAY};

/// Identifier of the random stream recorded in run metadata.
pub const RNG_ID: &str = "rand_chacha::ChaCha8Rng(seed_from_u64) + rand_distr::StandardNormal";

pub const CSV_HEADER: &str = "day_index,t,s_bid,s_ask,v_bid,v_ask,sigma_hat";

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub s0: f64,
    pub sigma: f64,
    pub n_days: usize,
    pub maturity_days: usize,
    pub strike: f64,
    /// Half-width of the bid/ask band as a fraction of the mid.
    pub spread: f64,
    pub seed: u64,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self {
            s0: 100.0,
            sigma: 0.2,
            // 2000 forecast windows need two days of history and two ahead
            n_days: 2004,
            maturity_days: 90,
            strike: 100.0,
            spread: 0.01,
            seed: 42,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.validate_path_params()?;
        if !(self.sigma > 0.0) {
            return Err(Error::domain("sigma", self.sigma));
        }
        if !(self.strike > 0.0) || !self.strike.is_finite() {
            return Err(Error::domain("strike", self.strike));
        }
        if !(0.0..1.0).contains(&self.spread) {
            return Err(Error::domain("spread", self.spread));
        }
        if self.maturity_days <= 2 {
            return Err(Error::Config(format!(
                "maturity_days must exceed 2, got {}",
                self.maturity_days
            )));
        }
        Ok(())
    }

    // sigma = 0 is accepted here so the noiseless path can be tested
    fn validate_path_params(&self) -> Result<()> {
        if !(self.s0 > 0.0) || !self.s0.is_finite() {
            return Err(Error::domain("s0", self.s0));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(Error::domain("sigma", self.sigma));
        }
        if self.n_days < 5 {
            return Err(Error::Config(format!(
                "n_days must be at least 5, got {}",
                self.n_days
            )));
        }
        Ok(())
    }

    /// Time to maturity of the live option on day `k`, in `(0, maturity]`.
    pub fn tau(&self, k: usize) -> f64 {
        (self.maturity_days - k % self.maturity_days) as f64 * ONE_DAY
    }

    /// Index of the reissued contract that is live on day `k`.
    pub fn contract(&self, k: usize) -> u32 {
        (k / self.maturity_days) as u32
    }
}

/// Daily stock prices `s(t_0) .. s(t_{n-1})` with `s(t_0) = s0`.
pub fn simulate_gbm_path(cfg: &SimConfig) -> Result<Vec<f64>> {
    cfg.validate_path_params()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let drift = -0.5 * cfg.sigma * cfg.sigma * ONE_DAY;
    let diffusion = cfg.sigma * ONE_DAY.sqrt();
    let mut path = Vec::with_capacity(cfg.n_days);
    let mut s = cfg.s0;
    path.push(s);
    for _ in 1..cfg.n_days {
        let z: f64 = StandardNormal.sample(&mut rng);
        s *= (drift + diffusion * z).exp();
        path.push(s);
    }
    Ok(path)
}

/// Daily bid/ask quotes for the stock and its option plus the option's
/// implied volatility.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MarketSeries {
    pub day_index: Vec<u64>,
    /// Time in trading years.
    pub times: Vec<f64>,
    pub stock_bid: Vec<f64>,
    pub stock_ask: Vec<f64>,
    pub option_bid: Vec<f64>,
    pub option_ask: Vec<f64>,
    pub sigma_hat: Vec<f64>,
    /// Live contract per day for synthetic series; `None` when loaded from
    /// disk, where the whole file is treated as one contract.
    pub contract: Option<Vec<u32>>,
}

impl MarketSeries {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn stock_mid(&self, k: usize) -> f64 {
        0.5 * (self.stock_bid[k] + self.stock_ask[k])
    }

    pub fn option_mid(&self, k: usize) -> f64 {
        0.5 * (self.option_bid[k] + self.option_ask[k])
    }

    /// True when days `from..=to` all quote the same contract.
    pub fn same_contract(&self, from: usize, to: usize) -> bool {
        match &self.contract {
            Some(c) => c[from..=to].iter().all(|&id| id == c[from]),
            None => true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.len();
        if n == 0 {
            return Err(Error::EmptySeries);
        }
        let cols = [
            self.day_index.len(),
            self.stock_bid.len(),
            self.stock_ask.len(),
            self.option_bid.len(),
            self.option_ask.len(),
            self.sigma_hat.len(),
        ];
        if let Some(&bad) = cols.iter().find(|&&c| c != n) {
            return Err(Error::Shape {
                expected: n,
                actual: bad,
            });
        }
        if let Some(c) = &self.contract {
            if c.len() != n {
                return Err(Error::Shape {
                    expected: n,
                    actual: c.len(),
                });
            }
        }
        for k in 0..n {
            self.validate_row(k, k)?;
            if k > 0 {
                let step = self.times[k] - self.times[k - 1];
                if (step - ONE_DAY).abs() > 1e-9 {
                    return Err(Error::Validation {
                        row: k,
                        reason: format!("time step {step} is not one trading day"),
                    });
                }
            }
        }
        Ok(())
    }

    fn validate_row(&self, k: usize, row: usize) -> Result<()> {
        let fail = |reason: String| Err(Error::Validation { row, reason });
        let (sb, sa) = (self.stock_bid[k], self.stock_ask[k]);
        let (vb, va) = (self.option_bid[k], self.option_ask[k]);
        if !(sb > 0.0) || !sa.is_finite() {
            return fail(format!(
                "stock quotes must be positive and finite ({sb}, {sa})"
            ));
        }
        if sb >= sa {
            return fail(format!("stock bid {sb} >= ask {sa}"));
        }
        if !(vb >= 0.0) || !va.is_finite() {
            return fail(format!(
                "option quotes must be nonnegative and finite ({vb}, {va})"
            ));
        }
        if vb >= va {
            return fail(format!("option bid {vb} >= ask {va}"));
        }
        if !(self.sigma_hat[k] > 0.0) || !self.sigma_hat[k].is_finite() {
            return fail(format!("sigma_hat {} must be positive", self.sigma_hat[k]));
        }
        Ok(())
    }
}

/// Quotes for a stock path with options priced at constant `sigma_hat`.
pub fn build_market_series(path: &[f64], sigma_hat: f64, cfg: &SimConfig) -> Result<MarketSeries> {
    if path.is_empty() {
        return Err(Error::EmptySeries);
    }
    if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
        return Err(Error::domain("sigma_hat", sigma_hat));
    }
    if !(0.0..1.0).contains(&cfg.spread) {
        return Err(Error::domain("spread", cfg.spread));
    }
    if cfg.maturity_days <= 2 {
        return Err(Error::Config(format!(
            "maturity_days must exceed 2, got {}",
            cfg.maturity_days
        )));
    }
    let spec = OptionSpec::new(cfg.strike, cfg.maturity_days as f64 * ONE_DAY)?;
    let n = path.len();
    let mut series = MarketSeries {
        day_index: Vec::with_capacity(n),
        times: Vec::with_capacity(n),
        stock_bid: Vec::with_capacity(n),
        stock_ask: Vec::with_capacity(n),
        option_bid: Vec::with_capacity(n),
        option_ask: Vec::with_capacity(n),
        sigma_hat: vec![sigma_hat; n],
        contract: Some((0..n).map(|k| cfg.contract(k)).collect()),
    };
    let (lo, hi) = (1.0 - cfg.spread, 1.0 + cfg.spread);
    for (k, &s) in path.iter().enumerate() {
        let v = bs_call_price(s, cfg.tau(k), &spec, sigma_hat)?;
        series.day_index.push(k as u64);
        series.times.push(k as f64 * ONE_DAY);
        series.stock_bid.push(lo * s);
        series.stock_ask.push(hi * s);
        series.option_bid.push(lo * v);
        series.option_ask.push(hi * v);
    }
    series.validate()?;
    Ok(series)
}

/// 12 significant digits in scientific notation.
pub(crate) fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn series_to_csv(series: &MarketSeries) -> String {
    let mut out = String::with_capacity(series.len() * 120);
    out.push_str(CSV_HEADER);
    out.push('\n');
    for k in 0..series.len() {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            series.day_index[k],
            fmt12(series.times[k]),
            fmt12(series.stock_bid[k]),
            fmt12(series.stock_ask[k]),
            fmt12(series.option_bid[k]),
            fmt12(series.option_ask[k]),
            fmt12(series.sigma_hat[k]),
        );
    }
    out
}

pub fn save_series(series: &MarketSeries, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, series_to_csv(series)).map_err(|e| Error::io(path, e))
}

pub fn load_series(path: impl AsRef<Path>) -> Result<MarketSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_series(&text)
}

/// Parses the CSV text format. `#` lines are comments.
pub fn parse_series(text: &str) -> Result<MarketSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());

    let headers = reader.headers().map_err(|e| Error::Parse {
        line: e.position().map_or(1, |p| p.line()),
        reason: e.to_string(),
    })?;
    let expected: Vec<&str> = CSV_HEADER.split(',').collect();
    if headers.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: 1,
            reason: format!("expected header `{CSV_HEADER}`"),
        });
    }

    let mut series = MarketSeries::default();
    for record in reader.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            reason: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        let field = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|e| Error::Parse {
                line,
                reason: format!("column `{}`: {e}", expected[i]),
            })
        };
        let day = record[0].parse::<u64>().map_err(|e| Error::Parse {
            line,
            reason: format!("column `day_index`: {e}"),
        })?;
        series.day_index.push(day);
        series.times.push(field(1)?);
        series.stock_bid.push(field(2)?);
        series.stock_ask.push(field(3)?);
        series.option_bid.push(field(4)?);
        series.option_ask.push(field(5)?);
        series.sigma_hat.push(field(6)?);
        let k = series.len() - 1;
        series.validate_row(k, line as usize)?;
    }
    if series.is_empty() {
        return Err(Error::EmptySeries);
    }
    series.validate()?;
    Ok(series)
}
