use crate::error::{Error, Result};
use crate::market_sim::{build_market_series, simulate_gbm_path, MarketSeries, SimConfig};
use crate::pricing::{VolPair, ONE_DAY};
use crate::prob_strategy::{trade_win_probability, zeta_bar, zeta_dispersion, Metrics};
use crate::qrm::SolverConfig;

use super::backtest::{run_backtest, BacktestConfig, WindowRecord, HISTORY_DAYS, LOOKAHEAD_DAYS};

/// `lo, lo + step, ..` up to `hi` inclusive, rounded to 10 decimals so
/// that decimal steps give clean values.
pub fn value_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::domain("grid step", step));
    }
    if !lo.is_finite() || !hi.is_finite() || hi < lo {
        return Err(Error::Config(format!("empty grid {lo}:{hi}:{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count)
        .map(|i| ((lo + i as f64 * step) * 1e10).round() / 1e10)
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepConfig {
    /// True stock volatility.
    pub sigma: f64,
    pub sigma_hat_grid: Vec<f64>,
    pub n_windows: usize,
    pub seed: u64,
    pub solver: SolverConfig,
    /// Path and quote parameters; `sigma`, `seed` and `n_days` are taken
    /// from the fields above.
    pub sim: SimConfig,
    pub eta: f64,
    pub n_x: usize,
    pub n_t: usize,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            sigma: 0.2,
            sigma_hat_grid: value_grid(0.05, 0.38, 0.01).expect("static grid"),
            n_windows: 2000,
            seed: 42,
            solver: SolverConfig::default(),
            sim: SimConfig::default(),
            eta: 0.0,
            n_x: 100,
            n_t: 100,
        }
    }
}

impl SweepConfig {
    /// The simulation actually run.
    pub fn effective_sim(&self) -> SimConfig {
        SimConfig {
            sigma: self.sigma,
            seed: self.seed,
            n_days: self.n_windows + HISTORY_DAYS + LOOKAHEAD_DAYS,
            ..self.sim.clone()
        }
    }

    pub fn backtest(&self) -> BacktestConfig {
        BacktestConfig {
            solver: self.solver,
            n_x: self.n_x,
            n_t: self.n_t,
            eta: self.eta,
            n_windows: Some(self.n_windows),
            constant_sigma: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sigma_hat_grid.is_empty() {
            return Err(Error::Config("sigma_hat grid is empty".into()));
        }
        if let Some(&s) = self
            .sigma_hat_grid
            .iter()
            .find(|s| !(**s > 0.0) || !s.is_finite())
        {
            return Err(Error::domain("sigma_hat", s));
        }
        if self.n_windows == 0 {
            return Err(Error::Config("n_windows must be positive".into()));
        }
        self.effective_sim().validate()?;
        self.backtest().validate()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma_hat: f64,
    /// `None` if no window could be scored.
    pub zeta_bar: Option<f64>,
    /// Closed-form probability of a profitable one-day trade.
    pub p: f64,
    pub corridor_lo: f64,
    pub corridor_hi: f64,
    pub windows_used: usize,
    pub windows_skipped: usize,
    pub metrics: Metrics,
    /// Set when the whole row failed.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub sigma: f64,
    pub seed: u64,
    pub n_windows: usize,
    pub rows: Vec<SweepRow>,
    /// Daily stock mid prices shared by every row.
    pub path: Vec<f64>,
    /// Quotes and forecasts of the row whose `sigma_hat` is closest to
    /// `sigma`, kept for plotting.
    pub sample: Option<(MarketSeries, Vec<WindowRecord>)>,
}

impl SweepResult {
    pub fn max_zeta_bar(&self) -> Option<f64> {
        self.rows.iter().filter_map(|r| r.zeta_bar).reduce(f64::max)
    }
}

fn corridor(p: f64, n: usize) -> (f64, f64) {
    let d = if n == 0 {
        0.0
    } else {
        zeta_dispersion(p, n).unwrap_or(0.0)
    };
    (p - d.sqrt(), p + d.sqrt())
}

/// Backtests every `sigma_hat` on one simulated stock path.
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    let sim = cfg.effective_sim();
    let path = simulate_gbm_path(&sim)?;
    let bt = cfg.backtest();

    let mut grid = cfg.sigma_hat_grid.clone();
    grid.sort_by(f64::total_cmp);
    let sample_at = grid
        .iter()
        .enumerate()
        .min_by(|a, b| (a.1 - cfg.sigma).abs().total_cmp(&(b.1 - cfg.sigma).abs()))
        .map(|(i, _)| i);

    let mut rows = Vec::with_capacity(grid.len());
    let mut sample = None;
    for (i, &sigma_hat) in grid.iter().enumerate() {
        let p = trade_win_probability(VolPair::new(cfg.sigma, sigma_hat)?, ONE_DAY)?;
        let outcome = build_market_series(&path, sigma_hat, &sim)
            .and_then(|series| run_backtest(&series, sigma_hat, &bt).map(|r| (series, r)));
        let row = match outcome {
            Ok((series, res)) => {
                let used = res.windows_used();
                let (lo, hi) = corridor(p, used);
                let row = SweepRow {
                    sigma_hat,
                    zeta_bar: zeta_bar(&res.outcomes).ok(),
                    p,
                    corridor_lo: lo,
                    corridor_hi: hi,
                    windows_used: used,
                    windows_skipped: res.windows_skipped(),
                    metrics: res.metrics,
                    error: None,
                };
                if Some(i) == sample_at {
                    sample = Some((series, res.records));
                }
                row
            }
            Err(e) => SweepRow {
                sigma_hat,
                zeta_bar: None,
                p,
                corridor_lo: p,
                corridor_hi: p,
                windows_used: 0,
                windows_skipped: cfg.n_windows,
                metrics: Metrics::default(),
                error: Some(e.to_string()),
            },
        };
        rows.push(row);
    }
    Ok(SweepResult {
        sigma: cfg.sigma,
        seed: cfg.seed,
        n_windows: cfg.n_windows,
        rows,
        path,
        sample,
    })
}
