use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interp::{extrapolate_window, Degeneracy, WindowFit};
use crate::market_sim::MarketSeries;
use crate::prob_strategy::{
    compute_metrics, indicator_xi_bar, nonideal_signal, Action, Metrics, StrategySignal,
    TradeOutcomeSeq,
};
use crate::qrm::{
    normal_factor, predict_next_day, qrm_solve_with, to_dimensionless, BandedCholesky,
    DimensionlessProblem, Grid, Preconditioner, SolverConfig,
};

/// Days of history before and days of quotes after "today" that a window
/// needs.
pub const HISTORY_DAYS: usize = 2;
pub const LOOKAHEAD_DAYS: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BacktestConfig {
    pub solver: SolverConfig,
    pub n_x: usize,
    pub n_t: usize,
    /// Threshold of the forecast-driven trading rule.
    pub eta: f64,
    /// `None` uses every window the series allows.
    pub n_windows: Option<usize>,
    /// Solve with `sigma(t) = sigma_hat` instead of the fitted volatility.
    pub constant_sigma: bool,
}

impl Default for BacktestConfig {
    fn default() -> Self {
        Self {
            solver: SolverConfig::default(),
            n_x: 100,
            n_t: 100,
            eta: 0.0,
            n_windows: None,
            constant_sigma: true,
        }
    }
}

impl BacktestConfig {
    pub fn grid(&self) -> Result<Grid> {
        Grid::two_day(self.n_x, self.n_t)
    }

    pub fn validate(&self) -> Result<()> {
        self.solver.validate()?;
        self.grid()?;
        if !(self.eta >= 0.0) || !self.eta.is_finite() {
            return Err(Error::domain("eta", self.eta));
        }
        if self.n_windows == Some(0) {
            return Err(Error::Config("n_windows must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum WindowStatus {
    Used,
    /// The option was reissued inside the window.
    Rollover,
    Degenerate(Degeneracy),
    NotConverged,
    SolverFailed(String),
}

impl WindowStatus {
    pub fn label(&self) -> String {
        match self {
            WindowStatus::Used => "used".into(),
            WindowStatus::Rollover => "rollover".into(),
            WindowStatus::Degenerate(Degeneracy::CrossedQuotes) => "crossed_quotes".into(),
            WindowStatus::Degenerate(Degeneracy::NonPositiveVolatility) => {
                "nonpositive_volatility".into()
            }
            WindowStatus::NotConverged => "not_converged".into(),
            WindowStatus::SolverFailed(e) => format!("solver_failed: {e}"),
        }
    }
}

/// One forecast window.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowRecord {
    /// "Today" in series rows.
    pub day: usize,
    pub status: WindowStatus,
    /// Option mid today.
    pub v_now: f64,
    /// Option mid the next day.
    pub v_true_next: f64,
    pub v_pred: Option<f64>,
    pub xi_bar: Option<u8>,
    pub signal: Option<StrategySignal>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BacktestResult {
    pub sigma_hat: f64,
    pub outcomes: TradeOutcomeSeq,
    pub metrics: Metrics,
    pub records: Vec<WindowRecord>,
}

impl BacktestResult {
    pub fn windows_used(&self) -> usize {
        self.outcomes.len()
    }

    pub fn windows_skipped(&self) -> usize {
        self.records.len() - self.outcomes.len()
    }
}

/// Windows a series of `len` days supports.
pub fn max_windows(len: usize) -> usize {
    len.saturating_sub(HISTORY_DAYS + LOOKAHEAD_DAYS)
}

enum Prepared {
    Ready(Box<DimensionlessProblem>, f64, f64),
    Skipped(WindowStatus),
}

fn prepare(
    series: &MarketSeries,
    j: usize,
    sigma_hat: f64,
    grid: Grid,
    cfg: &BacktestConfig,
) -> Prepared {
    if !series.same_contract(j - HISTORY_DAYS, j + LOOKAHEAD_DAYS) {
        return Prepared::Skipped(WindowStatus::Rollover);
    }
    let window = match extrapolate_window(series, j) {
        Ok(WindowFit::Ready(w)) => w,
        Ok(WindowFit::Degenerate { reason, .. }) => {
            return Prepared::Skipped(WindowStatus::Degenerate(reason))
        }
        Err(e) => return Prepared::Skipped(WindowStatus::SolverFailed(e.to_string())),
    };
    let window = if cfg.constant_sigma {
        window.with_constant_sigma(sigma_hat)
    } else {
        window
    };
    let (s_b, s_a) = (window.stock_bid, window.stock_ask);
    match to_dimensionless(&window, s_b, s_a, grid) {
        Ok(p) => Prepared::Ready(Box::new(p), s_b, s_a),
        Err(e) => Prepared::Skipped(WindowStatus::SolverFailed(e.to_string())),
    }
}

fn solve_window(
    prepared: Prepared,
    series: &MarketSeries,
    j: usize,
    cfg: &BacktestConfig,
    factor: Option<&BandedCholesky>,
) -> WindowRecord {
    let mut rec = WindowRecord {
        day: j,
        status: WindowStatus::Used,
        v_now: series.option_mid(j),
        v_true_next: series.option_mid(j + 1),
        v_pred: None,
        xi_bar: None,
        signal: None,
        iterations: 0,
    };
    let (prob, s_b, s_a) = match prepared {
        Prepared::Ready(p, b, a) => (p, b, a),
        Prepared::Skipped(status) => {
            rec.status = status;
            return rec;
        }
    };
    let sol = match qrm_solve_with(&prob, &cfg.solver, factor) {
        Ok(s) => s,
        Err(e) => {
            rec.status = WindowStatus::SolverFailed(e.to_string());
            return rec;
        }
    };
    rec.iterations = sol.iterations;
    if !sol.converged {
        rec.status = WindowStatus::NotConverged;
        return rec;
    }
    let v_pred = match predict_next_day(&sol, s_b, s_a) {
        Ok(v) => v,
        Err(e) => {
            rec.status = WindowStatus::SolverFailed(e.to_string());
            return rec;
        }
    };
    rec.v_pred = Some(v_pred);
    rec.xi_bar = Some(indicator_xi_bar(v_pred, rec.v_now, rec.v_true_next));
    rec.signal = Some(nonideal_signal(v_pred, rec.v_now, cfg.eta));
    rec
}

/// Forecasts the next-day option price for consecutive windows starting at
/// day 2 and scores each forecast.
///
/// Windows are skipped, never fatal, when the option is reissued between
/// two days before and two days after "today", when the extrapolated quotes
/// are degenerate, or when the solver fails or does not converge.
pub fn run_backtest(
    series: &MarketSeries,
    sigma_hat: f64,
    cfg: &BacktestConfig,
) -> Result<BacktestResult> {
    cfg.validate()?;
    if !(sigma_hat > 0.0) || !sigma_hat.is_finite() {
        return Err(Error::domain("sigma_hat", sigma_hat));
    }
    series.validate()?;
    let available = max_windows(series.len());
    let n_windows = cfg.n_windows.unwrap_or(available);
    if n_windows == 0 || n_windows > available {
        return Err(Error::Config(format!(
            "{n_windows} windows requested but a series of {} days supports {available}",
            series.len()
        )));
    }
    let grid = cfg.grid()?;
    let days: Vec<usize> = (HISTORY_DAYS..HISTORY_DAYS + n_windows).collect();
    let prepared: Vec<Prepared> = days
        .par_iter()
        .map(|&j| prepare(series, j, sigma_hat, grid, cfg))
        .collect();

    // At fixed spread and volatility every window has the same operator,
    // so one factorisation preconditions them all.
    let factor = if cfg.solver.preconditioner == Preconditioner::Cholesky {
        prepared.iter().find_map(|p| match p {
            Prepared::Ready(prob, ..) => normal_factor(prob, cfg.solver.alpha).ok(),
            Prepared::Skipped(_) => None,
        })
    } else {
        None
    };

    let records: Vec<WindowRecord> = prepared
        .into_par_iter()
        .zip(days.par_iter())
        .map(|(p, &j)| solve_window(p, series, j, cfg, factor.as_ref()))
        .collect();

    let mut outcomes = TradeOutcomeSeq::new();
    let mut signals = Vec::new();
    let mut truths = Vec::new();
    for rec in &records {
        if let (Some(xi), Some(sig)) = (rec.xi_bar, rec.signal) {
            outcomes.push(xi == 1);
            signals.push(sig);
            truths.push(rec.v_true_next);
        }
    }
    let metrics = compute_metrics(&signals, &truths)?;
    Ok(BacktestResult {
        sigma_hat,
        outcomes,
        metrics,
        records,
    })
}

/// Buy/short/abstain counts of the used windows.
pub fn action_counts(records: &[WindowRecord]) -> [usize; 3] {
    let mut c = [0; 3];
    for sig in records.iter().filter_map(|r| r.signal) {
        c[match sig.action {
            Action::Buy => 0,
            Action::Short => 1,
            Action::Abstain => 2,
        }] += 1;
    }
    c
}
