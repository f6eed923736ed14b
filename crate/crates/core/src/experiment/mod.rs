//! Backtests, the implied-volatility sweep, the noisy-data convergence study
//! and their CSV/SVG reports.

mod backtest;
mod report;
mod study;
mod svg;
mod sweep;

pub use backtest::{
    action_counts, max_windows, run_backtest, BacktestConfig, BacktestResult, WindowRecord,
    WindowStatus, HISTORY_DAYS, LOOKAHEAD_DAYS,
};
pub use report::{
    convergence_csv, emit_report, option_csv, path_csv, sweep_csv, write_run_meta, Report, RunMeta,
};
pub use study::{
    boundary_noise, convergence_study, h1_norm_sq, rate_factor, StudyConfig, StudyRow, StudyTable,
};
pub use svg::{Curve, Plot};
pub use sweep::{run_sweep, value_grid, SweepConfig, SweepResult, SweepRow};
