//! Option price forecasting by quasi-reversibility, with GBM market
//! simulation and strategy backtests.

#![allow(clippy::neg_cmp_op_on_partial_ord)] // NaN must fail the range checks

pub mod error;
pub mod experiment;
pub mod interp;
pub mod market_sim;
pub mod pricing;
pub mod prob_strategy;
pub mod qrm;

pub use error::{Error, Result};
