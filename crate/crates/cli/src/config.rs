//! Config file: TOML with one table per pipeline stage.
//!
//! ```toml
//! seed = 42
//!
//! [sim]
//! sigma = 0.2
//!
//! [solver]
//! alpha = 0.01
//! grid = "100:100"
//!
//! [sweep]
//! sigma_hat_grid = "0.05:0.38:0.01"
//! windows = 2000
//! ```

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub out: Option<String>,
    #[serde(default)]
    pub sim: SimSection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub backtest: BacktestSection,
    #[serde(default)]
    pub sweep: SweepSection,
    #[serde(default)]
    pub study: StudySection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSection {
    pub sigma: Option<f64>,
    pub sigma_hat: Option<f64>,
    pub s0: Option<f64>,
    pub days: Option<usize>,
    pub maturity_days: Option<usize>,
    pub strike: Option<f64>,
    pub spread: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub alpha: Option<f64>,
    pub grid: Option<String>,
    pub grad_tol: Option<f64>,
    pub max_iters: Option<usize>,
    pub preconditioner: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BacktestSection {
    pub windows: Option<usize>,
    pub eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub sigma_hat_grid: Option<String>,
    pub windows: Option<usize>,
    pub eta: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudySection {
    pub delta_grid: Option<Vec<f64>>,
    pub rho: Option<f64>,
    pub grid: Option<String>,
    pub baseline_alpha: Option<f64>,
    pub floor_factor: Option<f64>,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    parse(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

pub fn parse(text: &str) -> Result<FileConfig, String> {
    toml::from_str(text).map_err(|e| e.to_string())
}

/// `"nx:nt"`.
pub fn parse_grid(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::Config(format!("grid must be `nx:nt`, got `{s}`"));
    let (a, b) = s.split_once(':').ok_or_else(bad)?;
    let nx = a.trim().parse().map_err(|_| bad())?;
    let nt = b.trim().parse().map_err(|_| bad())?;
    Ok((nx, nt))
}

/// `"lo:hi:step"`.
pub fn parse_range(s: &str) -> Result<(f64, f64, f64), CliError> {
    let bad = || CliError::Config(format!("range must be `lo:hi:step`, got `{s}`"));
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts
        .iter()
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_, _>>()?;
    Ok((v[0], v[1], v[2]))
}

/// `"0,0.1,0.01"`.
pub fn parse_list(s: &str) -> Result<Vec<f64>, CliError> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::Config(format!("bad number `{p}` in `{s}`")))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sections_parse() {
        let cfg = parse(
            "seed = 7\n[sim]\nsigma = 0.25\n[solver]\ngrid = \"40:40\"\n[study]\ndelta_grid = [0.0, 0.1]\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, Some(7));
        assert_eq!(cfg.sim.sigma, Some(0.25));
        assert_eq!(cfg.solver.grid.as_deref(), Some("40:40"));
        assert_eq!(cfg.study.delta_grid, Some(vec![0.0, 0.1]));
        assert!(cfg.sweep.windows.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(parse("[sim]\nsigmaa = 0.2\n").is_err());
        assert!(parse("[nope]\n").is_err());
    }

    #[test]
    fn value_syntax() {
        assert_eq!(parse_grid("100:50").unwrap(), (100, 50));
        assert!(parse_grid("100").is_err());
        assert_eq!(parse_range("0.05:0.38:0.01").unwrap(), (0.05, 0.38, 0.01));
        assert!(parse_range("0.05:0.38").is_err());
        assert_eq!(parse_list("0, 1e-2").unwrap(), vec![0.0, 0.01]);
        assert!(parse_list("0,x").is_err());
    }
}
