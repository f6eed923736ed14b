use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::pricing::ONE_DAY;

use super::study::StudyTable;
use super::svg::{Curve, Plot};
use super::sweep::SweepResult;

pub enum Report<'a> {
    Sweep(&'a SweepResult),
    Study(&'a StudyTable),
}

/// Ordered `key = value` pairs written to `run_meta.toml`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunMeta {
    entries: Vec<(String, String)>,
}

impl RunMeta {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, key: impl Into<String>, value: impl ToString) -> &mut Self {
        self.entries.push((key.into(), value.to_string()));
        self
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    /// TOML text; values that do not parse as numbers or booleans are
    /// quoted.
    pub fn to_toml(&self) -> String {
        let mut s = String::new();
        for (k, v) in &self.entries {
            let bare = v.parse::<f64>().is_ok() || v == "true" || v == "false";
            if bare {
                let _ = writeln!(s, "{k} = {v}");
            } else {
                let _ = writeln!(s, "{k} = {v:?}");
            }
        }
        s
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), num)
}

fn write_file(dir: &Path, name: &str, text: &str, written: &mut Vec<PathBuf>) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

pub fn sweep_csv(res: &SweepResult) -> String {
    let mut s = String::from(
        "sigma_hat,zeta_bar,p,lo,hi,n_used,n_skipped,accuracy,precision,recall,error_pct\n",
    );
    for r in &res.rows {
        let m = &r.metrics;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{}",
            num(r.sigma_hat),
            opt(r.zeta_bar),
            num(r.p),
            num(r.corridor_lo),
            num(r.corridor_hi),
            r.windows_used,
            r.windows_skipped,
            opt(m.accuracy),
            opt(m.precision),
            opt(m.recall),
            opt(m.error_pct)
        );
    }
    s
}

pub fn path_csv(res: &SweepResult) -> String {
    let mut s = String::from("day,t,s\n");
    for (k, v) in res.path.iter().enumerate() {
        let _ = writeln!(s, "{k},{},{}", num(k as f64 * ONE_DAY), num(*v));
    }
    s
}

pub fn option_csv(res: &SweepResult) -> String {
    let mut s = String::from("day,t,sigma_hat,v_bid,v_ask,v_mid,v_pred,status\n");
    let Some((series, records)) = &res.sample else {
        return s;
    };
    let mut by_day = vec![None; series.len()];
    for rec in records {
        // the forecast made on `day` is for the following day
        if rec.day + 1 < by_day.len() {
            by_day[rec.day + 1] = Some(rec);
        }
    }
    for (k, rec) in by_day.iter().enumerate() {
        let (pred, status) = match rec {
            Some(r) => (opt(r.v_pred), r.status.label()),
            None => (String::new(), String::new()),
        };
        let _ = writeln!(
            s,
            "{k},{},{},{},{},{},{pred},{status}",
            num(series.times[k]),
            num(series.sigma_hat[k]),
            num(series.option_bid[k]),
            num(series.option_ask[k]),
            num(series.option_mid(k))
        );
    }
    s
}

pub fn convergence_csv(table: &StudyTable) -> String {
    let mut s = String::from("delta,alpha,error,rate,ratio,above_floor,converged,iterations\n");
    for r in &table.rows {
        let above = r.delta > 0.0 && !table.in_floor(r.error);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{above},{},{}",
            num(r.delta),
            num(r.alpha),
            num(r.error),
            opt(r.rate),
            opt(r.ratio),
            r.converged,
            r.iterations
        );
    }
    s
}

fn sweep_plot(res: &SweepResult) -> Plot {
    let pts = |f: &dyn Fn(&super::sweep::SweepRow) -> Option<f64>| {
        res.rows
            .iter()
            .filter_map(|r| f(r).map(|v| (r.sigma_hat, v)))
            .collect::<Vec<_>>()
    };
    Plot {
        title: format!("Frequency of profitable forecasts, sigma = {}", res.sigma),
        x_label: "sigma_hat".into(),
        y_label: "probability".into(),
        curves: vec![
            Curve::new("zeta_bar", pts(&|r| r.zeta_bar), "black").bold(),
            Curve::new("p", pts(&|r| Some(r.p)), "#1f5fbf"),
            Curve::new("p - sqrt(D)", pts(&|r| Some(r.corridor_lo)), "#1f5fbf").dashed(),
            Curve::new("p + sqrt(D)", pts(&|r| Some(r.corridor_hi)), "#1f5fbf").dashed(),
        ],
        vlines: vec![res.sigma],
    }
}

fn path_plot(res: &SweepResult) -> Plot {
    let pts = res
        .path
        .iter()
        .enumerate()
        .map(|(k, &s)| (k as f64 * ONE_DAY, s))
        .collect();
    Plot {
        title: "Simulated stock price".into(),
        x_label: "t (years)".into(),
        y_label: "s".into(),
        curves: vec![Curve::new("s", pts, "black")],
        vlines: vec![],
    }
}

fn option_plot(res: &SweepResult) -> Plot {
    let mut curves = Vec::new();
    let mut title = "Option price".to_string();
    if let Some((series, records)) = &res.sample {
        title = format!("Option price, sigma_hat = {}", series.sigma_hat[0]);
        let mid = (0..series.len())
            .map(|k| (series.times[k], series.option_mid(k)))
            .collect();
        let pred = records
            .iter()
            .filter(|r| r.day + 1 < series.len())
            .filter_map(|r| r.v_pred.map(|v| (series.times[r.day + 1], v)))
            .collect();
        curves.push(Curve::new("mid", mid, "black"));
        curves.push(Curve::new("forecast", pred, "#c0392b").dashed());
    }
    Plot {
        title,
        x_label: "t (years)".into(),
        y_label: "v".into(),
        curves,
        vlines: vec![],
    }
}

/// Writes the CSV tables, SVG charts and `run_meta.toml` of a run into
/// `out_dir`, creating it if needed. Returns the written paths.
pub fn emit_report(report: Report<'_>, out_dir: &Path, meta: &RunMeta) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    match report {
        Report::Sweep(res) => {
            write_file(out_dir, "sweep.csv", &sweep_csv(res), &mut written)?;
            write_file(
                out_dir,
                "sweep.svg",
                &sweep_plot(res).render(),
                &mut written,
            )?;
            write_file(out_dir, "path.csv", &path_csv(res), &mut written)?;
            write_file(out_dir, "path.svg", &path_plot(res).render(), &mut written)?;
            write_file(out_dir, "option.csv", &option_csv(res), &mut written)?;
            write_file(
                out_dir,
                "option.svg",
                &option_plot(res).render(),
                &mut written,
            )?;
        }
        Report::Study(table) => {
            write_file(
                out_dir,
                "convergence.csv",
                &convergence_csv(table),
                &mut written,
            )?;
        }
    }
    written.push(write_run_meta(out_dir, meta)?);
    Ok(written)
}

/// Writes `run_meta.toml` into an existing directory: library version and
/// RNG identifier followed by `meta`.
pub fn write_run_meta(out_dir: &Path, meta: &RunMeta) -> Result<PathBuf> {
    let mut full = RunMeta::new();
    full.push("version", env!("CARGO_PKG_VERSION"));
    full.push("rng", crate::market_sim::RNG_ID);
    full.entries.extend(meta.entries.iter().cloned());
    let mut written = Vec::new();
    write_file(out_dir, "run_meta.toml", &full.to_toml(), &mut written)?;
    Ok(written.remove(0))
}
