use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use optqrm::experiment::{
    convergence_study, emit_report, run_backtest, run_sweep, value_grid, write_run_meta,
    BacktestConfig, Report, RunMeta, StudyConfig, SweepConfig, WindowRecord,
};
use optqrm::interp::{extrapolate_window, WindowFit};
use optqrm::market_sim::{
    build_market_series, load_series, save_series, simulate_gbm_path, MarketSeries, SimConfig,
};
use optqrm::pricing::{bs_call_price, greek_delta, greek_gamma, OptionSpec, VolPair};
use optqrm::prob_strategy::trade_win_probability;
use optqrm::qrm::{
    predict_next_day, qrm_solve, to_dimensionless, Grid, Preconditioner, SolverConfig,
};

use crate::args::{
    BacktestArgs, Cli, MarketArgs, PriceArgs, SimulateArgs, SolveWindowArgs, SolverArgs, StudyArgs,
    SweepArgs,
};
use crate::config::{parse_grid, parse_list, parse_range, FileConfig};
use crate::CliError;

const DEFAULT_SEED: u64 = 42;
const DEFAULT_SIGMA_HAT: f64 = 0.1;
const DEFAULT_GRID: &str = "100:100";

/// Shared state of one invocation.
pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
    pub out: PathBuf,
    verbosity: i8,
}

impl Ctx {
    pub fn new(cli: &Cli, file: FileConfig) -> Self {
        let seed = cli.seed.or(file.seed).unwrap_or(DEFAULT_SEED);
        let out = cli
            .out
            .clone()
            .or_else(|| file.out.as_ref().map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"));
        let verbosity = if cli.quiet { -1 } else { cli.verbose as i8 };
        Self {
            file,
            seed,
            out,
            verbosity,
        }
    }

    fn info(&self, msg: impl AsRef<str>) {
        if self.verbosity >= 0 {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn debug(&self, msg: impl AsRef<str>) {
        if self.verbosity >= 1 {
            eprintln!("{}", msg.as_ref());
        }
    }

    fn out_dir(&self) -> Result<&Path, CliError> {
        std::fs::create_dir_all(&self.out)
            .map_err(|e| CliError::Runtime(format!("cannot create {}: {e}", self.out.display())))?;
        Ok(&self.out)
    }

    fn meta(&self, command: &str) -> RunMeta {
        let mut m = RunMeta::new();
        m.push("command", command).push("seed", self.seed);
        m
    }

    fn sim(&self, market: &MarketArgs) -> SimConfig {
        let f = &self.file.sim;
        let d = SimConfig::default();
        SimConfig {
            s0: f.s0.unwrap_or(d.s0),
            sigma: market.sigma.or(f.sigma).unwrap_or(d.sigma),
            n_days: market.days.or(f.days).unwrap_or(d.n_days),
            maturity_days: f.maturity_days.unwrap_or(d.maturity_days),
            strike: f.strike.unwrap_or(d.strike),
            spread: f.spread.unwrap_or(d.spread),
            seed: self.seed,
        }
    }

    /// Solver settings and the `nx:nt` grid text they were built from.
    fn solver(&self, args: &SolverArgs) -> Result<(SolverConfig, usize, usize, String), CliError> {
        let f = &self.file.solver;
        let d = SolverConfig::default();
        let grid = args
            .grid
            .clone()
            .or_else(|| f.grid.clone())
            .unwrap_or_else(|| DEFAULT_GRID.into());
        let (n_x, n_t) = parse_grid(&grid)?;
        let preconditioner = match args.preconditioner.as_ref().or(f.preconditioner.as_ref()) {
            Some(s) => Preconditioner::parse(s)?,
            None => d.preconditioner,
        };
        let cfg = SolverConfig {
            alpha: args.alpha.or(f.alpha).unwrap_or(d.alpha),
            max_iters: f.max_iters.or(d.max_iters),
            grad_tol: f.grad_tol.unwrap_or(d.grad_tol),
            preconditioner,
        };
        cfg.validate()?;
        Ok((cfg, n_x, n_t, grid))
    }
}

fn push_sim(m: &mut RunMeta, sim: &SimConfig) {
    m.push("sim.sigma", sim.sigma)
        .push("sim.s0", sim.s0)
        .push("sim.days", sim.n_days)
        .push("sim.maturity_days", sim.maturity_days)
        .push("sim.strike", sim.strike)
        .push("sim.spread", sim.spread);
}

fn push_solver(m: &mut RunMeta, cfg: &SolverConfig, grid: &str) {
    m.push("solver.alpha", cfg.alpha)
        .push("solver.grid", grid)
        .push("solver.grad_tol", cfg.grad_tol)
        .push("solver.preconditioner", cfg.preconditioner.name());
    if let Some(n) = cfg.max_iters {
        m.push("solver.max_iters", n);
    }
}

fn check_input(path: &Path) -> Result<MarketSeries, CliError> {
    if !path.is_file() {
        return Err(CliError::Config(format!(
            "input file {} does not exist",
            path.display()
        )));
    }
    Ok(load_series(path)?)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "NA".into(), |x| format!("{x}"))
}

pub fn simulate(ctx: &Ctx, args: &SimulateArgs) -> Result<(), CliError> {
    let sim = ctx.sim(&args.market);
    sim.validate()?;
    let sigma_hat = args
        .sigma_hat
        .or(ctx.file.sim.sigma_hat)
        .unwrap_or(DEFAULT_SIGMA_HAT);
    let path = simulate_gbm_path(&sim)?;
    let series = build_market_series(&path, sigma_hat, &sim)?;
    let dir = ctx.out_dir()?;
    let file = dir.join("series.csv");
    save_series(&series, &file)?;
    let mut meta = ctx.meta("simulate");
    push_sim(&mut meta, &sim);
    meta.push("sim.sigma_hat", sigma_hat);
    write_run_meta(dir, &meta)?;
    let last = path.last().copied().unwrap_or(sim.s0);
    println!("{} days, final stock price {last:.4}", series.len());
    ctx.info(format!("wrote {}", file.display()));
    Ok(())
}

pub fn price(args: &PriceArgs) -> Result<(), CliError> {
    let spec = OptionSpec::new(args.strike, args.tau)?;
    let v = bs_call_price(args.s, args.tau, &spec, args.sigma_hat)?;
    let delta = greek_delta(args.s, args.tau, &spec, args.sigma_hat)?;
    let gamma = greek_gamma(args.s, args.tau, &spec, args.sigma_hat)?;
    let p = trade_win_probability(VolPair::new(args.sigma, args.sigma_hat)?, args.eps)?;
    println!("price = {v}");
    println!("delta = {delta}");
    println!("gamma = {gamma}");
    println!("p = {p}");
    Ok(())
}

pub fn solve_window(ctx: &Ctx, args: &SolveWindowArgs) -> Result<(), CliError> {
    let series = check_input(&args.input)?;
    if args.day < 2 || args.day >= series.len() {
        return Err(CliError::Config(format!(
            "--day must be in 2..{} for this series, got {}",
            series.len(),
            args.day
        )));
    }
    let (cfg, n_x, n_t, grid_text) = ctx.solver(&args.solver)?;
    let grid = Grid::two_day(n_x, n_t)?;
    let window = match extrapolate_window(&series, args.day)? {
        WindowFit::Ready(w) => w,
        WindowFit::Degenerate { reason, .. } => {
            return Err(CliError::Runtime(format!(
                "window at day {} is degenerate: {reason:?}",
                args.day
            )))
        }
    };
    let sigma_hat = args.sigma_hat.unwrap_or(series.sigma_hat[args.day]);
    let window = window.with_constant_sigma(sigma_hat);
    let (s_b, s_a) = (window.stock_bid, window.stock_ask);
    let prob = to_dimensionless(&window, s_b, s_a, grid)?;
    let sol = qrm_solve(&prob, &cfg)?;
    let v_pred = predict_next_day(&sol, s_b, s_a)?;

    let dir = ctx.out_dir()?;
    sol.dump(dir.join("solution.csv"))?;
    let mut meta = ctx.meta("solve-window");
    meta.push("input", args.input.display())
        .push("day", args.day)
        .push("sigma_hat", sigma_hat);
    push_solver(&mut meta, &cfg, &grid_text);
    write_run_meta(dir, &meta)?;

    println!("v_now = {}", series.option_mid(args.day));
    println!("v_pred = {v_pred}");
    if args.day + 1 < series.len() {
        println!("v_true_next = {}", series.option_mid(args.day + 1));
    }
    println!(
        "iterations = {}, converged = {}, functional = {:e}",
        sol.iterations, sol.converged, sol.functional_value
    );
    if !sol.converged {
        return Err(CliError::Runtime("solver did not converge".into()));
    }
    Ok(())
}

fn records_csv(records: &[WindowRecord]) -> String {
    let mut s = String::from("day,status,v_now,v_true_next,v_pred,xi_bar,action,iterations\n");
    for r in records {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.day,
            r.status.label(),
            r.v_now,
            r.v_true_next,
            fmt_opt(r.v_pred),
            r.xi_bar.map_or_else(|| "NA".into(), |x| x.to_string()),
            r.signal.map_or("NA", |s| s.action.as_str()),
            r.iterations
        );
    }
    s
}

pub fn backtest(ctx: &Ctx, args: &BacktestArgs) -> Result<(), CliError> {
    let (solver, n_x, n_t, grid_text) = ctx.solver(&args.solver)?;
    let fb = &ctx.file.backtest;
    let windows = args.windows.or(fb.windows);
    let eta = args.eta.or(fb.eta).unwrap_or(0.0);
    let mut meta = ctx.meta("backtest");

    let (series, sigma_hat, sigma) = match &args.input {
        Some(path) => {
            let series = check_input(path)?;
            let sigma_hat = args.sigma_hat.unwrap_or(series.sigma_hat[0]);
            meta.push("input", path.display());
            (series, sigma_hat, None)
        }
        None => {
            let mut sim = ctx.sim(&args.market);
            if let (Some(n), None) = (windows, args.market.days.or(ctx.file.sim.days)) {
                sim.n_days = n + 4;
            }
            sim.validate()?;
            let sigma_hat = args
                .sigma_hat
                .or(ctx.file.sim.sigma_hat)
                .unwrap_or(DEFAULT_SIGMA_HAT);
            push_sim(&mut meta, &sim);
            let path = simulate_gbm_path(&sim)?;
            (
                build_market_series(&path, sigma_hat, &sim)?,
                sigma_hat,
                Some(sim.sigma),
            )
        }
    };
    let cfg = BacktestConfig {
        solver,
        n_x,
        n_t,
        eta,
        n_windows: windows,
        constant_sigma: true,
    };
    cfg.validate()?;
    ctx.debug(format!(
        "backtesting {} days at sigma_hat {sigma_hat}",
        series.len()
    ));
    let res = run_backtest(&series, sigma_hat, &cfg)?;

    let dir = ctx.out_dir()?;
    let file = dir.join("backtest.csv");
    std::fs::write(&file, records_csv(&res.records))
        .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", file.display())))?;
    meta.push("sigma_hat", sigma_hat).push("eta", eta);
    if let Some(n) = windows {
        meta.push("windows", n);
    }
    push_solver(&mut meta, &cfg.solver, &grid_text);
    write_run_meta(dir, &meta)?;

    let zeta = optqrm::prob_strategy::zeta_bar(&res.outcomes).ok();
    println!(
        "windows used {}, skipped {}",
        res.windows_used(),
        res.windows_skipped()
    );
    println!("zeta_bar = {}", fmt_opt(zeta));
    if let Some(sigma) = sigma {
        let p = trade_win_probability(VolPair::new(sigma, sigma_hat)?, optqrm::pricing::ONE_DAY)?;
        println!("p = {p}");
    }
    let m = &res.metrics;
    println!(
        "accuracy = {}, precision = {}, recall = {}, error_pct = {}",
        fmt_opt(m.accuracy),
        fmt_opt(m.precision),
        fmt_opt(m.recall),
        fmt_opt(m.error_pct)
    );
    ctx.info(format!("wrote {}", file.display()));
    Ok(())
}

pub fn sweep(ctx: &Ctx, args: &SweepArgs) -> Result<(), CliError> {
    let fs = &ctx.file.sweep;
    let (solver, n_x, n_t, grid_text) = ctx.solver(&args.solver)?;
    let d = SweepConfig::default();
    let grid_spec = args
        .sigma_hat_grid
        .clone()
        .or_else(|| fs.sigma_hat_grid.clone());
    let sigma_hat_grid = match &grid_spec {
        Some(s) => {
            let (lo, hi, step) = parse_range(s)?;
            value_grid(lo, hi, step)?
        }
        None => d.sigma_hat_grid.clone(),
    };
    let sim = ctx.sim(&MarketArgs {
        sigma: args.sigma,
        days: None,
    });
    let cfg = SweepConfig {
        sigma: sim.sigma,
        sigma_hat_grid,
        n_windows: args.windows.or(fs.windows).unwrap_or(d.n_windows),
        seed: ctx.seed,
        solver,
        sim,
        eta: args.eta.or(fs.eta).unwrap_or(d.eta),
        n_x,
        n_t,
    };
    cfg.validate()?;
    ctx.info(format!(
        "sweeping {} sigma_hat values over {} windows",
        cfg.sigma_hat_grid.len(),
        cfg.n_windows
    ));
    let res = run_sweep(&cfg)?;

    let mut meta = ctx.meta("sweep");
    push_sim(&mut meta, &cfg.effective_sim());
    meta.push(
        "sweep.sigma_hat_grid",
        grid_spec.unwrap_or_else(|| "0.05:0.38:0.01".into()),
    )
    .push("sweep.rows", cfg.sigma_hat_grid.len())
    .push("sweep.windows", cfg.n_windows)
    .push("sweep.eta", cfg.eta);
    push_solver(&mut meta, &cfg.solver, &grid_text);
    let files = emit_report(Report::Sweep(&res), ctx.out_dir()?, &meta)?;

    println!("sigma_hat,zeta_bar,p,lo,hi,n_used");
    for r in &res.rows {
        println!(
            "{},{},{},{},{},{}",
            r.sigma_hat,
            fmt_opt(r.zeta_bar),
            r.p,
            r.corridor_lo,
            r.corridor_hi,
            r.windows_used
        );
        if let Some(e) = &r.error {
            ctx.info(format!("sigma_hat {}: {e}", r.sigma_hat));
        }
    }
    for f in files {
        ctx.debug(format!("wrote {}", f.display()));
    }
    Ok(())
}

pub fn study(ctx: &Ctx, args: &StudyArgs) -> Result<(), CliError> {
    let fs = &ctx.file.study;
    let d = StudyConfig::default();
    let delta_grid = match &args.delta_grid {
        Some(s) => parse_list(s)?,
        None => fs.delta_grid.clone().unwrap_or(d.delta_grid.clone()),
    };
    let grid_text = args
        .grid
        .clone()
        .or_else(|| fs.grid.clone())
        .unwrap_or_else(|| DEFAULT_GRID.into());
    let (n_x, n_t) = parse_grid(&grid_text)?;
    let cfg = StudyConfig {
        delta_grid,
        rho: args.rho.or(fs.rho).unwrap_or(d.rho),
        n_x,
        n_t,
        seed: ctx.seed,
        baseline_alpha: fs.baseline_alpha.unwrap_or(d.baseline_alpha),
        floor_factor: fs.floor_factor.unwrap_or(d.floor_factor),
        ..d
    };
    cfg.validate()?;
    let table = convergence_study(&cfg)?;

    let mut meta = ctx.meta("study");
    let list: Vec<String> = cfg.delta_grid.iter().map(|v| v.to_string()).collect();
    meta.push("study.delta_grid", list.join(","))
        .push("study.rho", cfg.rho)
        .push("study.grid", &grid_text)
        .push("study.baseline_alpha", cfg.baseline_alpha)
        .push("study.floor_factor", cfg.floor_factor)
        .push("study.mu", table.mu);
    emit_report(Report::Study(&table), ctx.out_dir()?, &meta)?;

    println!("delta,alpha,error,ratio");
    for r in &table.rows {
        println!("{},{},{},{}", r.delta, r.alpha, r.error, fmt_opt(r.ratio));
    }
    println!(
        "monotone to floor: {}, ratio spread: {}",
        table.is_monotone_to_floor(),
        fmt_opt(table.ratio_spread())
    );
    Ok(())
}
