//! Acceptance suite. Runs every criterion at its pinned tolerance and prints
//! one PASS/FAIL line per criterion; exits non-zero if any fails.
//!
//! `cargo test --test acceptance -- 1 3` runs only the listed criteria.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use optqrm::experiment::{
    convergence_study, emit_report, run_sweep, sweep_csv, Report, RunMeta, StudyConfig,
    SweepConfig, SweepResult,
};
use optqrm::market_sim::{
    build_market_series, load_series, parse_series, save_series, series_to_csv, simulate_gbm_path,
    SimConfig,
};
use optqrm::pricing::{bs_call_price, greek_delta, greek_gamma, OptionSpec, VolPair};
use optqrm::prob_strategy::{
    majority_profit_probability, required_probability, trade_win_probability,
};
use optqrm::qrm::{
    discrete_functional, functional_gradient, qrm_solve, DimensionlessProblem, Grid, SolverConfig,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod tol {
    pub const C1_PROB_ABS: f64 = 1e-10;
    pub const C2_DELTA_REL: f64 = 1e-6;
    pub const C2_GAMMA_REL: f64 = 1e-4;
    pub const C3_L2_REL: f64 = 0.05;
    pub const C3_GRAD_REL: f64 = 1e-6;
    pub const C4_RATIO_SPREAD: f64 = 10.0;
    pub const C5_BAND_PAPER: f64 = 2.0;
    pub const C5_BAND_CI: f64 = 3.0;
    /// Rows allowed outside the band (28 of 33 must be inside).
    pub const C5_MISSES: usize = 5;
    pub const C5_MAX_ZETA: f64 = 0.515;
    pub const C5_MAX_ZETA_TOL: f64 = 0.03;
    pub const C6_BINOM_ABS: f64 = 1e-12;
    pub const C6_REQUIRED: f64 = 0.51836;
    pub const C6_REQUIRED_TOL: f64 = 1e-4;
    pub const C7_SE: f64 = 5.0;
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

// ---------- oracles ----------

fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * PI).sqrt()
}

#[allow(clippy::too_many_arguments)]
fn simpson(
    f: &dyn Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    eps: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * eps {
        return left + right + (left + right - whole) / 15.0;
    }
    simpson(f, a, m, fa, flm, fm, 0.5 * eps, depth - 1)
        + simpson(f, m, b, fm, frm, fb, 0.5 * eps, depth - 1)
}

/// `P(Z <= z)` by adaptive Simpson quadrature of the normal density.
fn quad_cdf(z: f64) -> f64 {
    if z == 0.0 {
        return 0.5;
    }
    let b = z.abs();
    let half = simpson(&pdf, 0.0, b, pdf(0.0), pdf(0.5 * b), pdf(b), 1e-15, 40);
    if z > 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Inverse of [`quad_cdf`] by bisection.
fn quad_inv_cdf(p: f64) -> f64 {
    let (mut lo, mut hi) = (-10.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if quad_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 {
            break;
        }
    }
    0.5 * (lo + hi)
}

fn binom_brute(p: f64, n: usize) -> f64 {
    // Pascal's triangle keeps every coefficient exact for n <= 30
    let mut row = vec![1.0_f64];
    for _ in 0..n {
        let mut next = vec![1.0; row.len() + 1];
        for k in 1..row.len() {
            next[k] = row[k - 1] + row[k];
        }
        row = next;
    }
    (0..=n)
        .filter(|&k| 2 * k > n)
        .map(|k| row[k] * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32))
        .sum()
}

// ---------- criteria ----------

fn criterion_1() -> Outcome {
    let sigmas = [0.1, 0.2, 0.3, 0.5, 0.8];
    let hats = [0.05, 0.15, 0.25, 0.4];
    let eps = [1.0 / 255.0, 2.0 / 255.0, 10.0 / 255.0, 90.0 / 255.0, 1.0];
    let mut worst = 0.0_f64;
    let mut count = 0;
    for &s in &sigmas {
        for &h in &hats {
            for &e in &eps {
                let p = trade_win_probability(VolPair::new(s, h).unwrap(), e).unwrap();
                let z = (h * h - s * s) * e.sqrt() / (2.0 * (h * h + s * s).sqrt());
                let oracle = 1.0 - quad_cdf(z);
                worst = worst.max((p - oracle).abs());
                count += 1;
            }
        }
    }
    let mut half_ok = true;
    for &s in &sigmas {
        for &e in &eps {
            half_ok &= trade_win_probability(VolPair::new(s, s).unwrap(), e).unwrap() == 0.5;
        }
    }
    outcome(
        count == 100 && worst <= tol::C1_PROB_ABS && half_ok,
        format!(
            "{count} points, max |p - quadrature| = {worst:.2e}, p(s,s) = 0.5 exactly: {half_ok}"
        ),
    )
}

fn criterion_2() -> Outcome {
    let spec = OptionSpec::standard();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let (mut worst_d, mut worst_g) = (0.0_f64, 0.0_f64);
    let mut n = 0;
    while n < 1000 {
        let s: f64 = rng.random_range(50.0..200.0);
        let tau: f64 = rng.random_range(1.0 / 255.0..1.0);
        let vol: f64 = rng.random_range(0.05..0.8);
        let ell = vol * s * tau.sqrt();
        let theta = ((s / spec.strike).ln() + 0.5 * vol * vol * tau) / (vol * tau.sqrt());
        // valid: delta and gamma not vanishingly small
        if theta.abs() > 3.0 {
            continue;
        }
        n += 1;
        let price = |x: f64| bs_call_price(x, tau, &spec, vol).unwrap();
        let hd = 1e-4 * ell;
        let fd_delta = (price(s + hd) - price(s - hd)) / (2.0 * hd);
        let hg = 3e-3 * ell;
        let fd_gamma = (price(s + hg) - 2.0 * price(s) + price(s - hg)) / (hg * hg);
        let d = greek_delta(s, tau, &spec, vol).unwrap();
        let g = greek_gamma(s, tau, &spec, vol).unwrap();
        worst_d = worst_d.max(((fd_delta - d) / d).abs());
        worst_g = worst_g.max(((fd_gamma - g) / g).abs());
    }
    outcome(
        worst_d <= tol::C2_DELTA_REL && worst_g <= tol::C2_GAMMA_REL,
        format!("{n} inputs, max rel err delta {worst_d:.2e}, gamma {worst_g:.2e}"),
    )
}

fn manufactured(n: usize) -> (DimensionlessProblem, impl Fn(f64, f64) -> f64) {
    let grid = Grid::new(n, n, 0.1).unwrap();
    let exact = |x: f64, t: f64| (PI * PI * t).exp() * (PI * x).sin();
    let prob = DimensionlessProblem {
        grid,
        a_x: vec![1.0; n + 1],
        sigma_sq: vec![1.0; n + 1],
        g: (0..=n).map(|i| exact(grid.x(i), 0.0)).collect(),
        v_b: (0..=n).map(|k| exact(0.0, grid.t(k))).collect(),
        v_a: (0..=n).map(|k| exact(1.0, grid.t(k))).collect(),
    };
    (prob, exact)
}

fn criterion_3() -> Outcome {
    let (prob, exact) = manufactured(100);
    let alpha = 1e-6;
    let sol = qrm_solve(&prob, &SolverConfig::with_alpha(alpha)).unwrap();
    let g = sol.grid;
    let k_max = (0.05 / g.h_t).round() as usize;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..=k_max {
        for i in 0..=g.n_x {
            let e = exact(g.x(i), g.t(k));
            num += (sol.at(i, k) - e).powi(2);
            den += e * e;
        }
    }
    let l2 = (num / den).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v: Vec<f64> = (0..g.nodes())
        .map(|_| rng.random_range(-1.0..1.0))
        .collect();
    let grad = functional_gradient(&v, &prob, alpha).unwrap();
    let mut worst = 0.0_f64;
    for _ in 0..20 {
        let node = rng.random_range(0..g.nodes());
        let h = 1e-3;
        let mut vp = v.clone();
        vp[node] += h;
        let mut vm = v.clone();
        vm[node] -= h;
        let fd = (discrete_functional(&vp, &prob, alpha).unwrap()
            - discrete_functional(&vm, &prob, alpha).unwrap())
            / (2.0 * h);
        worst = worst.max(((fd - grad[node]) / grad[node]).abs());
    }
    outcome(
        sol.converged && l2 <= tol::C3_L2_REL && worst <= tol::C3_GRAD_REL,
        format!(
            "rel L2 error on t <= 0.05 = {l2:.4} ({} iterations), gradient vs FD max rel err {worst:.2e}",
            sol.iterations
        ),
    )
}

fn criterion_4() -> Outcome {
    let table = convergence_study(&StudyConfig::default()).unwrap();
    for r in &table.rows {
        println!(
            "    delta {:>7.0e}  alpha {:>7.0e}  error {:.4e}  ratio {}",
            r.delta,
            r.alpha,
            r.error,
            r.ratio.map_or("-".into(), |x| format!("{x:.4}"))
        );
    }
    let monotone = table.is_monotone_to_floor();
    let spread = table.ratio_spread();
    let bounded = table.above_floor().len();
    let noisy: Vec<f64> = table.rows.iter().filter_map(|r| r.ratio).collect();
    let all_spread = noisy.iter().copied().fold(f64::MIN, f64::max)
        / noisy.iter().copied().fold(f64::MAX, f64::min);
    let pass = monotone && spread.is_some_and(|s| s <= tol::C4_RATIO_SPREAD);
    outcome(
        pass,
        format!(
            "monotone to floor {monotone}, {bounded} row(s) above floor {:.3e}, ratio max/min {} \
             (over all noisy rows {all_spread:.3})",
            table.baseline.unwrap_or(f64::NAN) * table.floor_factor,
            spread.map_or("n/a".into(), |s| format!("{s:.3}"))
        ),
    )
}

fn band_count(res: &SweepResult, width: f64) -> usize {
    res.rows
        .iter()
        .filter(|r| {
            r.zeta_bar.is_some_and(|z| {
                let d = (r.corridor_hi - r.p) * width;
                (z - r.p).abs() <= d
            })
        })
        .count()
}

fn mean_zeta(res: &SweepResult, keep: impl Fn(f64) -> bool) -> f64 {
    let v: Vec<f64> = res
        .rows
        .iter()
        .filter(|r| keep(r.sigma_hat))
        .filter_map(|r| r.zeta_bar)
        .collect();
    v.iter().sum::<f64>() / v.len() as f64
}

fn print_rows(res: &SweepResult) {
    for r in &res.rows {
        let m = &r.metrics;
        let traded = m.tp + m.fp + m.tn + m.fn_;
        // zeta_bar = (share of true rises) x recall when nothing is abstained
        let rises = (m.tp + m.fn_) as f64 / traded.max(1) as f64;
        println!(
            "    sigma_hat {:.2}  zeta_bar {}  p {:.4}  sqrt(D) {:.4}  used {}  rises {:.4}  recall {}",
            r.sigma_hat,
            r.zeta_bar.map_or("-".into(), |z| format!("{z:.4}")),
            r.p,
            r.corridor_hi - r.p,
            r.windows_used,
            rises,
            m.recall.map_or("-".into(), |x| format!("{x:.4}"))
        );
    }
}

fn criterion_5_paper() -> Outcome {
    let res = run_sweep(&SweepConfig::default()).unwrap();
    print_rows(&res);
    let rows = res.rows.len();
    let inside = band_count(&res, tol::C5_BAND_PAPER);
    let a = inside + tol::C5_MISSES >= rows;
    let max = res.max_zeta_bar().unwrap_or(f64::NAN);
    let b = (max - tol::C5_MAX_ZETA).abs() <= tol::C5_MAX_ZETA_TOL;
    let low = mean_zeta(&res, |s| s <= 0.14 + 1e-9);
    let mid = mean_zeta(&res, |s| (0.18 - 1e-9..=0.22 + 1e-9).contains(&s));
    let c = low > mid;
    outcome(
        a && b && c,
        format!(
            "(a) {inside}/{rows} rows within p +- 2 sqrt(D) [{}]; (b) max zeta_bar {max:.4} [{}]; \
             (c) mean zeta_bar {low:.4} (sigma_hat <= 0.14) vs {mid:.4} (0.18..0.22) [{}]",
            pf(a),
            pf(b),
            pf(c)
        ),
    )
}

fn criterion_5_ci() -> Outcome {
    let cfg = SweepConfig {
        n_windows: 200,
        ..SweepConfig::default()
    };
    let res = run_sweep(&cfg).unwrap();
    print_rows(&res);
    let rows = res.rows.len();
    let inside = band_count(&res, tol::C5_BAND_CI);
    outcome(
        inside + tol::C5_MISSES >= rows,
        format!("n = 200: {inside}/{rows} rows within p +- 3 sqrt(D)"),
    )
}

fn criterion_6() -> Outcome {
    let mut worst = 0.0_f64;
    for n in 1..=30 {
        for j in 1..=9 {
            let p = j as f64 / 10.0;
            let got = majority_profit_probability(p, n).unwrap();
            worst = worst.max((got - binom_brute(p, n)).abs());
        }
    }
    let got = required_probability(0.95, 2000).unwrap();
    let z = quad_inv_cdf(0.95);
    let oracle = 0.5 + 0.5 * (z * z / (z * z + 2000.0)).sqrt();
    let req_ok = (got - tol::C6_REQUIRED).abs() <= tol::C6_REQUIRED_TOL
        && (got - oracle).abs() <= tol::C6_REQUIRED_TOL;
    outcome(
        worst <= tol::C6_BINOM_ABS && req_ok,
        format!(
            "binomial tail max err {worst:.2e}; required_probability(0.95, 2000) = {got:.6} (oracle {oracle:.6})"
        ),
    )
}

fn criterion_7() -> Outcome {
    let n = 100_000;
    let mut fails = Vec::new();
    let mut worst = 0.0_f64;
    for seed in 0..10u64 {
        let cfg = SimConfig {
            n_days: n + 1,
            seed: 1000 + seed,
            ..SimConfig::default()
        };
        let path = simulate_gbm_path(&cfg).unwrap();
        let r: Vec<f64> = path.windows(2).map(|w| (w[1] / w[0]).ln()).collect();
        let dt = 1.0 / 255.0;
        let var = cfg.sigma * cfg.sigma * dt;
        let mean_th = -0.5 * var;
        let m = r.iter().sum::<f64>() / n as f64;
        let s2 = r.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64;
        let zm = (m - mean_th) / (var / n as f64).sqrt();
        let zv = (s2 - var) / (var * (2.0 / (n - 1) as f64).sqrt());
        worst = worst.max(zm.abs()).max(zv.abs());
        if zm.abs() > tol::C7_SE || zv.abs() > tol::C7_SE {
            fails.push(cfg.seed);
        }
    }
    outcome(
        fails.is_empty(),
        format!("10 seeds, max |z| = {worst:.2}, failing seeds {fails:?}"),
    )
}

fn criterion_8() -> Outcome {
    let cfg = SweepConfig {
        sigma_hat_grid: vec![0.1, 0.2, 0.3],
        n_windows: 30,
        n_x: 30,
        n_t: 30,
        seed: 8,
        ..SweepConfig::default()
    };
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for run in ["a", "b"] {
        let res = run_sweep(&cfg).unwrap();
        let out = dir.path().join(run);
        let mut meta = RunMeta::new();
        meta.push("seed", cfg.seed);
        let files = emit_report(Report::Sweep(&res), &out, &meta).unwrap();
        let mut all = Vec::new();
        for f in files {
            all.push(std::fs::read(&f).unwrap());
        }
        texts.push((sweep_csv(&res), all));
    }
    let identical = texts[0] == texts[1];

    let sim = SimConfig {
        n_days: 300,
        seed: 8,
        ..SimConfig::default()
    };
    let path = simulate_gbm_path(&sim).unwrap();
    let series = build_market_series(&path, 0.17, &sim).unwrap();
    let file = dir.path().join("series.csv");
    save_series(&series, &file).unwrap();
    let back = load_series(&file).unwrap();
    let round12 = |v: f64| format!("{v:.11e}").parse::<f64>().unwrap();
    let cols = |s: &optqrm::market_sim::MarketSeries| {
        [
            s.times.clone(),
            s.stock_bid.clone(),
            s.stock_ask.clone(),
            s.option_bid.clone(),
            s.option_ask.clone(),
            s.sigma_hat.clone(),
        ]
    };
    let mut exact = back.day_index == series.day_index;
    for (orig, got) in cols(&series).iter().zip(cols(&back).iter()) {
        exact &= orig.len() == got.len()
            && orig
                .iter()
                .zip(got)
                .all(|(o, g)| round12(*o).to_bits() == g.to_bits());
    }
    let resaved = series_to_csv(&back) == series_to_csv(&series)
        && parse_series(&series_to_csv(&back)).unwrap() == back;
    outcome(
        identical && exact && resaved,
        format!(
            "reports byte-identical {identical}; load == 12-digit rounding bitwise {exact}; re-save stable {resaved}"
        ),
    )
}

fn pf(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: Vec<Criterion> = vec![
        ("1", criterion_1),
        ("2", criterion_2),
        ("3", criterion_3),
        ("4", criterion_4),
        ("5", criterion_5_paper),
        ("5-ci", criterion_5_ci),
        ("6", criterion_6),
        ("7", criterion_7),
        ("8", criterion_8),
    ];
    // the libtest flags cargo may pass are ignored
    let wanted: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (id, run) in criteria {
        let base = id.split('-').next().unwrap_or(id);
        if !wanted.is_empty() && !wanted.iter().any(|w| w == id || w == base) {
            continue;
        }
        let start = Instant::now();
        let out = run();
        if !out.pass {
            failed += 1;
        }
        println!(
            "criterion {id}: {} ({:.1}s) {}",
            pf(out.pass),
            start.elapsed().as_secs_f64(),
            out.detail
        );
    }
    if failed > 0 {
        println!("acceptance: {failed} criterion line(s) failed");
        ExitCode::FAILURE
    } else {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    }
}
