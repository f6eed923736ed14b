use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::qrm::stencil::Stencil;
use crate::qrm::{qrm_solve, DimensionlessProblem, Grid, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct StudyConfig {
    /// Noise levels; a `0` entry gives the noiseless baseline.
    pub delta_grid: Vec<f64>,
    /// Width of the final time layer excluded from the error norm.
    pub rho: f64,
    /// Constant coefficient `a` of `w_t + a w_xx = 0`.
    pub a: f64,
    /// Time horizon `T_1`.
    pub t1: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub seed: u64,
    /// Regularisation of the noiseless row, where `delta^2` would vanish.
    pub baseline_alpha: f64,
    /// Errors up to `floor_factor` times the baseline count as
    /// discretisation floor.
    pub floor_factor: f64,
}

impl Default for StudyConfig {
    fn default() -> Self {
        Self {
            delta_grid: vec![0.0, 1e-1, 1e-2, 1e-3, 1e-4],
            rho: 0.05,
            a: 1.0,
            t1: 0.1,
            n_x: 100,
            n_t: 100,
            seed: 42,
            baseline_alpha: 1e-6,
            floor_factor: 2.0,
        }
    }
}

impl StudyConfig {
    /// `ln(T_1 + 1 - rho) / ln(T_1 + 1)`.
    pub fn mu(&self) -> f64 {
        (self.t1 + 1.0 - self.rho).ln() / (self.t1 + 1.0).ln()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t1 > 0.0) || !self.t1.is_finite() {
            return Err(Error::domain("T1", self.t1));
        }
        if !(self.rho > 0.0 && self.rho < self.t1) {
            return Err(Error::domain("rho", self.rho));
        }
        if !(self.a > 0.0) || !self.a.is_finite() {
            return Err(Error::domain("a", self.a));
        }
        if self.delta_grid.is_empty() {
            return Err(Error::Config("delta grid is empty".into()));
        }
        if let Some(&d) = self.delta_grid.iter().find(|d| !(**d >= 0.0 && **d < 1.0)) {
            return Err(Error::domain("delta", d));
        }
        if !(self.baseline_alpha > 0.0 && self.baseline_alpha < 1.0) {
            return Err(Error::domain("baseline alpha", self.baseline_alpha));
        }
        if !(self.floor_factor >= 1.0) {
            return Err(Error::domain("floor factor", self.floor_factor));
        }
        Grid::new(self.n_x, self.n_t, self.t1)?;
        Ok(())
    }

    /// `e^{a pi^2 t} sin(pi x)`, which solves `w_t + a w_xx = 0`.
    pub fn exact(&self, x: f64, t: f64) -> f64 {
        (self.a * PI * PI * t).exp() * (PI * x).sin()
    }

    fn exact_dx(&self, x: f64, t: f64) -> f64 {
        PI * (self.a * PI * PI * t).exp() * (PI * x).cos()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyRow {
    pub delta: f64,
    pub alpha: f64,
    /// `|w - w*|_{L2} + |w_x - w*_x|_{L2}` over `t <= T_1 - rho`.
    pub error: f64,
    /// `exp(-(ln delta^{-1/2})^mu)`; `None` for `delta = 0`.
    pub rate: Option<f64>,
    pub ratio: Option<f64>,
    pub converged: bool,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyTable {
    pub mu: f64,
    pub rows: Vec<StudyRow>,
    /// Error of the noiseless row, if one was requested.
    pub baseline: Option<f64>,
    pub floor_factor: f64,
}

impl StudyTable {
    /// Rows whose error clearly exceeds the discretisation floor.
    pub fn above_floor(&self) -> Vec<&StudyRow> {
        self.rows
            .iter()
            .filter(|r| r.delta > 0.0 && !self.in_floor(r.error))
            .collect()
    }

    pub fn in_floor(&self, error: f64) -> bool {
        self.baseline
            .is_some_and(|b| error <= self.floor_factor * b)
    }

    /// Errors of the noisy rows do not grow as `delta` decreases, except
    /// between rows that both sit on the floor.
    pub fn is_monotone_to_floor(&self) -> bool {
        let mut noisy: Vec<&StudyRow> = self.rows.iter().filter(|r| r.delta > 0.0).collect();
        noisy.sort_by(|a, b| b.delta.total_cmp(&a.delta));
        noisy.windows(2).all(|w| {
            w[1].error <= w[0].error || (self.in_floor(w[0].error) && self.in_floor(w[1].error))
        })
    }

    /// `max(ratio) / min(ratio)` over [`Self::above_floor`].
    pub fn ratio_spread(&self) -> Option<f64> {
        let ratios: Vec<f64> = self.above_floor().iter().filter_map(|r| r.ratio).collect();
        let max = ratios.iter().cloned().reduce(f64::max)?;
        let min = ratios.iter().cloned().reduce(f64::min)?;
        Some(max / min)
    }
}

/// `exp(-(ln delta^{-1/2})^mu)`.
pub fn rate_factor(delta: f64, mu: f64) -> f64 {
    (-(0.5 * (1.0 / delta).ln()).powf(mu)).exp()
}

/// Uniform noise on the lateral boundary nodes `k >= 1`, scaled so that
/// the discrete `H^1(0, T_1)` norm over both sides equals `delta`.
pub fn boundary_noise(grid: &Grid, delta: f64, rng: &mut impl Rng) -> (Vec<f64>, Vec<f64>) {
    let n = grid.n_t + 1;
    let mut sides = [vec![0.0; n], vec![0.0; n]];
    if delta == 0.0 {
        let [b, a] = sides;
        return (b, a);
    }
    for side in sides.iter_mut() {
        for v in side.iter_mut().skip(1) {
            *v = rng.random_range(-1.0..1.0);
        }
    }
    let norm = sides
        .iter()
        .map(|s| h1_norm_sq(s, grid.h_t))
        .sum::<f64>()
        .sqrt();
    let scale = delta / norm;
    let [b, a] = sides.map(|s| s.into_iter().map(|v| v * scale).collect::<Vec<_>>());
    (b, a)
}

/// Trapezoid `int eta^2` plus `int eta_t^2` with one-sided cell slopes.
pub fn h1_norm_sq(eta: &[f64], h: f64) -> f64 {
    let n = eta.len() - 1;
    let mut s = 0.0;
    for (k, v) in eta.iter().enumerate() {
        let w = if k == 0 || k == n { 0.5 * h } else { h };
        s += w * v * v;
    }
    for pair in eta.windows(2) {
        let d = (pair[1] - pair[0]) / h;
        s += h * d * d;
    }
    s
}

fn manufactured_problem(cfg: &StudyConfig, grid: Grid) -> DimensionlessProblem {
    DimensionlessProblem {
        grid,
        a_x: vec![cfg.a; grid.n_x + 1],
        sigma_sq: vec![1.0; grid.n_t + 1],
        g: (0..=grid.n_x).map(|i| cfg.exact(grid.x(i), 0.0)).collect(),
        v_b: (0..=grid.n_t).map(|k| cfg.exact(0.0, grid.t(k))).collect(),
        v_a: (0..=grid.n_t).map(|k| cfg.exact(1.0, grid.t(k))).collect(),
    }
}

/// `|w - w*|_{L2(Q)} + |w_x - w*_x|_{L2(Q)}` with `Q = (0,1) x (0, T_1 - rho)`.
fn study_error(cfg: &StudyConfig, grid: &Grid, w: &[f64]) -> f64 {
    let k_max = ((cfg.t1 - cfg.rho) / grid.h_t).round() as usize;
    let (mut l2, mut h1) = (0.0, 0.0);
    for k in 0..=k_max {
        let wt = if k == 0 || k == k_max { 0.5 } else { 1.0 } * grid.h_t;
        for i in 0..=grid.n_x {
            let wx = if i == 0 || i == grid.n_x { 0.5 } else { 1.0 } * grid.h_x;
            let (x, t) = (grid.x(i), grid.t(k));
            let e = w[grid.idx(i, k)] - cfg.exact(x, t);
            let dx = first_dx(w, grid, i, k) - cfg.exact_dx(x, t);
            l2 += wx * wt * e * e;
            h1 += wx * wt * dx * dx;
        }
    }
    l2.sqrt() + h1.sqrt()
}

fn first_dx(w: &[f64], grid: &Grid, i: usize, k: usize) -> f64 {
    Stencil::first(i, grid.n_x, grid.h_x)
        .iter()
        .map(|(ii, c)| c * w[grid.idx(ii, k)])
        .sum()
}

/// Solves the manufactured problem with noisy lateral data at each noise
/// level, with `alpha = delta^2`, and measures the error against the exact
/// solution.
pub fn convergence_study(cfg: &StudyConfig) -> Result<StudyTable> {
    cfg.validate()?;
    let grid = Grid::new(cfg.n_x, cfg.n_t, cfg.t1)?;
    let mu = cfg.mu();
    let clean = manufactured_problem(cfg, grid);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut rows = Vec::with_capacity(cfg.delta_grid.len());
    for &delta in &cfg.delta_grid {
        let (nb, na) = boundary_noise(&grid, delta, &mut rng);
        let mut prob = clean.clone();
        for k in 0..=grid.n_t {
            prob.v_b[k] += nb[k];
            prob.v_a[k] += na[k];
        }
        let alpha = if delta == 0.0 {
            cfg.baseline_alpha
        } else {
            delta * delta
        };
        let sol = qrm_solve(&prob, &SolverConfig::with_alpha(alpha))?;
        let error = study_error(cfg, &grid, &sol.values);
        let rate = (delta > 0.0).then(|| rate_factor(delta, mu));
        rows.push(StudyRow {
            delta,
            alpha,
            error,
            rate,
            ratio: rate.map(|r| error / r),
            converged: sol.converged,
            iterations: sol.iterations,
        });
    }
    let baseline = rows.iter().find(|r| r.delta == 0.0).map(|r| r.error);
    Ok(StudyTable {
        mu,
        rows,
        baseline,
        floor_factor: cfg.floor_factor,
    })
}
