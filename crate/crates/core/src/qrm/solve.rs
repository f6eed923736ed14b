//! Minimisation of the discrete functional over the constraint set by
//! preconditioned conjugate gradients on the normal equations.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pricing::ONE_DAY;

use super::assembly::LeastSquaresOperator;
use super::banded::BandedCholesky;
use super::functional::{discrete_functional, residual_norm_sq};
use super::grid::Grid;
use super::problem::DimensionlessProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Preconditioner {
    None,
    Jacobi,
    /// Exact banded Cholesky factor of the normal matrix.
    #[default]
    Cholesky,
}

impl Preconditioner {
    pub fn name(&self) -> &'static str {
        match self {
            Preconditioner::None => "none",
            Preconditioner::Jacobi => "jacobi",
            Preconditioner::Cholesky => "cholesky",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "none" => Ok(Preconditioner::None),
            "jacobi" => Ok(Preconditioner::Jacobi),
            "cholesky" => Ok(Preconditioner::Cholesky),
            other => Err(Error::Config(format!("unknown preconditioner `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub alpha: f64,
    /// `None` means `10 * n_x * n_t`.
    pub max_iters: Option<usize>,
    /// Stop once `|gradient| <= grad_tol * |initial gradient|`.
    pub grad_tol: f64,
    pub preconditioner: Preconditioner,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            max_iters: None,
            grad_tol: 1e-10,
            preconditioner: Preconditioner::default(),
        }
    }
}

impl SolverConfig {
    pub fn with_alpha(alpha: f64) -> Self {
        Self {
            alpha,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::domain("alpha", self.alpha));
        }
        if !(self.grad_tol >= 0.0) || !self.grad_tol.is_finite() {
            return Err(Error::domain("grad_tol", self.grad_tol));
        }
        if self.max_iters == Some(0) {
            return Err(Error::Config("max_iters must be positive".into()));
        }
        Ok(())
    }

    pub fn iteration_limit(&self, grid: &Grid) -> usize {
        self.max_iters.unwrap_or(10 * grid.n_x * grid.n_t)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct QrmSolution {
    pub grid: Grid,
    /// Node values, `x` fastest (see [`Grid::idx`]).
    pub values: Vec<f64>,
    pub functional_value: f64,
    /// Discrete `int (Mv)^2`.
    pub residual_l2: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `|gradient| / |initial gradient|` at exit.
    pub relative_gradient: f64,
    /// Functional value after each iteration, starting with the lift.
    pub history: Vec<f64>,
}

impl QrmSolution {
    pub fn at(&self, i: usize, k: usize) -> f64 {
        self.values[self.grid.idx(i, k)]
    }

    /// Bilinear interpolation of the grid function at `(x, t)`.
    pub fn value_at(&self, x: f64, t: f64) -> Result<f64> {
        let g = &self.grid;
        let tol = 1e-12;
        if !(x >= -tol && x <= 1.0 + tol) {
            return Err(Error::domain("x", x));
        }
        if !(t >= -tol * g.t_max && t <= g.t_max * (1.0 + tol)) {
            return Err(Error::Range { t, limit: g.t_max });
        }
        let (i0, fx) = cell_of(x / g.h_x, g.n_x);
        let (k0, ft) = cell_of(t / g.h_t, g.n_t);
        let v = |i, k| self.values[g.idx(i, k)];
        let lo = (1.0 - fx) * v(i0, k0) + fx * v(i0 + 1, k0);
        let hi = (1.0 - fx) * v(i0, k0 + 1) + fx * v(i0 + 1, k0 + 1);
        Ok((1.0 - ft) * lo + ft * hi)
    }

    /// `x,t,v` rows in node order.
    pub fn to_csv(&self) -> String {
        let g = &self.grid;
        let mut out = String::with_capacity(g.nodes() * 64);
        out.push_str("x,t,v\n");
        for k in 0..=g.n_t {
            for i in 0..=g.n_x {
                let _ = writeln!(
                    out,
                    "{:.11e},{:.11e},{:.11e}",
                    g.x(i),
                    g.t(k),
                    self.at(i, k)
                );
            }
        }
        out
    }

    pub fn dump(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        f.write_all(self.to_csv().as_bytes())
            .map_err(|e| Error::io(path, e))
    }
}

/// Splits a fractional node coordinate into a cell index and offset,
/// snapping to the nearest node when within `1e-9`.
fn cell_of(f: f64, n: usize) -> (usize, f64) {
    let r = f.round();
    let f = if (f - r).abs() < 1e-9 { r } else { f };
    let f = f.clamp(0.0, n as f64);
    let i = (f.floor() as usize).min(n - 1);
    (i, f - i as f64)
}

/// Cholesky factor of the normal matrix of `prob`; reusable as a
/// preconditioner for any problem with a nearby operator.
pub fn normal_factor(prob: &DimensionlessProblem, alpha: f64) -> Result<BandedCholesky> {
    prob.validate()?;
    LeastSquaresOperator::new(prob, alpha)
        .normal_matrix()
        .cholesky()
}

/// Gradient of `J_alpha` with respect to every node value.
pub fn functional_gradient(v: &[f64], prob: &DimensionlessProblem, alpha: f64) -> Result<Vec<f64>> {
    if v.len() != prob.grid.nodes() {
        return Err(Error::Shape {
            expected: prob.grid.nodes(),
            actual: v.len(),
        });
    }
    Ok(LeastSquaresOperator::new(prob, alpha).gradient_full(v))
}

pub fn qrm_solve(prob: &DimensionlessProblem, cfg: &SolverConfig) -> Result<QrmSolution> {
    qrm_solve_with(prob, cfg, None)
}

fn functional_at(op: &LeastSquaresOperator, lift: &[f64], w: &[f64]) -> f64 {
    let mut v = lift.to_vec();
    for (node, u) in op.free_node_indices() {
        v[node] += w[u];
    }
    op.functional(&v)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

enum Precond<'a> {
    Identity,
    Diagonal(Vec<f64>),
    Factor(&'a BandedCholesky),
}

impl Precond<'_> {
    fn apply(&self, r: &[f64]) -> Vec<f64> {
        match self {
            Precond::Identity => r.to_vec(),
            Precond::Diagonal(d) => r.iter().zip(d).map(|(r, d)| r / d).collect(),
            Precond::Factor(f) => f.solve(r),
        }
    }
}

/// Like [`qrm_solve`], optionally with a precomputed Cholesky factor used in
/// place of building one when the configuration asks for it.
pub fn qrm_solve_with(
    prob: &DimensionlessProblem,
    cfg: &SolverConfig,
    factor: Option<&BandedCholesky>,
) -> Result<QrmSolution> {
    cfg.validate()?;
    prob.validate()?;
    let grid = prob.grid;
    let op = LeastSquaresOperator::new(prob, cfg.alpha);
    let n = op.n_free();

    let owned;
    let precond = match cfg.preconditioner {
        Preconditioner::None => Precond::Identity,
        Preconditioner::Jacobi => Precond::Diagonal(op.normal_diagonal()),
        Preconditioner::Cholesky => match factor {
            Some(f) => {
                if f.dim() != n {
                    return Err(Error::Shape {
                        expected: n,
                        actual: f.dim(),
                    });
                }
                Precond::Factor(f)
            }
            None => {
                owned = op.normal_matrix().cholesky()?;
                Precond::Factor(&owned)
            }
        },
    };

    let lift = prob.lift();
    let lf = op.apply_full(&lift);
    let j0 = dot(&lf, &lf);
    let rhs: Vec<f64> = op.transpose_free(&lf).into_iter().map(|x| -x).collect();
    let rhs_norm = dot(&rhs, &rhs).sqrt();

    let mut w = vec![0.0; n];
    let mut r = rhs.clone();
    let mut history = vec![j0];
    let mut iterations = 0;
    let mut converged = rhs_norm == 0.0;
    let mut rel = 0.0;
    let max_iters = cfg.iteration_limit(&grid);

    if !converged {
        let mut z = precond.apply(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        while iterations < max_iters {
            let q = op.normal_matvec(&p);
            let pq = dot(&p, &q);
            if !(pq > 0.0) || !(rz > 0.0) {
                break;
            }
            let a = rz / pq;
            for u in 0..n {
                w[u] += a * p[u];
                r[u] -= a * q[u];
            }
            iterations += 1;
            history.push(functional_at(&op, &lift, &w));
            rel = dot(&r, &r).sqrt() / rhs_norm;
            if rel <= cfg.grad_tol {
                converged = true;
                break;
            }
            z = precond.apply(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for u in 0..n {
                p[u] = z[u] + beta * p[u];
            }
        }
        if !converged {
            rel = dot(&r, &r).sqrt() / rhs_norm;
        }
    }

    let mut values = lift;
    for (node, u) in op.free_node_indices() {
        values[node] += w[u];
    }
    let functional_value = discrete_functional(&values, prob, cfg.alpha)?;
    let residual_l2 = residual_norm_sq(&values, prob)?;
    Ok(QrmSolution {
        grid,
        values,
        functional_value,
        residual_l2,
        iterations,
        converged,
        relative_gradient: rel,
        history,
    })
}

/// The forecast `v(x = 1/2, t = y)`; `x = 1/2` is the image of the stock
/// mid price.
pub fn predict_next_day(sol: &QrmSolution, s_b: f64, s_a: f64) -> Result<f64> {
    if !(s_b > 0.0) {
        return Err(Error::domain("stock bid", s_b));
    }
    if !(s_a > s_b) {
        return Err(Error::domain("stock ask - bid", s_a - s_b));
    }
    sol.value_at(0.5, ONE_DAY)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qrm::functional::h2_norm_sq;
    use std::f64::consts::PI;

    fn manufactured(n: usize) -> (DimensionlessProblem, impl Fn(f64, f64) -> f64) {
        let grid = Grid::new(n, n, 0.1).unwrap();
        let exact = |x: f64, t: f64| (PI * PI * t).exp() * (PI * x).sin();
        let prob = DimensionlessProblem {
            grid,
            a_x: vec![1.0; n + 1],
            sigma_sq: vec![1.0; n + 1],
            g: (0..=n).map(|i| exact(grid.x(i), 0.0)).collect(),
            v_b: vec![0.0; n + 1],
            v_a: (0..=n).map(|k| exact(1.0, grid.t(k))).collect(),
        };
        (prob, exact)
    }

    fn zero_problem(grid: Grid) -> DimensionlessProblem {
        DimensionlessProblem {
            grid,
            a_x: vec![1.0; grid.n_x + 1],
            sigma_sq: vec![1.0; grid.n_t + 1],
            g: vec![0.0; grid.n_x + 1],
            v_b: vec![0.0; grid.n_t + 1],
            v_a: vec![0.0; grid.n_t + 1],
        }
    }

    #[test]
    fn zero_data_gives_zero() {
        let prob = zero_problem(Grid::new(10, 10, 0.1).unwrap());
        let sol = qrm_solve(&prob, &SolverConfig::default()).unwrap();
        assert!(sol.values.iter().all(|&v| v == 0.0));
        assert_eq!(sol.functional_value, 0.0);
        assert_eq!(sol.iterations, 0);
        assert!(sol.converged);
    }

    #[test]
    fn constant_field_predicts_constant() {
        let grid = Grid::standard();
        let mut prob = zero_problem(grid);
        prob.g = vec![2.5; grid.n_x + 1];
        prob.v_b = vec![2.5; grid.n_t + 1];
        prob.v_a = vec![2.5; grid.n_t + 1];
        let sol = qrm_solve(&prob, &SolverConfig::default()).unwrap();
        let p = predict_next_day(&sol, 99.0, 101.0).unwrap();
        // the zeroth-order penalty pulls the interior slightly towards 0
        assert!((p - 2.5).abs() < 1e-6, "{p}");
        // node 50 on both axes
        assert_eq!(p, sol.at(50, 50));
        let flat = QrmSolution {
            values: vec![2.5; grid.nodes()],
            ..sol
        };
        assert_eq!(predict_next_day(&flat, 99.0, 101.0).unwrap(), 2.5);
    }

    #[test]
    fn manufactured_solution_is_recovered() {
        let (prob, exact) = manufactured(40);
        let cfg = SolverConfig::with_alpha(1e-6);
        let sol = qrm_solve(&prob, &cfg).unwrap();
        assert!(sol.converged);
        let g = sol.grid;
        let (mut num, mut den) = (0.0, 0.0);
        for k in 0..=g.n_t / 2 {
            for i in 0..=g.n_x {
                let e = exact(g.x(i), g.t(k));
                num += (sol.at(i, k) - e).powi(2);
                den += e * e;
            }
        }
        assert!((num / den).sqrt() < 0.05);
    }

    #[test]
    fn constraints_hold_exactly() {
        let (prob, _) = manufactured(20);
        let sol = qrm_solve(&prob, &SolverConfig::with_alpha(1e-3)).unwrap();
        let g = sol.grid;
        for k in 0..=g.n_t {
            assert_eq!(sol.at(0, k), prob.v_b[k]);
            assert_eq!(sol.at(g.n_x, k), prob.v_a[k]);
        }
        for i in 0..=g.n_x {
            assert_eq!(sol.at(i, 0), prob.g[i]);
        }
    }

    #[test]
    fn preconditioners_agree() {
        let (prob, _) = manufactured(16);
        let base = SolverConfig::with_alpha(1e-2);
        let mut sols = Vec::new();
        for pc in [
            Preconditioner::None,
            Preconditioner::Jacobi,
            Preconditioner::Cholesky,
        ] {
            let cfg = SolverConfig {
                preconditioner: pc,
                ..base
            };
            let sol = qrm_solve(&prob, &cfg).unwrap();
            assert!(sol.converged, "{pc:?}");
            for pair in sol.history.windows(2) {
                assert!(pair[1] <= pair[0] * (1.0 + 1e-12), "{pc:?}: {pair:?}");
            }
            sols.push(sol);
        }
        for s in &sols[1..] {
            for (a, b) in s.values.iter().zip(&sols[0].values) {
                assert!((a - b).abs() < 1e-7 * (1.0 + b.abs()));
            }
        }
    }

    #[test]
    fn stationary_point_has_zero_free_gradient() {
        let (prob, _) = manufactured(12);
        let cfg = SolverConfig::with_alpha(1e-3);
        let sol = qrm_solve(&prob, &cfg).unwrap();
        let grad = functional_gradient(&sol.values, &prob, cfg.alpha).unwrap();
        let g0 = functional_gradient(&prob.lift(), &prob, cfg.alpha).unwrap();
        let free_norm = |gr: &[f64]| {
            let g = prob.grid;
            let mut s = 0.0;
            for k in 1..=g.n_t {
                for i in 1..g.n_x {
                    s += gr[g.idx(i, k)].powi(2);
                }
            }
            s.sqrt()
        };
        assert!(free_norm(&grad) < 1e-8 * free_norm(&g0));
    }

    #[test]
    fn larger_alpha_damps_penalised_norm() {
        let (prob, _) = manufactured(12);
        let mut last = f64::INFINITY;
        for alpha in [1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1] {
            let sol = qrm_solve(&prob, &SolverConfig::with_alpha(alpha)).unwrap();
            let norm = h2_norm_sq(&sol.values, &prob.grid).unwrap().sqrt();
            assert!(
                norm <= last * (1.0 + 1e-9),
                "alpha {alpha}: {norm} > {last}"
            );
            last = norm;
        }
    }

    #[test]
    fn bilinear_lookup() {
        let grid = Grid::new(4, 4, 1.0).unwrap();
        let values = (0..=4)
            .flat_map(|k| (0..=4).map(move |i| i as f64 + 10.0 * k as f64))
            .collect();
        let sol = QrmSolution {
            grid,
            values,
            functional_value: 0.0,
            residual_l2: 0.0,
            iterations: 0,
            converged: true,
            relative_gradient: 0.0,
            history: vec![],
        };
        assert!((sol.value_at(0.3, 0.6).unwrap() - (1.2 + 24.0)).abs() < 1e-12);
        assert_eq!(sol.value_at(1.0, 1.0).unwrap(), 44.0);
        assert!(sol.value_at(0.5, 1.5).is_err());
        assert!(sol.to_csv().lines().count() == 26);
    }

    #[test]
    fn bad_config_is_rejected() {
        let prob = zero_problem(Grid::new(5, 5, 0.1).unwrap());
        for alpha in [0.0, 1.0, -0.5, f64::NAN] {
            assert!(qrm_solve(&prob, &SolverConfig::with_alpha(alpha)).is_err());
        }
    }
}
