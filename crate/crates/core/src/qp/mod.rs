//! Small dense quadratic programs:
//!
//! ```text
//!     minimize    1/2 x' H x + g' x + c
//!     subject to  A x <= b
//! ```
//!
//! `H` may be indefinite. Convex problems are solved to global optimality
//! with a primal active-set method. Indefinite problems are solved from a
//! set of seeded starting points and the best KKT point is returned; those
//! solutions are certified stationary, not globally optimal.

mod active_set;
mod dual;
mod oracle;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use active_set::{LocalResult, LocalSolver, LocalStatus};
pub use oracle::{brute_force_oracle, OracleResult};

#[derive(Debug, Clone, PartialEq)]
pub struct QpProblem {
    hessian: DMatrix<f64>,
    gradient: DVector<f64>,
    constant: f64,
    constraints: DMatrix<f64>,
    rhs: DVector<f64>,
}

impl QpProblem {
    /// Builds a problem; the Hessian is replaced by its symmetric part.
    pub fn new(
        hessian: DMatrix<f64>,
        gradient: DVector<f64>,
        constant: f64,
        constraints: DMatrix<f64>,
        rhs: DVector<f64>,
    ) -> Result<Self> {
        let n = gradient.len();
        if hessian.nrows() != n || hessian.ncols() != n {
            return Err(Error::InvalidProblem(format!(
                "hessian is {}x{} but gradient has length {n}",
                hessian.nrows(),
                hessian.ncols()
            )));
        }
        if constraints.ncols() != n || constraints.nrows() != rhs.len() {
            return Err(Error::InvalidProblem(format!(
                "constraint matrix is {}x{} with {} right-hand sides for {n} variables",
                constraints.nrows(),
                constraints.ncols(),
                rhs.len()
            )));
        }
        let finite = hessian.iter().chain(gradient.iter()).chain(constraints.iter()).chain(rhs.iter());
        if !constant.is_finite() || finite.clone().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quadratic program"));
        }
        let hessian = (&hessian + hessian.transpose()) * 0.5;
        Ok(Self {
            hessian,
            gradient,
            constant,
            constraints,
            rhs,
        })
    }

    pub fn dim(&self) -> usize {
        self.gradient.len()
    }

    pub fn num_constraints(&self) -> usize {
        self.rhs.len()
    }

    pub fn hessian(&self) -> &DMatrix<f64> {
        &self.hessian
    }

    pub fn gradient_vec(&self) -> &DVector<f64> {
        &self.gradient
    }

    pub fn constant(&self) -> f64 {
        self.constant
    }

    pub fn constraint_matrix(&self) -> &DMatrix<f64> {
        &self.constraints
    }

    pub fn constraint_rhs(&self) -> &DVector<f64> {
        &self.rhs
    }

    pub fn objective(&self, x: &DVector<f64>) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.gradient.dot(x) + self.constant
    }

    pub fn gradient_at(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.hessian * x + &self.gradient
    }

    /// Per-row constraint values `a_i x - b_i`; feasible rows are `<= 0`.
    pub fn residuals(&self, x: &DVector<f64>) -> DVector<f64> {
        &self.constraints * x - &self.rhs
    }

    pub fn max_violation(&self, x: &DVector<f64>) -> f64 {
        self.residuals(x).iter().fold(0.0_f64, |m, &v| m.max(v))
    }

    /// Largest absolute eigenvalue of the Hessian.
    pub fn spectral_scale(&self) -> f64 {
        SymmetricEigen::new(self.hessian.clone())
            .eigenvalues
            .iter()
            .fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    fn with_box(&self, bound: f64) -> QpProblem {
        self.with_box_around(&DVector::zeros(self.dim()), bound)
    }

    /// Appends the rows `|x_j - center_j| <= bound`.
    fn with_box_around(&self, center: &DVector<f64>, bound: f64) -> QpProblem {
        let n = self.dim();
        let m = self.num_constraints();
        let mut a = DMatrix::zeros(m + 2 * n, n);
        a.rows_mut(0, m).copy_from(&self.constraints);
        let mut b = DVector::zeros(m + 2 * n);
        b.rows_mut(0, m).copy_from(&self.rhs);
        for j in 0..n {
            a[(m + 2 * j, j)] = 1.0;
            a[(m + 2 * j + 1, j)] = -1.0;
            b[m + 2 * j] = center[j] + bound;
            b[m + 2 * j + 1] = bound - center[j];
        }
        QpProblem {
            constraints: a,
            rhs: b,
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Convexity {
    Convex,
    Indefinite,
}

pub fn classify(p: &QpProblem) -> Convexity {
    let eig = SymmetricEigen::new(p.hessian.clone()).eigenvalues;
    let scale = eig.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.iter().copied().fold(f64::INFINITY, f64::min);
    if eig.is_empty() || min >= -1e-10 * scale {
        Convexity::Convex
    } else {
        Convexity::Indefinite
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    /// Absolute tolerance on `A x - b`.
    pub feasibility_tol: f64,
    /// Relative tolerance on the KKT residual.
    pub stationarity_tol: f64,
    /// Iteration cap for each local solve.
    pub max_iterations: usize,
    /// Starting points for indefinite problems.
    pub starts: usize,
    pub seed: u64,
    /// Artificial box `|x_i| <= bound` added to indefinite problems.
    pub box_bound: Option<f64>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            stationarity_tol: 1e-6,
            max_iterations: 10_000,
            starts: 16,
            seed: 0,
            box_bound: Some(1e9),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QpStatus {
    OptimalConvex,
    LocalStationary,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QpSolution {
    /// Empty when the problem is infeasible.
    pub point: Vec<f64>,
    pub objective_value: f64,
    pub kkt_residual: f64,
    pub status: QpStatus,
    /// Constraints held at equality in the final working set.
    pub active_set: Vec<usize>,
    /// For infeasible problems, the constraint the feasibility phase could not add.
    pub blocking_constraint: Option<usize>,
}

impl QpSolution {
    fn infeasible(index: usize) -> Self {
        Self {
            point: Vec::new(),
            objective_value: f64::NAN,
            kkt_residual: f64::NAN,
            status: QpStatus::Infeasible,
            active_set: Vec::new(),
            blocking_constraint: Some(index),
        }
    }

    pub fn is_solved(&self) -> bool {
        matches!(self.status, QpStatus::OptimalConvex | QpStatus::LocalStationary)
    }
}

/// Nonnegative least squares, `min ||e l - f||` over `l >= 0` (Lawson-Hanson).
fn nnls(e: &DMatrix<f64>, f: &DVector<f64>) -> DVector<f64> {
    let k = e.ncols();
    let mut l = DVector::zeros(k);
    let mut passive = vec![false; k];
    let tol = 1e-12 * (1.0 + e.norm() * f.norm());
    for _ in 0..(3 * k + 10) {
        let w = e.transpose() * (f - e * &l);
        let next = (0..k)
            .filter(|&j| !passive[j] && w[j] > tol)
            .max_by(|&a, &b| w[a].total_cmp(&w[b]));
        let Some(j) = next else { break };
        passive[j] = true;
        loop {
            let idx: Vec<usize> = (0..k).filter(|&j| passive[j]).collect();
            let ep = DMatrix::from_fn(e.nrows(), idx.len(), |r, c| e[(r, idx[c])]);
            let s = ep.svd(true, true).solve(f, 1e-14).expect("svd with both factors");
            if s.iter().all(|&v| v > 0.0) {
                for (c, &j) in idx.iter().enumerate() {
                    l[j] = s[c];
                }
                break;
            }
            let mut alpha = f64::INFINITY;
            for (c, &j) in idx.iter().enumerate() {
                if s[c] <= 0.0 {
                    alpha = alpha.min(l[j] / (l[j] - s[c]));
                }
            }
            for (c, &j) in idx.iter().enumerate() {
                l[j] += alpha * (s[c] - l[j]);
                if l[j] <= 1e-15 {
                    l[j] = 0.0;
                    passive[j] = false;
                }
            }
        }
    }
    l
}

/// Relative KKT residual at `x`:
/// `min_{l >= 0} ||grad + A_act' l|| / (1 + ||grad||)`, where the active
/// constraints are those within `active_tol` of equality.
pub fn kkt_residual(p: &QpProblem, x: &DVector<f64>, active_tol: f64) -> f64 {
    let grad = p.gradient_at(x);
    let res = p.residuals(x);
    let active: Vec<usize> = (0..p.num_constraints())
        .filter(|&i| res[i] >= -active_tol * (1.0 + p.rhs[i].abs()))
        .collect();
    let denom = 1.0 + grad.norm();
    if active.is_empty() {
        return grad.norm() / denom;
    }
    let e = DMatrix::from_fn(p.dim(), active.len(), |r, c| p.constraints[(active[c], r)]);
    let l = nnls(&e, &(-&grad));
    (grad + e * l).norm() / denom
}

fn local_solver<'a>(p: &'a QpProblem, cfg: &SolverConfig, scale: f64) -> LocalSolver<'a> {
    LocalSolver {
        problem: p,
        max_iterations: cfg.max_iterations,
        hessian_scale: scale,
    }
}

fn projection_tol(cfg: &SolverConfig) -> f64 {
    cfg.feasibility_tol * 1e-4
}

fn finish(original: &QpProblem, cfg: &SolverConfig, local: LocalResult, status: QpStatus) -> QpSolution {
    let m = original.num_constraints();
    let kkt = kkt_residual(original, &local.x, cfg.feasibility_tol);
    let mut active_set: Vec<usize> = local.working.into_iter().filter(|&i| i < m).collect();
    active_set.sort_unstable();
    QpSolution {
        objective_value: original.objective(&local.x),
        point: local.x.iter().copied().collect(),
        kkt_residual: kkt,
        status,
        active_set,
        blocking_constraint: None,
    }
}

fn unbounded(x: &DVector<f64>) -> QpSolution {
    QpSolution {
        point: x.iter().copied().collect(),
        objective_value: f64::NEG_INFINITY,
        kkt_residual: f64::NAN,
        status: QpStatus::Unbounded,
        active_set: Vec::new(),
        blocking_constraint: None,
    }
}

/// Solves `p`. Pure in `(p, cfg)`: identical inputs give bit-identical output.
pub fn solve(p: &QpProblem, cfg: &SolverConfig) -> QpSolution {
    let n = p.dim();
    let scale = p.spectral_scale();
    let origin = DVector::zeros(n);

    match classify(p) {
        Convexity::Convex => {
            let x0 = match dual::project(&p.constraints, &p.rhs, &origin, projection_tol(cfg)) {
                Ok(x) => x,
                Err(dual::Infeasible(i)) => return QpSolution::infeasible(i),
            };
            let local = local_solver(p, cfg, scale).run(x0);
            match local.status {
                LocalStatus::Unbounded => unbounded(&local.x),
                _ => finish(p, cfg, local, QpStatus::OptimalConvex),
            }
        }
        Convexity::Indefinite => {
            let boxed = cfg.box_bound.map(|b| p.with_box(b));
            let work = boxed.as_ref().unwrap_or(p);
            let x0 = match dual::project(&work.constraints, &work.rhs, &origin, projection_tol(cfg)) {
                Ok(x) => x,
                Err(dual::Infeasible(i)) => return QpSolution::infeasible(i),
            };
            let starts = multi_starts(work, cfg, &x0);
            let results: Vec<LocalResult> = starts
                .into_par_iter()
                .map(|s| local_solver(work, cfg, scale).run(s))
                .collect();

            if let Some(r) = results.iter().find(|r| r.status == LocalStatus::Unbounded) {
                return unbounded(&r.x);
            }
            // runs that hit the iteration cap only count when nothing converged
            let any_stationary = results.iter().any(|r| r.status == LocalStatus::Stationary);
            let mut best: Option<&LocalResult> = None;
            for r in results
                .iter()
                .filter(|r| !any_stationary || r.status == LocalStatus::Stationary)
            {
                if best.is_none_or(|b| work.objective(&r.x) < work.objective(&b.x)) {
                    best = Some(r);
                }
            }
            let best = best.expect("at least one start").clone();
            if let Some(bound) = cfg.box_bound {
                if best.x.iter().any(|v| v.abs() >= bound * (1.0 - 1e-9)) {
                    return unbounded(&best.x);
                }
            }
            finish(p, cfg, best, QpStatus::LocalStationary)
        }
    }
}

/// Deterministic starting points: the projection of the origin, projected
/// random samples around it, and (for small problems) vertices reached by
/// minimising random linear objectives.
fn multi_starts(work: &QpProblem, cfg: &SolverConfig, x0: &DVector<f64>) -> Vec<DVector<f64>> {
    let n = work.dim();
    let count = cfg.starts.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let radius = 1.0 + x0.amax();
    let use_vertices = n <= 12;

    // draw all random numbers up front so parallel work stays deterministic
    let draws: Vec<(bool, DVector<f64>)> = (1..count)
        .map(|k| {
            let vertex = use_vertices && k % 2 == 0;
            let v = DVector::from_fn(n, |_, _| rng.gen_range(-1.0..1.0));
            (vertex, v)
        })
        .collect();

    let mut starts = vec![x0.clone()];
    let extra: Vec<DVector<f64>> = draws
        .into_par_iter()
        .map(|(vertex, v)| {
            if vertex {
                // vertices of the feasible set intersected with a box around x0
                let local_box = work.with_box_around(x0, 10.0 * radius);
                let lp = QpProblem {
                    hessian: DMatrix::zeros(n, n),
                    gradient: v,
                    constant: 0.0,
                    ..local_box
                };
                let r = local_solver(&lp, cfg, 0.0).run(x0.clone());
                if r.status == LocalStatus::Unbounded {
                    x0.clone()
                } else {
                    r.x
                }
            } else {
                let y = x0 + v * radius;
                dual::project(&work.constraints, &work.rhs, &y, projection_tol(cfg)).unwrap_or_else(|_| x0.clone())
            }
        })
        .collect();
    starts.extend(extra);
    starts
}
