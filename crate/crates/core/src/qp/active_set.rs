//! Primal active-set method for quadratic programs with a possibly
//! indefinite Hessian.
//!
//! From a feasible point the method keeps a working set of constraints held
//! at equality. On the null space of the working set it takes a Newton step
//! when the reduced Hessian is positive definite, and otherwise follows a
//! direction of negative (or zero) curvature until a constraint blocks. At a
//! face minimiser the constraint with the most negative multiplier is
//! released. The result is a KKT point that is second-order stationary on
//! its final face; with a convex objective it is a global minimiser.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use super::QpProblem;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LocalStatus {
    Stationary,
    Unbounded,
    IterationLimit,
}

#[derive(Debug, Clone)]
pub(crate) struct LocalResult {
    pub x: DVector<f64>,
    pub working: Vec<usize>,
    pub status: LocalStatus,
}

/// Orthonormal basis of the null space of the rows of `a` selected by `rows`.
fn null_space(a: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    let n = a.ncols();
    let mut basis: Vec<DVector<f64>> = Vec::with_capacity(n);
    let orthogonalize = |v: &mut DVector<f64>, basis: &[DVector<f64>]| {
        // two passes of modified Gram-Schmidt
        for _ in 0..2 {
            for q in basis {
                let c = q.dot(v);
                v.axpy(-c, q, 1.0);
            }
        }
    };
    for &i in rows {
        let mut v: DVector<f64> = a.row(i).transpose();
        orthogonalize(&mut v, &basis);
        let norm = v.norm();
        if norm > 1e-12 {
            basis.push(v / norm);
        }
    }
    let range_dim = basis.len();
    // complete with the coordinate vector of largest residual each round;
    // its squared norm is at least (remaining dimension) / n
    while basis.len() < n {
        let mut pick: Option<(f64, DVector<f64>)> = None;
        for e in 0..n {
            let mut v = DVector::zeros(n);
            v[e] = 1.0;
            orthogonalize(&mut v, &basis);
            let norm = v.norm();
            if pick.as_ref().is_none_or(|(best, _)| norm > *best) {
                pick = Some((norm, v));
            }
        }
        let (norm, v) = pick.expect("n > 0");
        if norm <= 1e-8 {
            break;
        }
        basis.push(v / norm);
    }
    let null = &basis[range_dim..];
    DMatrix::from_fn(n, null.len(), |r, c| null[c][r])
}

/// Multipliers `lambda` with `grad + A_W^T lambda = 0` in the least-squares sense.
fn working_multipliers(a: &DMatrix<f64>, working: &[usize], grad: &DVector<f64>) -> DVector<f64> {
    let n = a.ncols();
    let aw_t = DMatrix::from_fn(n, working.len(), |r, c| a[(working[c], r)]);
    let svd = aw_t.svd(true, true);
    svd.solve(&(-grad), 1e-14).expect("svd computed with both factors")
}

enum Direction {
    /// Step to the face minimiser; step length capped at 1.
    Newton(DVector<f64>),
    /// Objective decreases without bound along this ray unless blocked.
    Ray(DVector<f64>),
    Stationary,
}

pub(crate) struct LocalSolver<'a> {
    pub problem: &'a QpProblem,
    pub max_iterations: usize,
    /// Spectral scale of the Hessian, used for curvature thresholds.
    pub hessian_scale: f64,
}

impl LocalSolver<'_> {
    /// `gtol_factor` scales the reduced-gradient tolerance; it is loosened
    /// right after a Newton step so that rounding cannot cause ping-pong.
    fn direction(&self, grad: &DVector<f64>, z: &DMatrix<f64>, gtol_factor: f64) -> Direction {
        if z.ncols() == 0 {
            return Direction::Stationary;
        }
        let h = &self.problem.hessian;
        let rg = z.transpose() * grad;
        let gtol = gtol_factor * 1e-11 * (1.0 + grad.norm());
        let rh = z.transpose() * h * z;
        let rh = (&rh + rh.transpose()) * 0.5;
        let eig = SymmetricEigen::new(rh);
        let ctol = 1e-10 * self.hessian_scale;

        let (imin, lmin) = eig
            .eigenvalues
            .iter()
            .copied()
            .enumerate()
            .fold((0, f64::INFINITY), |acc, (i, v)| if v < acc.1 { (i, v) } else { acc });
        if lmin < -ctol {
            let mut d = z * eig.eigenvectors.column(imin);
            if grad.dot(&d) > 0.0 {
                d = -d;
            }
            return Direction::Ray(d);
        }

        let mut newton = DVector::zeros(z.ncols());
        let mut flat = DVector::zeros(z.ncols());
        for (k, &lam) in eig.eigenvalues.iter().enumerate() {
            let v = eig.eigenvectors.column(k);
            let c = v.dot(&rg);
            if lam > ctol {
                newton.axpy(-c / lam, &v, 1.0);
            } else {
                flat.axpy(c, &v, 1.0);
            }
        }
        if flat.norm() > gtol {
            return Direction::Ray(-(z * flat));
        }
        if rg.norm() <= gtol {
            return Direction::Stationary;
        }
        Direction::Newton(z * newton)
    }

    /// Largest feasible step along `d`, with the index of the blocking
    /// constraint. Under `bland`, ties at a zero step go to the lowest index.
    fn ratio_test(&self, x: &DVector<f64>, d: &DVector<f64>, working: &[usize], bland: bool) -> (f64, Option<usize>) {
        let a = &self.problem.constraints;
        let b = &self.problem.rhs;
        let dn = d.norm();
        let mut best = (f64::INFINITY, None);
        for i in 0..a.nrows() {
            if working.contains(&i) {
                continue;
            }
            let row = a.row(i);
            let ad = row.dot(&d.transpose());
            if ad <= 1e-12 * row.norm() * dn {
                continue;
            }
            let slack = (b[i] - row.dot(&x.transpose())).max(0.0);
            let step = slack / ad;
            if step < best.0 {
                best = (step, Some(i));
            }
            if bland && step == 0.0 {
                break;
            }
        }
        best
    }

    pub fn run(&self, x0: DVector<f64>) -> LocalResult {
        let p = self.problem;
        let mut x = x0;
        let mut working: Vec<usize> = Vec::new();
        let mut after_newton = false;
        // consecutive zero-length steps; past a few, Bland's rule prevents cycling
        let mut stalled = 0usize;

        for _ in 0..self.max_iterations {
            let grad = p.gradient_at(&x);
            let z = null_space(&p.constraints, &working);
            let dir = self.direction(&grad, &z, if after_newton { 1e3 } else { 1.0 });
            after_newton = false;
            let bland = stalled > 3;

            match dir {
                Direction::Stationary => {
                    if working.is_empty() {
                        return LocalResult {
                            x,
                            working,
                            status: LocalStatus::Stationary,
                        };
                    }
                    let lambda = working_multipliers(&p.constraints, &working, &grad);
                    let mtol = 1e-10 * (1.0 + grad.norm());
                    let negative = lambda.iter().enumerate().filter(|(_, &v)| v < -mtol);
                    let pick = if bland {
                        negative.min_by_key(|(k, _)| working[*k]).map(|(k, _)| k)
                    } else {
                        negative.min_by(|a, b| a.1.total_cmp(b.1)).map(|(k, _)| k)
                    };
                    match pick {
                        None => {
                            return LocalResult {
                                x,
                                working,
                                status: LocalStatus::Stationary,
                            }
                        }
                        Some(k) => {
                            working.remove(k);
                        }
                    }
                }
                Direction::Newton(step) => {
                    let (alpha, block) = self.ratio_test(&x, &step, &working, bland);
                    if alpha >= 1.0 {
                        x += step;
                        after_newton = true;
                        stalled = 0;
                    } else {
                        x.axpy(alpha, &step, 1.0);
                        working.push(block.expect("finite step has a blocking constraint"));
                        stalled = if alpha == 0.0 { stalled + 1 } else { 0 };
                    }
                }
                Direction::Ray(d) => {
                    let (alpha, block) = self.ratio_test(&x, &d, &working, bland);
                    match block {
                        None => {
                            return LocalResult {
                                x,
                                working,
                                status: LocalStatus::Unbounded,
                            }
                        }
                        Some(i) => {
                            x.axpy(alpha, &d, 1.0);
                            working.push(i);
                            stalled = if alpha == 0.0 { stalled + 1 } else { 0 };
                        }
                    }
                }
            }
        }
        LocalResult {
            x,
            working,
            status: LocalStatus::IterationLimit,
        }
    }
}
