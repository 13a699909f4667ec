//! Goldfarb-Idnani dual active-set method specialised to Euclidean
//! projection onto `{x : A x <= b}`.
//!
//! Starting from the unconstrained minimiser, the most violated constraint
//! is added each round while dual feasibility is maintained. A constraint
//! that cannot be added (its normal is spanned by the active normals and no
//! multiplier can be reduced) proves the polyhedron empty.

use nalgebra::{DMatrix, DVector};

/// Projection failed because the constraint set is empty. Holds the index of
/// the constraint that could not be satisfied.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) struct Infeasible(pub usize);

fn least_squares(cols: &DMatrix<f64>, rhs: &DVector<f64>) -> DVector<f64> {
    let svd = cols.clone().svd(true, true);
    svd.solve(rhs, 1e-13).expect("svd computed with both factors")
}

fn active_normals(a: &DMatrix<f64>, active: &[usize]) -> DMatrix<f64> {
    // columns are the outward normals of the active constraints
    let n = a.ncols();
    DMatrix::from_fn(n, active.len(), |r, c| a[(active[c], r)])
}

/// Euclidean projection of `y` onto `{x : a x <= b}`.
///
/// `tol` is the absolute violation (per unit row norm) below which a
/// constraint counts as satisfied.
pub(crate) fn project(
    a: &DMatrix<f64>,
    b: &DVector<f64>,
    y: &DVector<f64>,
    tol: f64,
) -> Result<DVector<f64>, Infeasible> {
    let m = a.nrows();
    let mut x = y.clone();
    if m == 0 {
        return Ok(x);
    }
    let row_norms: Vec<f64> = (0..m).map(|i| a.row(i).norm().max(f64::MIN_POSITIVE)).collect();

    let mut active: Vec<usize> = Vec::new();
    let mut mult: Vec<f64> = Vec::new();
    let max_rounds = 50 * (m + a.ncols()) + 100;

    for _ in 0..max_rounds {
        // most violated constraint, measured per unit normal
        let mut pick: Option<(usize, f64)> = None;
        for i in 0..m {
            if active.contains(&i) {
                continue;
            }
            let viol = (a.row(i).dot(&x.transpose()) - b[i]) / row_norms[i];
            if viol > tol && pick.is_none_or(|(_, v)| viol > v) {
                pick = Some((i, viol));
            }
        }
        let Some((p, _)) = pick else {
            return Ok(x);
        };
        let np: DVector<f64> = a.row(p).transpose();
        let mut u_p = 0.0;

        loop {
            let (z, r) = if active.is_empty() {
                (np.clone(), DVector::zeros(0))
            } else {
                let nmat = active_normals(a, &active);
                let r = least_squares(&nmat, &np);
                (&np - &nmat * &r, r)
            };
            let z_small = z.norm() <= 1e-10 * np.norm();

            // partial step limited by an active multiplier reaching zero
            let mut t1 = f64::INFINITY;
            let mut drop = None;
            for (k, &rk) in r.iter().enumerate() {
                if rk > 0.0 {
                    let ratio = mult[k] / rk;
                    if ratio < t1 {
                        t1 = ratio;
                        drop = Some(k);
                    }
                }
            }
            let slack = a.row(p).dot(&x.transpose()) - b[p];
            let t2 = if z_small {
                f64::INFINITY
            } else {
                slack / z.dot(&np)
            };

            if z_small && drop.is_none() {
                return Err(Infeasible(p));
            }

            if t2 <= t1 {
                x -= &z * t2;
                for (k, rk) in r.iter().enumerate() {
                    mult[k] -= t2 * rk;
                }
                u_p += t2;
                active.push(p);
                mult.push(u_p);
                break;
            }

            let k = drop.expect("finite t1 has a blocking multiplier");
            if !z_small {
                x -= &z * t1;
            }
            for (j, rj) in r.iter().enumerate() {
                mult[j] -= t1 * rj;
            }
            u_p += t1;
            active.remove(k);
            mult.remove(k);
        }
    }
    Ok(x)
}
