//! Exhaustive grid search over a box, for checking solver output on tiny
//! problems.

use nalgebra::DVector;

use super::QpProblem;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct OracleResult {
    pub point: Vec<f64>,
    pub objective: f64,
}

/// Best feasible point on a `resolution`-per-axis grid over `bounds`.
///
/// A grid point is feasible when every constraint holds to `1e-9`. Ties keep
/// the first point in lexicographic grid order.
pub fn brute_force_oracle(p: &QpProblem, bounds: &[(f64, f64)], resolution: usize) -> Result<OracleResult> {
    let n = p.dim();
    if n > 4 {
        return Err(Error::OracleDimension(n));
    }
    if bounds.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: bounds.len(),
        });
    }
    if resolution < 2 || bounds.iter().any(|(lo, hi)| !(lo.is_finite() && hi.is_finite() && lo <= hi)) {
        return Err(Error::InvalidProblem("oracle needs a finite box and resolution >= 2".into()));
    }
    let axis = |k: usize, i: usize| {
        let (lo, hi) = bounds[k];
        lo + (hi - lo) * i as f64 / (resolution - 1) as f64
    };

    let total = resolution.pow(n as u32);
    let mut best: Option<OracleResult> = None;
    let mut x = DVector::zeros(n);
    for flat in 0..total {
        let mut rem = flat;
        for k in (0..n).rev() {
            x[k] = axis(k, rem % resolution);
            rem /= resolution;
        }
        if p.max_violation(&x) > 1e-9 {
            continue;
        }
        let f = p.objective(&x);
        if best.as_ref().is_none_or(|b| f < b.objective) {
            best = Some(OracleResult {
                point: x.iter().copied().collect(),
                objective: f,
            });
        }
    }
    best.ok_or(Error::EmptyFeasibleGrid)
}
