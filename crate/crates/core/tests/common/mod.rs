#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tt2fr::fuzzy::{linear_combination, It2TriFou, Tt2Number};
use tt2fr::qp::QpProblem;
use tt2fr::regression::{CoefficientSet, RegressionDataset};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Five sorted values; roughly one in eight draws repeats a neighbour so
/// that degenerate sides show up.
pub fn random_fou(r: &mut impl Rng) -> It2TriFou {
    let mut v = [0.0; 5];
    let mut acc = r.gen_range(-50.0..50.0);
    for (k, slot) in v.iter_mut().enumerate() {
        if k > 0 && r.gen_bool(0.875) {
            acc += r.gen_range(0.01..10.0);
        }
        *slot = acc;
    }
    It2TriFou::from_array(v).unwrap()
}

pub fn random_tt2(r: &mut impl Rng) -> Tt2Number {
    let apex = if r.gen_bool(0.5) { 0.5 } else { r.gen_range(0.0..=1.0) };
    Tt2Number::new(random_fou(r), apex).unwrap()
}

/// Strictly increasing supports, apex strictly inside the grade interval.
pub fn random_proper_tt2(r: &mut impl Rng) -> Tt2Number {
    let mut v = [0.0; 5];
    let mut acc = r.gen_range(-50.0..50.0);
    for slot in v.iter_mut() {
        *slot = acc;
        acc += r.gen_range(0.05..10.0);
    }
    let apex = if r.gen_bool(0.5) { 0.5 } else { r.gen_range(0.05..0.95) };
    Tt2Number::new(It2TriFou::from_array(v).unwrap(), apex).unwrap()
}

pub fn arb_fou() -> impl Strategy<Value = It2TriFou> {
    (
        -100.0..100.0f64,
        prop::collection::vec(prop_oneof![1 => Just(0.0), 7 => 0.0..20.0f64], 4),
    )
        .prop_map(|(start, gaps)| {
            let mut v = [start; 5];
            for k in 1..5 {
                v[k] = v[k - 1] + gaps[k - 1];
            }
            It2TriFou::from_array(v).unwrap()
        })
}

pub fn arb_tt2() -> impl Strategy<Value = Tt2Number> {
    (arb_fou(), prop_oneof![Just(0.5), 0.0..=1.0f64]).prop_map(|(f, a)| Tt2Number::new(f, a).unwrap())
}

pub fn arb_nonneg_fou() -> impl Strategy<Value = It2TriFou> {
    (0.0..10.0f64, prop::collection::vec(0.0..5.0f64, 4)).prop_map(|(start, gaps)| {
        let mut v = [start; 5];
        for k in 1..5 {
            v[k] = v[k - 1] + gaps[k - 1];
        }
        It2TriFou::from_array(v).unwrap()
    })
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    // f(lo) and f(hi) have opposite signs (or one is zero)
    let flo = f(lo);
    if flo == 0.0 {
        return lo;
    }
    if f(hi) == 0.0 {
        return hi;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let fm = f(mid);
        if fm == 0.0 || (hi - lo).abs() < 1e-15 * (1.0 + mid.abs()) {
            return mid;
        }
        if (fm > 0.0) == (flo > 0.0) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Geometric h-cut of one side of a proper type-2 number.
///
/// The lower membership leg is extended to the anchor abscissa, the secondary
/// triangle over `[extended grade, 0]` is cut at `h` by root finding on each
/// leg, and the line from the peak through each cut grade is intersected
/// with zero membership, again by root finding. Returns `(inner, outer)`.
fn geometric_side(anchor: f64, inner_knot: f64, peak: f64, apex_fraction: f64, h: f64) -> (f64, f64) {
    // straight line through (inner_knot, 0) and (peak, 1), evaluated at anchor
    let leg = |x: f64| (x - inner_knot) / (peak - inner_knot);
    let lo = leg(anchor);
    let hi = 0.0;
    let apex = lo + apex_fraction * (hi - lo);
    let grade = |u: f64| {
        if u <= apex {
            if apex == lo {
                1.0
            } else {
                (u - lo) / (apex - lo)
            }
        } else if hi == apex {
            1.0
        } else {
            (hi - u) / (hi - apex)
        }
    };
    let u_inner = if apex == lo { lo } else { bisect(lo, apex, |u| grade(u) - h) };
    let u_outer = if apex == hi { hi } else { bisect(apex, hi, |u| grade(u) - h) };
    let support = |u: f64| {
        // line through (peak, 1) and (anchor, u); find its zero between them
        let line = |x: f64| 1.0 + (u - 1.0) * (x - peak) / (anchor - peak);
        bisect(anchor, peak, line)
    };
    (support(u_inner), support(u_outer))
}

/// `(a_low, a_up, peak, c_low, c_up)` of the reduced footprint, computed
/// geometrically. Requires strictly increasing supports.
pub fn geometric_reduce(t: &Tt2Number, h: f64) -> [f64; 5] {
    let f = t.fou;
    let (x1, x2) = geometric_side(f.a_low, f.a_up, f.peak, t.apex_fraction, h);
    let (x3, x4) = geometric_side(f.c_up, f.c_low, f.peak, t.apex_fraction, h);
    [x2, x1, f.peak, x3, x4]
}

/// Random coefficient footprints with nonnegative, strictly spread supports.
pub fn random_coefficients(r: &mut impl Rng, q: usize) -> CoefficientSet {
    let coeffs = (0..q)
        .map(|_| {
            let mut v = [0.0; 5];
            let mut acc = r.gen_range(0.0..2.0);
            for slot in v.iter_mut() {
                *slot = acc;
                acc += r.gen_range(0.05..1.0);
            }
            It2TriFou::from_array(v).unwrap()
        })
        .collect();
    CoefficientSet::new(coeffs).unwrap()
}

/// Coefficients whose lower membership is crisp: `a_up = peak = c_low`.
pub fn random_crisp_lmf_coefficients(r: &mut impl Rng, q: usize) -> CoefficientSet {
    let coeffs = (0..q)
        .map(|_| {
            let a_low = r.gen_range(0.0..2.0);
            let peak = a_low + r.gen_range(0.05..2.0);
            let c_up = peak + r.gen_range(0.05..2.0);
            It2TriFou::new(a_low, peak, peak, peak, c_up).unwrap()
        })
        .collect();
    CoefficientSet::new(coeffs).unwrap()
}

pub fn random_inputs(r: &mut impl Rng, n: usize, q: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..q).map(|_| r.gen_range(1.0..10.0)).collect()).collect()
}

/// Noiseless data: each output is the coefficient combination of its inputs
/// with a symmetric secondary membership.
pub fn exact_dataset(coeffs: &CoefficientSet, inputs: Vec<Vec<f64>>) -> RegressionDataset {
    let outputs = inputs
        .iter()
        .map(|x| Tt2Number::symmetric(linear_combination(coeffs.as_slice(), x).unwrap()))
        .collect();
    RegressionDataset::new(inputs, outputs).unwrap()
}

/// Strictly convex QP over `[-2, 2]^n` intersected with a few random half
/// spaces that keep a random interior point feasible. Hessian eigenvalues
/// lie in `[1, 3]`.
pub fn random_convex_qp(r: &mut impl Rng, n: usize) -> QpProblem {
    let m = DMatrix::from_fn(n, n, |_, _| r.gen_range(-1.0..1.0));
    let qr = m.qr();
    let q = qr.q();
    let eig = DMatrix::from_diagonal(&DVector::from_fn(n, |_, _| r.gen_range(1.0..3.0)));
    let h = &q * eig * q.transpose();
    let g = DVector::from_fn(n, |_, _| r.gen_range(-6.0..6.0));

    let extra = r.gen_range(0..=2);
    let inside = DVector::from_fn(n, |_, _| r.gen_range(-1.0..1.0));
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut rhs = Vec::new();
    for i in 0..n {
        let mut e = vec![0.0; n];
        e[i] = 1.0;
        rows.push(e.clone());
        rhs.push(2.0);
        e[i] = -1.0;
        rows.push(e);
        rhs.push(2.0);
    }
    for _ in 0..extra {
        let a: Vec<f64> = (0..n).map(|_| r.gen_range(-1.0..1.0)).collect();
        let ax: f64 = a.iter().zip(inside.iter()).map(|(ai, xi)| ai * xi).sum();
        rows.push(a);
        rhs.push(ax + r.gen_range(0.2..1.5));
    }
    let a = DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j]);
    QpProblem::new(h, g, r.gen_range(-1.0..1.0), a, DVector::from_vec(rhs)).unwrap()
}
