//! Triangular type-1, interval type-2 and triangular type-2 fuzzy numbers.
//!
//! All types are plain immutable values. Supports are closed: the support
//! endpoints carry membership exactly zero and only the peak carries one.

use std::ops::Add;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Triangular membership of `x` for the triangle `(left, peak, right)`.
///
/// Zero-width legs are treated as vertical: the peak itself has membership 1.
fn triangle(left: f64, peak: f64, right: f64, x: f64) -> f64 {
    if x == peak {
        1.0
    } else if x <= left || x >= right {
        0.0
    } else if x < peak {
        (x - left) / (peak - left)
    } else {
        (right - x) / (right - peak)
    }
}

/// A normal triangular type-1 fuzzy number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TriT1Number {
    pub left: f64,
    pub peak: f64,
    pub right: f64,
}

impl TriT1Number {
    pub fn new(left: f64, peak: f64, right: f64) -> Result<Self> {
        if !(left.is_finite() && peak.is_finite() && right.is_finite()) {
            return Err(Error::NonFinite("triangular number"));
        }
        if !(left <= peak && peak <= right) {
            return Err(Error::Ordering(format!(
                "triangular number requires left <= peak <= right, got ({left}, {peak}, {right})"
            )));
        }
        Ok(Self { left, peak, right })
    }

    pub fn crisp(value: f64) -> Self {
        Self {
            left: value,
            peak: value,
            right: value,
        }
    }

    pub fn membership(&self, x: f64) -> f64 {
        triangle(self.left, self.peak, self.right, x)
    }

    pub fn centroid(&self) -> f64 {
        (self.left + self.peak + self.right) / 3.0
    }
}

/// Perfectly normal triangular interval type-2 footprint of uncertainty.
///
/// The upper membership function is the triangle `(a_low, peak, c_up)` and the
/// lower one is `(a_up, peak, c_low)`. Both reach membership 1 at `peak`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct It2TriFou {
    pub a_low: f64,
    pub a_up: f64,
    pub peak: f64,
    pub c_low: f64,
    pub c_up: f64,
}

impl It2TriFou {
    pub fn new(a_low: f64, a_up: f64, peak: f64, c_low: f64, c_up: f64) -> Result<Self> {
        let fou = Self {
            a_low,
            a_up,
            peak,
            c_low,
            c_up,
        };
        fou.validate()?;
        Ok(fou)
    }

    pub fn from_array(v: [f64; 5]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3], v[4])
    }

    pub fn crisp(value: f64) -> Self {
        Self {
            a_low: value,
            a_up: value,
            peak: value,
            c_low: value,
            c_up: value,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.to_array();
        if v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("footprint"));
        }
        if v.windows(2).any(|w| w[0] > w[1]) {
            return Err(Error::Ordering(format!(
                "footprint requires a_low <= a_up <= peak <= c_low <= c_up, got {v:?}"
            )));
        }
        Ok(())
    }

    pub fn to_array(&self) -> [f64; 5] {
        [self.a_low, self.a_up, self.peak, self.c_low, self.c_up]
    }

    pub fn umf(&self) -> TriT1Number {
        TriT1Number {
            left: self.a_low,
            peak: self.peak,
            right: self.c_up,
        }
    }

    pub fn lmf(&self) -> TriT1Number {
        TriT1Number {
            left: self.a_up,
            peak: self.peak,
            right: self.c_low,
        }
    }

    pub fn umf_at(&self, x: f64) -> f64 {
        self.umf().membership(x)
    }

    pub fn lmf_at(&self, x: f64) -> f64 {
        self.lmf().membership(x)
    }

    pub fn is_crisp(&self) -> bool {
        self.a_low == self.c_up
    }

    /// Multiplies every support abscissa by a strictly positive factor.
    pub fn scale(&self, k: f64) -> Result<Self> {
        if !k.is_finite() || k <= 0.0 {
            return Err(Error::NonPositiveInput(k));
        }
        Ok(Self {
            a_low: self.a_low * k,
            a_up: self.a_up * k,
            peak: self.peak * k,
            c_low: self.c_low * k,
            c_up: self.c_up * k,
        })
    }
}

impl Add for It2TriFou {
    type Output = It2TriFou;

    fn add(self, rhs: It2TriFou) -> It2TriFou {
        It2TriFou {
            a_low: self.a_low + rhs.a_low,
            a_up: self.a_up + rhs.a_up,
            peak: self.peak + rhs.peak,
            c_low: self.c_low + rhs.c_low,
            c_up: self.c_up + rhs.c_up,
        }
    }
}

/// Sum of `coeffs[j] * x_row[j]`, accumulated left to right over `j`.
///
/// Every input must be strictly positive so that scaling preserves the
/// support ordering.
pub fn linear_combination(coeffs: &[It2TriFou], x_row: &[f64]) -> Result<It2TriFou> {
    if coeffs.len() != x_row.len() {
        return Err(Error::DimensionMismatch {
            expected: coeffs.len(),
            found: x_row.len(),
        });
    }
    let mut acc = It2TriFou::crisp(0.0);
    for (c, &x) in coeffs.iter().zip(x_row) {
        acc = acc + c.scale(x)?;
    }
    Ok(acc)
}

/// Triangular type-2 fuzzy number: a footprint plus a triangular secondary
/// membership whose apex sits at `apex_fraction` of the way from the lower to
/// the upper primary grade.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tt2Number {
    pub fou: It2TriFou,
    pub apex_fraction: f64,
}

impl Tt2Number {
    pub const SYMMETRIC: f64 = 0.5;

    pub fn new(fou: It2TriFou, apex_fraction: f64) -> Result<Self> {
        fou.validate()?;
        if !(0.0..=1.0).contains(&apex_fraction) {
            return Err(Error::OutOfRange {
                name: "apex_fraction",
                value: apex_fraction,
            });
        }
        Ok(Self { fou, apex_fraction })
    }

    pub fn symmetric(fou: It2TriFou) -> Self {
        Self {
            fou,
            apex_fraction: Self::SYMMETRIC,
        }
    }

    /// Secondary grade of primary membership `u` at abscissa `x`.
    ///
    /// The secondary function is a normal triangle over `[lmf(x), umf(x)]`.
    pub fn secondary_grade(&self, x: f64, u: f64) -> f64 {
        let lo = self.fou.lmf_at(x);
        let hi = self.fou.umf_at(x);
        if hi == lo {
            return if u == lo { 1.0 } else { 0.0 };
        }
        let apex = lo + self.apex_fraction * (hi - lo);
        triangle(lo, apex, hi, u)
    }

    /// The type-1 number this collapses to when the footprint has no width.
    pub fn as_type1(&self) -> Option<TriT1Number> {
        let f = &self.fou;
        (f.a_low == f.a_up && f.c_low == f.c_up).then(|| f.umf())
    }
}
