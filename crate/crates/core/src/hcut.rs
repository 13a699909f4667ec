//! h-cut reduction of triangular type-2 numbers to interval type-2 footprints.
//!
//! At each support endpoint of the upper membership function the secondary
//! membership is a triangle over the primary grades `[y_inner, y_outer]`,
//! where `y_outer` is the upper membership there (zero) and `y_inner` is the
//! lower membership leg extended as a straight line to the same abscissa.
//! Cutting that triangle at level `h` shrinks the grade interval towards the
//! apex; the lines from the peak `(q, 1)` through the cut grades give the new
//! support abscissas.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fuzzy::{It2TriFou, Tt2Number};

/// Secondary membership triangle at one support endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SecondarySlice {
    pub x_anchor: f64,
    pub peak_abscissa: f64,
    pub y_inner: f64,
    pub y_outer: f64,
    pub apex: f64,
}

/// Why a side of a footprint has no secondary slice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SideDegeneracy {
    /// The upper membership leg has zero width; the side is crisp.
    ZeroWidth,
    /// The lower membership leg is vertical at the peak while the upper one
    /// is not, so its extension never reaches the anchor.
    VerticalInnerLeg,
}

/// Footprint obtained by cutting the secondary memberships at level `h`.
///
/// `x2h`/`x4h` are the outer (upper membership) supports and `x1h`/`x3h` the
/// inner (lower membership) supports.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedFou {
    pub h: f64,
    pub x1h: f64,
    pub x2h: f64,
    pub peak: f64,
    pub x3h: f64,
    pub x4h: f64,
}

impl ReducedFou {
    pub fn to_fou(&self) -> It2TriFou {
        It2TriFou {
            a_low: self.x2h,
            a_up: self.x1h,
            peak: self.peak,
            c_low: self.x3h,
            c_up: self.x4h,
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.x2h <= self.x1h && self.x1h <= self.peak && self.peak <= self.x3h && self.x3h <= self.x4h
    }
}

fn check_level(h: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&h) {
        return Err(Error::OutOfRange { name: "h", value: h });
    }
    Ok(())
}

fn apex_of(y_inner: f64, y_outer: f64, apex_fraction: f64) -> f64 {
    if apex_fraction == Tt2Number::SYMMETRIC {
        (y_inner + y_outer) / 2.0
    } else {
        y_inner + apex_fraction * (y_outer - y_inner)
    }
}

pub fn left_slice(t: &Tt2Number) -> Result<SecondarySlice, SideDegeneracy> {
    let f = &t.fou;
    if f.a_low == f.peak {
        return Err(SideDegeneracy::ZeroWidth);
    }
    if f.a_up == f.peak {
        return Err(SideDegeneracy::VerticalInnerLeg);
    }
    let y_inner = (f.a_low - f.a_up) / (f.peak - f.a_up);
    let y_outer = 0.0;
    Ok(SecondarySlice {
        x_anchor: f.a_low,
        peak_abscissa: f.peak,
        y_inner,
        y_outer,
        apex: apex_of(y_inner, y_outer, t.apex_fraction),
    })
}

pub fn right_slice(t: &Tt2Number) -> Result<SecondarySlice, SideDegeneracy> {
    let f = &t.fou;
    if f.c_up == f.peak {
        return Err(SideDegeneracy::ZeroWidth);
    }
    if f.c_low == f.peak {
        return Err(SideDegeneracy::VerticalInnerLeg);
    }
    let y_inner = (f.c_low - f.c_up) / (f.c_low - f.peak);
    let y_outer = 0.0;
    Ok(SecondarySlice {
        x_anchor: f.c_up,
        peak_abscissa: f.peak,
        y_inner,
        y_outer,
        apex: apex_of(y_inner, y_outer, t.apex_fraction),
    })
}

impl SecondarySlice {
    /// Cut grades `(inner, outer)` of the secondary triangle at level `h`.
    pub fn cut_grades(&self, h: f64) -> (f64, f64) {
        let b = self.apex;
        let outer = b + (1.0 - h) * (self.y_outer - b);
        let inner = b - (1.0 - h) * (b - self.y_inner);
        (inner, outer)
    }

    /// Abscissas `(inner, outer)` where the lines from `(q, 1)` through the
    /// cut grades at the anchor cross zero membership.
    pub fn cut_supports(&self, h: f64) -> (f64, f64) {
        let (y_in, y_out) = self.cut_grades(h);
        let q = self.peak_abscissa;
        let dx = self.x_anchor - q;
        debug_assert!(y_in <= 0.0 && y_out <= 0.0);
        let inner = dx / (1.0 - y_in) + q;
        let outer = dx / (1.0 - y_out) + q;
        (inner, outer)
    }
}

/// Supports for a side whose inner leg is vertical: the limit of the closed
/// form as the extended leg's grade tends to minus infinity.
fn vertical_leg_supports(anchor: f64, q: f64, apex_fraction: f64, h: f64) -> (f64, f64) {
    let outer = if h * (1.0 - apex_fraction) > 0.0 { q } else { anchor };
    let inner = if h * apex_fraction < 1.0 { q } else { anchor };
    (inner, outer)
}

fn reduce_side(
    t: &Tt2Number,
    h: f64,
    slice: Result<SecondarySlice, SideDegeneracy>,
    anchor: f64,
    inner_orig: f64,
) -> (f64, f64) {
    let q = t.fou.peak;
    if h == 0.0 {
        return (inner_orig, anchor);
    }
    match slice {
        Ok(s) => s.cut_supports(h),
        Err(SideDegeneracy::ZeroWidth) => (q, q),
        Err(SideDegeneracy::VerticalInnerLeg) => vertical_leg_supports(anchor, q, t.apex_fraction, h),
    }
}

/// Left reduced supports `(x1h, x2h)`.
pub fn reduce_left(t: &Tt2Number, h: f64) -> Result<(f64, f64)> {
    check_level(h)?;
    Ok(reduce_side(t, h, left_slice(t), t.fou.a_low, t.fou.a_up))
}

/// Right reduced supports `(x3h, x4h)`.
pub fn reduce_right(t: &Tt2Number, h: f64) -> Result<(f64, f64)> {
    check_level(h)?;
    Ok(reduce_side(t, h, right_slice(t), t.fou.c_up, t.fou.c_low))
}

pub fn reduce(t: &Tt2Number, h: f64) -> Result<ReducedFou> {
    let (x1h, x2h) = reduce_left(t, h)?;
    let (x3h, x4h) = reduce_right(t, h)?;
    Ok(ReducedFou {
        h,
        x1h,
        x2h,
        peak: t.fou.peak,
        x3h,
        x4h,
    })
}
