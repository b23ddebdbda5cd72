//! Distances on the unit circle, expressed through angles.
//!
//! A point of S¹ is carried as an angle `a`, standing for `e^{ia}`. The arc
//! length `arccos(⟨e^{ia}, e^{ib}⟩)` is evaluated as the absolute wrapped
//! difference, which stays accurate near 0 and π where `arccos` loses digits.

use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::field::AngleField;

/// Signed angular difference `a - b` reduced to `(-π, π]`.
///
/// Antipodal pairs map to `+π`.
#[inline]
pub fn signed_wrap(a: f64, b: f64) -> f64 {
    // a - b is exactly -(b - a), so folding it directly keeps the result antisymmetric
    let mut d = a - b;
    if d.abs() >= TAU {
        d %= TAU;
    }
    if d > PI {
        d - TAU
    } else if d <= -PI {
        d + TAU
    } else {
        d
    }
}

/// Arc length between two circle points, in `[0, π]`.
#[inline]
pub fn geodesic_dist(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Length of the chord joining two circle points, in `[0, 2]`.
#[inline]
pub fn chord_dist(a: f64, b: f64) -> f64 {
    2.0 * (0.5 * geodesic_dist(a, b)).sin()
}

/// The lifting `u ↦ e^{iu}`, one `(cos, sin)` pair per grid point.
pub fn lift_apply(u: &AngleField) -> Vec<(f64, f64)> {
    u.values().iter().map(|&a| (a.cos(), a.sin())).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Metric {
    /// Arc length on S¹.
    S1Geodesic,
    /// Euclidean distance of the embedded points, `2 sin(θ/2)`.
    EuclideanChord,
    /// `|a - b|` on the real line; for real-valued fields that are not lifted.
    Absolute,
}

impl Metric {
    #[inline]
    pub fn dist(self, a: f64, b: f64) -> f64 {
        match self {
            Metric::S1Geodesic => geodesic_dist(a, b),
            Metric::EuclideanChord => chord_dist(a, b),
            Metric::Absolute => (a - b).abs(),
        }
    }

    /// Distance together with its derivative with respect to `a`.
    ///
    /// At coincident points the derivative is reported as 0; at antipodal
    /// points the `+π` convention of [`signed_wrap`] fixes the one-sided
    /// choice.
    #[inline]
    pub fn dist_and_slope(self, a: f64, b: f64) -> (f64, f64) {
        match self {
            Metric::S1Geodesic => {
                let w = signed_wrap(a, b);
                (w.abs(), sign(w))
            }
            Metric::EuclideanChord => {
                let w = signed_wrap(a, b);
                let half = 0.5 * w.abs();
                (2.0 * half.sin(), half.cos() * sign(w))
            }
            Metric::Absolute => {
                let w = a - b;
                (w.abs(), sign(w))
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Metric::S1Geodesic => "geodesic",
            Metric::EuclideanChord => "chord",
            Metric::Absolute => "absolute",
        }
    }
}

#[inline]
fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}
