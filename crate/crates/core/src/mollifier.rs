//! Radially symmetric Dirac families `ρ_ε(x) = ε^{-N} ρ̂(|x| / ε)`.
//!
//! The radial profile `ρ̂` is scaled by a constant `c_N` so that
//! `|S^{N-1}| ∫₀^∞ t^{N-1} ρ̂(t) dt = 1`, which makes every `ρ_ε` a unit-mass
//! density on `R^N`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad;

/// Radius (in units of ε) past which the Gaussian profile is below e^{-144}
/// of its peak.
const GAUSS_SPAN: f64 = 12.0;
const PANELS: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    /// `c_N e^{-t²}`. Not compactly supported; kernels truncate it.
    Gaussian,
    /// `c_N exp(-1 / (1 - t²))` on `t < 1`, zero outside.
    Bump,
}

impl Profile {
    /// Unnormalized profile value.
    #[inline]
    fn raw(self, t: f64) -> f64 {
        match self {
            Profile::Gaussian => (-t * t).exp(),
            Profile::Bump => {
                if t < 1.0 {
                    (-1.0 / (1.0 - t * t)).exp()
                } else {
                    0.0
                }
            }
        }
    }

    fn support(self) -> f64 {
        match self {
            Profile::Gaussian => f64::INFINITY,
            Profile::Bump => 1.0,
        }
    }
}

/// Measure of the unit sphere `S^{N-1}` (counting measure for `N = 1`).
pub fn sphere_measure(dim: usize) -> f64 {
    match dim {
        1 => 2.0,
        2 => 2.0 * PI,
        _ => unreachable!("dimension checked at construction"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MollifierSpec {
    profile: Profile,
    epsilon: f64,
    dim: usize,
    norm: f64,
}

impl MollifierSpec {
    pub fn new(profile: Profile, epsilon: f64, dim: usize) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::param(format!("eps={epsilon} must be positive")));
        }
        if !(1..=2).contains(&dim) {
            return Err(Error::param(format!("mollifier dimension {dim} not in {{1, 2}}")));
        }
        let norm = match (profile, dim) {
            (Profile::Gaussian, 1) => 1.0 / PI.sqrt(),
            (Profile::Gaussian, _) => 1.0 / PI,
            (Profile::Bump, _) => {
                let moment = quad::integrate(
                    |t| t.powi(dim as i32 - 1) * profile.raw(t),
                    0.0,
                    1.0,
                    PANELS,
                );
                1.0 / (sphere_measure(dim) * moment)
            }
        };
        Ok(Self {
            profile,
            epsilon,
            dim,
            norm,
        })
    }

    pub fn profile(&self) -> Profile {
        self.profile
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The normalization constant `c_N`.
    pub fn norm(&self) -> f64 {
        self.norm
    }

    /// Normalized radial profile `ρ̂(t)`.
    #[inline]
    pub fn radial_profile(&self, t: f64) -> f64 {
        self.norm * self.profile.raw(t)
    }

    /// `ρ_ε` at distance `r` from the origin.
    pub fn eval(&self, r: f64) -> Result<f64> {
        if r.is_nan() || r < 0.0 {
            return Err(Error::param(format!("radius {r} must be non-negative")));
        }
        Ok(self.density(r))
    }

    #[inline]
    pub(crate) fn density(&self, r: f64) -> f64 {
        self.radial_profile(r / self.epsilon) / self.epsilon.powi(self.dim as i32)
    }

    /// Mass of `ρ_ε` outside the closed ball of radius `delta`.
    pub fn tail_mass(&self, delta: f64) -> Result<f64> {
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::param(format!("delta={delta} must be non-negative")));
        }
        Ok(self.radial_mass(delta))
    }

    /// `ln` of [`tail_mass`](Self::tail_mass), evaluated without underflow.
    /// Gaussian tails at `δ ≫ ε` are far below the smallest double; the
    /// peak factor `e^{-(δ/ε)²}` is split off before integrating. A zero
    /// tail gives `-∞`.
    pub fn log_tail_mass(&self, delta: f64) -> Result<f64> {
        if delta.is_nan() || delta < 0.0 {
            return Err(Error::param(format!("delta={delta} must be non-negative")));
        }
        Ok(match self.profile {
            Profile::Bump => self.radial_mass(delta).ln(),
            Profile::Gaussian => {
                let eps = self.epsilon;
                let n = self.dim as i32;
                let scaled = quad::integrate(
                    |r| r.powi(n - 1) * (-(r - delta) * (r + delta) / (eps * eps)).exp(),
                    delta,
                    delta + GAUSS_SPAN * eps,
                    PANELS,
                );
                (sphere_measure(self.dim) * self.norm / eps.powi(n)).ln() - (delta / eps).powi(2) + scaled.ln()
            }
        })
    }

    /// Mass of `ρ_ε` over all of `R^N`, by radial quadrature.
    pub fn total_mass(&self) -> f64 {
        self.radial_mass(0.0)
    }

    fn radial_mass(&self, from: f64) -> f64 {
        // integrate in the physical radius so the ε-scaling is exercised
        let eps = self.epsilon;
        let lo = from;
        let hi = match self.profile {
            Profile::Gaussian => from + GAUSS_SPAN * eps,
            Profile::Bump => self.profile.support() * eps,
        };
        if lo >= hi {
            return 0.0;
        }
        let n = self.dim as i32;
        sphere_measure(self.dim)
            * quad::integrate(|r| r.powi(n - 1) * self.density(r), lo, hi, PANELS)
    }

    /// Smallest radius beyond which `ρ_ε ≤ tol · ρ_ε(0)`.
    ///
    /// The bump profile reports its support edge `ε` for every `tol`.
    pub fn cutoff_radius(&self, tol: f64) -> Result<f64> {
        if !(tol > 0.0 && tol <= 1.0) {
            return Err(Error::param(format!("trunc-tol={tol} must lie in (0, 1]")));
        }
        Ok(match self.profile {
            Profile::Gaussian => self.epsilon * (1.0 / tol).ln().sqrt(),
            Profile::Bump => self.epsilon,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_peak_values() {
        let m = MollifierSpec::new(Profile::Gaussian, 1.0, 1).unwrap();
        assert!((m.eval(0.0).unwrap() - 1.0 / PI.sqrt()).abs() < 1e-15);
        let m = MollifierSpec::new(Profile::Gaussian, 1.0, 2).unwrap();
        assert!((m.eval(0.0).unwrap() - 1.0 / PI).abs() < 1e-15);
    }

    #[test]
    fn bump_vanishes_outside_support() {
        for eps in [0.01, 0.3, 2.0] {
            let m = MollifierSpec::new(Profile::Bump, eps, 2).unwrap();
            assert_eq!(m.eval(2.0 * eps).unwrap(), 0.0);
            assert_eq!(m.eval(eps).unwrap(), 0.0);
            assert!(m.eval(0.5 * eps).unwrap() > 0.0);
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(MollifierSpec::new(Profile::Gaussian, 0.0, 1).is_err());
        assert!(MollifierSpec::new(Profile::Gaussian, 0.1, 3).is_err());
        let m = MollifierSpec::new(Profile::Bump, 0.1, 1).unwrap();
        assert!(m.eval(-1e-3).is_err());
        assert!(m.tail_mass(-1.0).is_err());
        assert!(m.cutoff_radius(0.0).is_err());
        assert!(m.cutoff_radius(1.5).is_err());
    }

    #[test]
    fn unit_mass() {
        for profile in [Profile::Gaussian, Profile::Bump] {
            for dim in [1, 2] {
                for eps in [1.0, 0.1, 0.05, 0.01] {
                    let m = MollifierSpec::new(profile, eps, dim).unwrap();
                    let mass = m.total_mass();
                    assert!((mass - 1.0).abs() < 1e-6, "{profile:?} N={dim} eps={eps}: {mass}");
                }
            }
        }
    }

    #[test]
    fn tails() {
        let bump = MollifierSpec::new(Profile::Bump, 0.1, 1).unwrap();
        assert_eq!(bump.tail_mass(0.1).unwrap(), 0.0);
        assert_eq!(bump.tail_mass(0.5).unwrap(), 0.0);
        assert!((bump.tail_mass(1e-12).unwrap() - 1.0).abs() < 1e-6);

        // erfc(x) <= e^{-x²} / (x √π) for x > 0
        let g = MollifierSpec::new(Profile::Gaussian, 0.01, 1).unwrap();
        let x: f64 = 0.5 / 0.01;
        let bound = (-x * x).exp() / (x * PI.sqrt());
        let tail = g.tail_mass(0.5).unwrap();
        assert!(tail <= bound.max(0.0) + 1e-300 && tail < 1e-12);

        // δ/ε = 2: erfc(2) = 0.004677734981047266
        let g = MollifierSpec::new(Profile::Gaussian, 0.25, 1).unwrap();
        assert!((g.tail_mass(0.5).unwrap() - 0.004_677_734_981_047_266).abs() < 1e-12);
        // N = 2: the tail is exactly e^{-(δ/ε)²}
        let g = MollifierSpec::new(Profile::Gaussian, 0.25, 2).unwrap();
        assert!((g.tail_mass(0.5).unwrap() - (-4.0f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn log_tail_agrees_and_survives_underflow() {
        for dim in [1, 2] {
            let g = MollifierSpec::new(Profile::Gaussian, 0.3, dim).unwrap();
            for delta in [0.0, 0.2, 0.5, 1.0] {
                let direct = g.tail_mass(delta).unwrap().ln();
                assert!((g.log_tail_mass(delta).unwrap() - direct).abs() < 1e-9);
            }
        }
        let g = MollifierSpec::new(Profile::Gaussian, 0.01, 2).unwrap();
        assert_eq!(g.tail_mass(0.5).unwrap(), 0.0);
        assert!((g.log_tail_mass(0.5).unwrap() + 2500.0).abs() < 1e-9);
        let b = MollifierSpec::new(Profile::Bump, 0.1, 1).unwrap();
        assert_eq!(b.log_tail_mass(0.5).unwrap(), f64::NEG_INFINITY);
    }

    #[test]
    fn tail_is_monotone_in_delta() {
        let g = MollifierSpec::new(Profile::Gaussian, 0.1, 2).unwrap();
        let mut last = f64::INFINITY;
        for k in 0..40 {
            let t = g.tail_mass(k as f64 * 0.01).unwrap();
            assert!(t < last);
            last = t;
        }
    }

    #[test]
    fn cutoff_examples() {
        let b = MollifierSpec::new(Profile::Bump, 0.07, 1).unwrap();
        assert_eq!(b.cutoff_radius(1e-3).unwrap(), 0.07);
        let g = MollifierSpec::new(Profile::Gaussian, 0.07, 1).unwrap();
        assert!((g.cutoff_radius((-25.0f64).exp()).unwrap() - 0.35).abs() < 1e-14);
        assert_eq!(g.cutoff_radius(1.0).unwrap(), 0.0);
        let r = g.cutoff_radius(1e-12).unwrap();
        let rho0 = g.eval(0.0).unwrap();
        assert!(g.eval(r).unwrap() <= 1e-12 * rho0 * (1.0 + 1e-9));
        assert!(g.eval(0.999 * r).unwrap() > 1e-12 * rho0);
    }

    #[test]
    fn profiles_are_radially_decreasing_and_nonnegative() {
        for profile in [Profile::Gaussian, Profile::Bump] {
            let m = MollifierSpec::new(profile, 0.3, 2).unwrap();
            let mut last = f64::INFINITY;
            for k in 0..400 {
                let v = m.eval(k as f64 * 0.002).unwrap();
                assert!(v >= 0.0 && v <= last);
                last = v;
            }
        }
    }
}
