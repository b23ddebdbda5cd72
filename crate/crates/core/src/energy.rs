//! The discrete regularization functional
//!
//! ```text
//! F(u) = ∫_{Ω∖D} d^p(u(x), v(x)) dx
//!      + α ∬_{Ω×Ω} d^p(u(x), u(y)) / |x−y|^{k+ps} · ρ_ε^l(x−y) d(x, y)
//! ```
//!
//! discretized with cell-centered Riemann sums. The double integral skips the
//! diagonal `x = y`. On a uniform grid the pair weight only depends on the
//! offset between the two cells, so a [`KernelTable`] stores one weight per
//! offset and generates the pair list on demand.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::field::{offset_length, AngleField, GridSpec, Mask};
use crate::geometry::Metric;
use crate::mollifier::MollifierSpec;

/// Default relative truncation level for Gaussian kernels.
pub const DEFAULT_TRUNC_TOL: f64 = 1e-12;

/// Points per block in parallel reductions. Fixed so that the summation tree,
/// and therefore every rounding, is independent of the thread count.
pub(crate) const BLOCK: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FunctionalParams {
    pub p: f64,
    pub s: f64,
    pub k: f64,
    pub l: u8,
    pub alpha: f64,
    pub metric: Metric,
    pub mollifier: Option<MollifierSpec>,
}

impl FunctionalParams {
    /// Validates and assembles a parameter set.
    ///
    /// `mollifier` must be present exactly when `l = 1`.
    pub fn new(
        p: f64,
        s: f64,
        k: f64,
        l: u8,
        alpha: f64,
        metric: Metric,
        mollifier: Option<MollifierSpec>,
    ) -> Result<Self> {
        if !(p.is_finite() && p >= 1.0) {
            return Err(Error::param(format!("p={p} must satisfy p>=1")));
        }
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::param(format!("s={s} must lie in (0, 1]")));
        }
        if !(k.is_finite() && k >= 0.0) {
            return Err(Error::param(format!("k={k} must be non-negative")));
        }
        if s == 1.0 && k != 0.0 {
            return Err(Error::param("s=1 requires k=0"));
        }
        if !(alpha.is_finite() && alpha > 0.0) {
            return Err(Error::param(format!("alpha={alpha} must be positive")));
        }
        match (l, &mollifier) {
            (0, None) | (1, Some(_)) => {}
            (0, Some(_)) => return Err(Error::param("l=0 takes no mollifier")),
            (1, None) => return Err(Error::param("l=1 requires a mollifier")),
            _ => return Err(Error::param(format!("l={l} must be 0 or 1"))),
        }
        if let Some(m) = &mollifier {
            if k > m.dim() as f64 {
                return Err(Error::param(format!("k={k} must satisfy k<=N={}", m.dim())));
            }
        }
        Ok(Self {
            p,
            s,
            k,
            l,
            alpha,
            metric,
            mollifier,
        })
    }

    /// Mollified parameter set (`l = 1`).
    pub fn mollified(
        p: f64,
        s: f64,
        k: f64,
        alpha: f64,
        metric: Metric,
        mollifier: MollifierSpec,
    ) -> Result<Self> {
        Self::new(p, s, k, 1, alpha, metric, Some(mollifier))
    }

    /// Unmollified parameter set (`l = 0`).
    pub fn plain(p: f64, s: f64, k: f64, alpha: f64, metric: Metric) -> Result<Self> {
        Self::new(p, s, k, 0, alpha, metric, None)
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(
            self.p,
            self.s,
            self.k,
            self.l,
            alpha,
            self.metric,
            self.mollifier,
        )
    }

    /// Exponent of the base-space distance in the kernel denominator.
    pub fn kernel_exponent(&self) -> f64 {
        self.k + self.p * self.s
    }
}

/// One offset of the kernel stencil, in the half-plane `(dr, dc) > (0, 0)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub dr: isize,
    pub dc: isize,
    pub distance: f64,
    pub weight: f64,
}

/// Precomputed pair weights `h^{2N} ρ_ε^l(r) / r^{k+ps}`.
#[derive(Debug, Clone)]
pub struct KernelTable {
    grid: GridSpec,
    taps: Vec<Tap>,
}

impl KernelTable {
    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    /// Stencil offsets in lexicographic order.
    pub fn taps(&self) -> &[Tap] {
        &self.taps
    }

    /// Every stored pair `(i, j, weight)` with `i < j`, in lexicographic order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.grid.len()).flat_map(move |i| {
            self.taps.iter().filter_map(move |t| {
                self.forward(i, t).map(|j| (i, j, t.weight))
            })
        })
    }

    pub fn pair_count(&self) -> usize {
        let (rows, cols) = self.grid.shape();
        self.taps
            .iter()
            .map(|t| {
                let r = rows.saturating_sub(t.dr.unsigned_abs());
                let c = cols.saturating_sub(t.dc.unsigned_abs());
                r * c
            })
            .sum()
    }

    #[inline]
    pub(crate) fn forward(&self, i: usize, t: &Tap) -> Option<usize> {
        let (r, c) = self.grid.row_col(i);
        let r2 = r as isize + t.dr;
        let c2 = c as isize + t.dc;
        let (rows, cols) = self.grid.shape();
        if r2 < rows as isize && c2 >= 0 && c2 < cols as isize {
            Some(self.grid.index(r2 as usize, c2 as usize))
        } else {
            None
        }
    }

    #[inline]
    pub(crate) fn backward(&self, i: usize, t: &Tap) -> Option<usize> {
        let (r, c) = self.grid.row_col(i);
        let r2 = r as isize - t.dr;
        let c2 = c as isize - t.dc;
        let cols = self.grid.cols() as isize;
        if r2 >= 0 && c2 >= 0 && c2 < cols {
            Some(self.grid.index(r2 as usize, c2 as usize))
        } else {
            None
        }
    }
}

/// Assembles the kernel for `params` on `grid`.
///
/// With `l = 1` the stencil stops at the mollifier's cutoff radius for
/// `trunc_tol`; with `l = 0` it covers every pair of the grid.
pub fn build_kernel(grid: &GridSpec, params: &FunctionalParams, trunc_tol: f64) -> Result<KernelTable> {
    if params.l == 0 && params.s == 1.0 {
        return Err(Error::param(
            "s=1 with l=0 has no finite kernel; use l=1 (mollified)",
        ));
    }
    let n_dim = grid.ndim() as f64;
    if params.k > n_dim {
        return Err(Error::param(format!("k={} must satisfy k<=N={}", params.k, grid.ndim())));
    }
    let cutoff = match &params.mollifier {
        Some(m) => {
            if m.dim() != grid.ndim() {
                return Err(Error::param(format!(
                    "mollifier dimension {} does not match grid dimension {}",
                    m.dim(),
                    grid.ndim()
                )));
            }
            m.cutoff_radius(trunc_tol)?
        }
        None => f64::INFINITY,
    };
    let h = grid.spacing();
    let (rows, cols) = grid.shape();
    let reach = |n: usize, h: f64| -> isize {
        if cutoff.is_finite() {
            ((cutoff / h).floor() as usize).min(n - 1) as isize
        } else {
            n as isize - 1
        }
    };
    let max_dr = reach(rows, h[0]);
    let max_dc = if grid.ndim() == 2 { reach(cols, h[1]) } else { 0 };
    let quad = grid.cell_volume() * grid.cell_volume();
    let exponent = params.kernel_exponent();

    let mut taps = Vec::new();
    for dr in 0..=max_dr {
        for dc in -max_dc..=max_dc {
            if dr == 0 && dc <= 0 {
                continue;
            }
            let r = offset_length(dr, dc, h);
            if r > cutoff {
                continue;
            }
            let rho = match &params.mollifier {
                Some(m) => m.density(r),
                None => 1.0,
            };
            let weight = quad * rho / r.powf(exponent);
            if weight > 0.0 && weight.is_finite() {
                taps.push(Tap {
                    dr,
                    dc,
                    distance: r,
                    weight,
                });
            }
        }
    }
    Ok(KernelTable { grid: *grid, taps })
}

/// `d^p` and `d^{p-1}` with cheap paths for common exponents.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Power(pub(crate) f64);

impl Power {
    #[inline]
    pub(crate) fn pow(self, d: f64) -> f64 {
        if self.0 == 2.0 {
            d * d
        } else if self.0 == 1.0 {
            d
        } else {
            d.powf(self.0)
        }
    }

    #[inline]
    pub(crate) fn pow_m1(self, d: f64) -> f64 {
        if self.0 == 2.0 {
            d
        } else {
            d.powf(self.0 - 1.0)
        }
    }
}

/// `∫ d^p(φ, ν)` over the known points, i.e. the p-th power of the metric
/// integral distance between the two fields.
pub fn fidelity(
    phi: &AngleField,
    nu: &AngleField,
    metric: Metric,
    p: f64,
    mask: Option<&Mask>,
) -> Result<f64> {
    phi.grid().ensure_same(nu.grid(), "fidelity fields")?;
    if let Some(m) = mask {
        phi.grid().ensure_same(m.grid(), "fidelity mask")?;
    }
    Ok(fidelity_values(
        phi.grid(),
        phi.values(),
        nu.values(),
        metric,
        p,
        mask,
    ))
}

/// The metric integral distance `(∫ d^p(φ, ν))^{1/p}` over the known points.
pub fn mebr(phi: &AngleField, nu: &AngleField, metric: Metric, p: f64, mask: Option<&Mask>) -> Result<f64> {
    Ok(fidelity(phi, nu, metric, p, mask)?.powf(1.0 / p))
}

pub(crate) fn fidelity_values(
    grid: &GridSpec,
    phi: &[f64],
    nu: &[f64],
    metric: Metric,
    p: f64,
    mask: Option<&Mask>,
) -> f64 {
    let pw = Power(p);
    let mut sum = 0.0;
    for i in 0..phi.len() {
        if mask.is_none_or(|m| m.is_known(i)) {
            sum += pw.pow(metric.dist(phi[i], nu[i]));
        }
    }
    grid.cell_volume() * sum
}

/// The double-integral regularizer `2 Σ_{i<j} w_ij d^p(u_i, u_j)`.
pub fn regularizer(u: &AngleField, kernel: &KernelTable, metric: Metric, p: f64) -> Result<f64> {
    u.grid().ensure_same(kernel.grid(), "regularizer kernel")?;
    Ok(regularizer_values(u.values(), kernel, metric, p))
}

pub(crate) fn regularizer_values(u: &[f64], kernel: &KernelTable, metric: Metric, p: f64) -> f64 {
    let pw = Power(p);
    let n = u.len();
    let partials: Vec<f64> = (0..n.div_ceil(BLOCK))
        .into_par_iter()
        .map(|b| {
            let mut acc = 0.0;
            for i in b * BLOCK..((b + 1) * BLOCK).min(n) {
                for t in kernel.taps() {
                    if let Some(j) = kernel.forward(i, t) {
                        acc += t.weight * pw.pow(metric.dist(u[i], u[j]));
                    }
                }
            }
            acc
        })
        .collect();
    2.0 * partials.iter().sum::<f64>()
}

/// `fidelity + α · regularizer`; the data term is restricted to the known
/// points of `mask` when one is given.
pub fn functional_eval(
    u: &AngleField,
    data: &AngleField,
    mask: Option<&Mask>,
    params: &FunctionalParams,
    kernel: &KernelTable,
) -> Result<f64> {
    let fid = fidelity(u, data, params.metric, params.p, mask)?;
    let reg = regularizer(u, kernel, params.metric, params.p)?;
    Ok(fid + params.alpha * reg)
}

/// p-th power of the Gagliardo seminorm of order `s`, measured with `metric`.
pub fn fractional_seminorm(u: &AngleField, metric: Metric, p: f64, s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param(format!("s={s} must lie in (0, 1) for the seminorm")));
    }
    let kernel = seminorm_kernel(u.grid(), p, s)?;
    regularizer(u, &kernel, metric, p)
}

pub(crate) fn seminorm_kernel(grid: &GridSpec, p: f64, s: f64) -> Result<KernelTable> {
    let params = FunctionalParams::plain(p, s, grid.ndim() as f64, 1.0, Metric::S1Geodesic)?;
    build_kernel(grid, &params, DEFAULT_TRUNC_TOL)
}

/// Checks `F^{v⋆}(u) ≤ 2^{p-1} F^{v◇}(u) + 2^{p-1} D(v◇, v⋆)^p` on one
/// instance, with relative slack `1e-12`.
pub fn param_change_inequality_check(
    u: &AngleField,
    v_star: &AngleField,
    v_diamond: &AngleField,
    mask: Option<&Mask>,
    params: &FunctionalParams,
    kernel: &KernelTable,
) -> Result<bool> {
    let lhs = functional_eval(u, v_star, mask, params, kernel)?;
    let f_diamond = functional_eval(u, v_diamond, mask, params, kernel)?;
    let data_gap = fidelity(v_diamond, v_star, params.metric, params.p, mask)?;
    let factor = 2f64.powf(params.p - 1.0);
    let rhs = factor * f_diamond + factor * data_gap;
    Ok(lhs <= rhs * (1.0 + 1e-12) + f64::MIN_POSITIVE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mollifier::Profile;
    use std::f64::consts::{FRAC_PI_2, PI};

    fn line(n: usize) -> GridSpec {
        GridSpec::line(n, 1.0).unwrap()
    }

    #[test]
    fn params_constraints() {
        let m = MollifierSpec::new(Profile::Gaussian, 0.1, 1).unwrap();
        let g = Metric::S1Geodesic;
        let err = FunctionalParams::mollified(2.0, 1.0, 1.0, 1.0, g, m).unwrap_err();
        assert!(err.to_string().contains("s=1 requires k=0"));
        assert!(FunctionalParams::mollified(2.0, 0.5, 2.0, 1.0, g, m).is_err());
        assert!(FunctionalParams::mollified(2.0, 0.5, 1.0, 0.0, g, m).is_err());
        assert!(FunctionalParams::mollified(0.5, 0.5, 1.0, 1.0, g, m).is_err());
        assert!(FunctionalParams::new(2.0, 0.5, 1.0, 0, 1.0, g, Some(m)).is_err());
        assert!(FunctionalParams::new(2.0, 0.5, 1.0, 1, 1.0, g, None).is_err());
        assert!(FunctionalParams::mollified(2.0, 1.0, 0.0, 1.0, g, m).is_ok());
    }

    #[test]
    fn fidelity_examples() {
        let g = line(4);
        let zero = AngleField::constant(g, 0.0).unwrap();
        let quarter = AngleField::constant(g, FRAC_PI_2).unwrap();
        let m = Metric::S1Geodesic;
        assert_eq!(fidelity(&quarter, &quarter, m, 2.0, None).unwrap(), 0.0);
        let full = fidelity(&zero, &quarter, m, 2.0, None).unwrap();
        assert!((full - FRAC_PI_2 * FRAC_PI_2).abs() < 1e-14);
        let mask = Mask::new(g, vec![true, false, true, false]).unwrap();
        // oracle: direct masked sum h Σ_known d²
        let oracle = 0.25 * 2.0 * FRAC_PI_2 * FRAC_PI_2;
        let half = fidelity(&zero, &quarter, m, 2.0, Some(&mask)).unwrap();
        assert!((half - oracle).abs() < 1e-14);
        assert!((half - full / 2.0).abs() < 1e-14);
    }

    #[test]
    fn fidelity_grid_mismatch() {
        let a = AngleField::constant(line(4), 0.0).unwrap();
        let b = AngleField::constant(line(5), 0.0).unwrap();
        assert!(matches!(
            fidelity(&a, &b, Metric::S1Geodesic, 2.0, None),
            Err(Error::GridMismatch(_))
        ));
    }

    #[test]
    fn kernel_two_points_has_one_pair() {
        let params = FunctionalParams::plain(1.5, 0.3, 0.5, 1.0, Metric::S1Geodesic).unwrap();
        let k = build_kernel(&line(2), &params, DEFAULT_TRUNC_TOL).unwrap();
        assert_eq!(k.pairs().count(), 1);
        assert_eq!(k.pair_count(), 1);
    }

    #[test]
    fn kernel_rejects_s_one_without_mollifier() {
        let params = FunctionalParams::plain(2.0, 1.0, 0.0, 1.0, Metric::S1Geodesic).unwrap();
        assert!(build_kernel(&line(5), &params, DEFAULT_TRUNC_TOL).is_err());
    }

    #[test]
    fn bump_kernel_respects_support() {
        let g = line(100);
        for eps in [0.01, 0.025] {
            let m = MollifierSpec::new(Profile::Bump, eps, 1).unwrap();
            let params = FunctionalParams::mollified(2.0, 0.5, 1.0, 1.0, Metric::S1Geodesic, m).unwrap();
            let k = build_kernel(&g, &params, DEFAULT_TRUNC_TOL).unwrap();
            for (i, j, w) in k.pairs() {
                assert!(g.pair_distance(i, j).unwrap() <= eps * (1.0 + 1e-12));
                assert!(w > 0.0);
            }
            // at eps = h the only candidates sit on the support edge, where ρ = 0
            let expected_taps = if eps == 0.01 { 0 } else { 2 };
            assert_eq!(k.taps().len(), expected_taps);
        }
    }

    #[test]
    fn three_point_weights() {
        // h = 1/3, k + ps = 2: adjacent h²/(1/3)² = 1, far h²/(2/3)² = 1/4
        let params = FunctionalParams::plain(2.0, 0.5, 1.0, 1.0, Metric::S1Geodesic).unwrap();
        let k = build_kernel(&line(3), &params, DEFAULT_TRUNC_TOL).unwrap();
        let pairs: Vec<_> = k.pairs().collect();
        assert_eq!(pairs.len(), 3);
        assert_eq!((pairs[0].0, pairs[0].1), (0, 1));
        assert_eq!((pairs[1].0, pairs[1].1), (0, 2));
        assert_eq!((pairs[2].0, pairs[2].1), (1, 2));
        assert!((pairs[0].2 - 1.0).abs() < 1e-14);
        assert!((pairs[1].2 - 0.25).abs() < 1e-14);
        assert!((pairs[2].2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn three_point_regularizer() {
        // brute force over the six ordered pairs:
        // (1/9)·2·[(π/2)²·9 + (π/2)²·9 + π²·9/4] = 1.5 π²
        let g = line(3);
        let u = AngleField::new(g, vec![0.0, FRAC_PI_2, PI]).unwrap();
        let params = FunctionalParams::plain(2.0, 0.5, 1.0, 1.0, Metric::S1Geodesic).unwrap();
        let k = build_kernel(&g, &params, DEFAULT_TRUNC_TOL).unwrap();
        let r = regularizer(&u, &k, Metric::S1Geodesic, 2.0).unwrap();
        assert!((r - 1.5 * PI * PI).abs() < 1e-12);
        let sn = fractional_seminorm(&u, Metric::S1Geodesic, 2.0, 0.5).unwrap();
        assert_eq!(sn, r);
        assert!(fractional_seminorm(&u, Metric::S1Geodesic, 2.0, 1.0).is_err());
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let g = GridSpec::plane(6, 7, [1.0, 1.2]).unwrap();
        let u = AngleField::constant(g, 2.5).unwrap();
        let m = MollifierSpec::new(Profile::Gaussian, 0.3, 2).unwrap();
        let params = FunctionalParams::mollified(1.1, 0.4, 2.0, 0.7, Metric::S1Geodesic, m).unwrap();
        let k = build_kernel(&g, &params, DEFAULT_TRUNC_TOL).unwrap();
        assert_eq!(regularizer(&u, &k, Metric::S1Geodesic, 1.1).unwrap(), 0.0);
        assert_eq!(functional_eval(&u, &u, None, &params, &k).unwrap(), 0.0);
    }

    #[test]
    fn pair_count_matches_iterator() {
        let g = GridSpec::plane(7, 5, [1.0, 0.8]).unwrap();
        let m = MollifierSpec::new(Profile::Gaussian, 0.08, 2).unwrap();
        let params = FunctionalParams::mollified(2.0, 0.5, 2.0, 1.0, Metric::S1Geodesic, m).unwrap();
        let k = build_kernel(&g, &params, DEFAULT_TRUNC_TOL).unwrap();
        assert_eq!(k.pairs().count(), k.pair_count());
        let mut last = None;
        for (i, j, _) in k.pairs() {
            assert!(i < j);
            if let Some(prev) = last {
                assert!(prev < (i, j));
            }
            last = Some((i, j));
        }
    }

    #[test]
    fn param_change_reduces_when_data_agree() {
        let g = line(8);
        let u = AngleField::from_fn(g, |x| 6.0 * x[0]).unwrap();
        let v = AngleField::from_fn(g, |x| 1.0 - x[0]).unwrap();
        let m = MollifierSpec::new(Profile::Gaussian, 0.2, 1).unwrap();
        let params = FunctionalParams::mollified(1.3, 0.5, 1.0, 0.4, Metric::S1Geodesic, m).unwrap();
        let k = build_kernel(&g, &params, DEFAULT_TRUNC_TOL).unwrap();
        assert!(param_change_inequality_check(&u, &v, &v, None, &params, &k).unwrap());
    }
}
