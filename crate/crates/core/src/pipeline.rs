//! Forward operators, noise, and the denoising and inpainting drivers.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::energy::{build_kernel, FunctionalParams, DEFAULT_TRUNC_TOL};
use crate::error::{Error, Result};
use crate::field::{wrap_2pi, AngleField, GridSpec, Mask};
use crate::geometry::geodesic_dist;
use crate::report::RunReport;
use crate::solver::{descend, DescentConfig};

pub use crate::tv::{tv_denoise, tv_inpaint, TV_BETA};

/// The observation map: the identity for denoising, restriction to the known
/// region for inpainting.
#[derive(Debug, Clone, PartialEq)]
pub enum ForwardOp {
    Identity,
    Masking(Mask),
}

impl ForwardOp {
    pub fn mask(&self) -> Option<&Mask> {
        match self {
            ForwardOp::Identity => None,
            ForwardOp::Masking(m) => Some(m),
        }
    }

    pub fn validate(&self, grid: &GridSpec) -> Result<()> {
        match self {
            ForwardOp::Identity => Ok(()),
            ForwardOp::Masking(m) => grid.ensure_same(m.grid(), "forward operator mask"),
        }
    }

    /// Applies the operator; unobserved points are set to 0.
    pub fn apply(&self, u: &AngleField) -> Result<AngleField> {
        self.validate(u.grid())?;
        Ok(match self {
            ForwardOp::Identity => u.clone(),
            ForwardOp::Masking(m) => {
                let values = u
                    .values()
                    .iter()
                    .zip(m.known())
                    .map(|(&v, &k)| if k { v } else { 0.0 })
                    .collect();
                AngleField::from_canonical(*u.grid(), values)
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NoiseSpec {
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self> {
        if !(sigma.is_finite() && sigma >= 0.0) {
            return Err(Error::param(format!("sigma={sigma} must be non-negative")));
        }
        Ok(Self { sigma, seed })
    }
}

/// Adds i.i.d. `N(0, σ²)` angles from a seeded ChaCha stream and wraps.
pub fn add_noise(u: &AngleField, spec: &NoiseSpec) -> Result<AngleField> {
    let spec = NoiseSpec::new(spec.sigma, spec.seed)?;
    if spec.sigma == 0.0 {
        return Ok(u.clone());
    }
    let normal = Normal::new(0.0, spec.sigma).map_err(|e| Error::param(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = u
        .values()
        .iter()
        .map(|&a| wrap_2pi(a + normal.sample(&mut rng)))
        .collect();
    Ok(AngleField::from_canonical(*u.grid(), values))
}

/// Root mean squared geodesic distance.
pub fn wrapped_rmse(a: &AngleField, b: &AngleField) -> Result<f64> {
    wrapped_rmse_where(a, b, |_| true)
}

/// [`wrapped_rmse`] over the points selected by `keep`.
pub fn wrapped_rmse_where(a: &AngleField, b: &AngleField, keep: impl Fn(usize) -> bool) -> Result<f64> {
    a.grid().ensure_same(b.grid(), "rmse fields")?;
    let mut sum = 0.0;
    let mut count = 0usize;
    for (i, (&x, &y)) in a.values().iter().zip(b.values()).enumerate() {
        if keep(i) {
            let d = geodesic_dist(x, y);
            sum += d * d;
            count += 1;
        }
    }
    if count == 0 {
        return Err(Error::param("rmse over an empty point set"));
    }
    Ok((sum / count as f64).sqrt())
}

/// Starting values for points outside the observed region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InpaintInit {
    Zeros,
    /// Split-Bregman TV inpainting of the raw angles, wrapped back to the circle.
    TotalVariation { lambda: f64, iters: usize },
}

#[derive(Debug, Clone)]
pub struct RunOptions {
    pub trunc_tol: f64,
    pub clean: Option<AngleField>,
    pub init: InpaintInit,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            trunc_tol: DEFAULT_TRUNC_TOL,
            clean: None,
            init: InpaintInit::Zeros,
        }
    }
}

/// Minimizes the functional for `observed` under `op` by gradient descent.
pub fn reconstruct(
    observed: &AngleField,
    op: &ForwardOp,
    params: &FunctionalParams,
    cfg: &DescentConfig,
    opts: &RunOptions,
) -> Result<(AngleField, RunReport)> {
    let start = Instant::now();
    let grid = *observed.grid();
    op.validate(&grid)?;
    if let Some(c) = &opts.clean {
        grid.ensure_same(c.grid(), "clean reference")?;
    }
    let kernel = build_kernel(&grid, params, opts.trunc_tol)?;
    let mask = op.mask();
    let u0 = match (mask, opts.init) {
        (None, _) | (Some(_), InpaintInit::Zeros) => op.apply(observed)?,
        (Some(m), InpaintInit::TotalVariation { lambda, iters }) => {
            let raw = tv_inpaint(&grid, observed.values(), m, lambda, iters)?;
            AngleField::new(grid, raw)?
        }
    };
    let (u, trace) = descend(&u0, observed, mask, params, &kernel, cfg)?;

    let mut report = RunReport::new([match op {
        ForwardOp::Identity => "denoise",
        ForwardOp::Masking(_) => "inpaint",
    }]);
    report
        .param("functional", params)?
        .param("descent", cfg)?
        .param("trunc_tol", opts.trunc_tol)?
        .param("grid", grid)?
        .param("init", opts.init)?;
    report.metric("kernel_taps", kernel.taps().len() as f64);
    report.metric("kernel_pairs", kernel.pair_count() as f64);
    if let (Some(first), Some(last)) = (trace.first(), trace.last()) {
        report.metric("energy_initial", first.energy);
        report.metric("energy_final", last.energy);
    }
    if let Some(clean) = &opts.clean {
        report.metric("wrapped_rmse", wrapped_rmse(&u, clean)?);
        report.metric("wrapped_rmse_observed", wrapped_rmse(observed, clean)?);
        if let Some(m) = mask {
            if m.unknown_count() > 0 {
                let unknown = wrapped_rmse_where(&u, clean, |i| !m.is_known(i))?;
                report.metric("wrapped_rmse_unknown", unknown);
            }
            report.metric("wrapped_rmse_known", wrapped_rmse_where(&u, clean, |i| m.is_known(i))?);
        }
    }
    report.energy_trace = trace;
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    Ok((u, report))
}

/// Denoising: descent from the noisy field with a full data term.
pub fn denoise(
    noisy: &AngleField,
    params: &FunctionalParams,
    cfg: &DescentConfig,
    opts: &RunOptions,
) -> Result<(AngleField, RunReport)> {
    reconstruct(noisy, &ForwardOp::Identity, params, cfg, opts)
}

/// Inpainting: the data term only sees the known points of `mask`.
pub fn inpaint(
    observed: &AngleField,
    mask: &Mask,
    params: &FunctionalParams,
    cfg: &DescentConfig,
    opts: &RunOptions,
) -> Result<(AngleField, RunReport)> {
    reconstruct(observed, &ForwardOp::Masking(mask.clone()), params, cfg, opts)
}
