//! Analytic gradient of the discrete functional and fixed-step descent.

use rayon::prelude::*;
use serde::Serialize;

use crate::energy::{functional_eval, FunctionalParams, KernelTable, Power, BLOCK};
use crate::error::{Error, Result};
use crate::field::{wrap_2pi, AngleField, GridSpec, Mask};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DescentConfig {
    pub steps: usize,
    pub step_size: f64,
    pub record_energy_every: usize,
}

impl DescentConfig {
    pub fn new(steps: usize, step_size: f64, record_energy_every: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::param("steps must be at least 1"));
        }
        if !(step_size.is_finite() && step_size > 0.0) {
            return Err(Error::param(format!("step-size={step_size} must be positive")));
        }
        if record_energy_every == 0 {
            return Err(Error::param("record_energy_every must be at least 1"));
        }
        Ok(Self {
            steps,
            step_size,
            record_energy_every,
        })
    }

    /// `1e-3 · h^{-N}`, which keeps the fidelity pull per step independent of
    /// the resolution.
    pub fn default_step_size(grid: &GridSpec) -> f64 {
        1e-3 / grid.cell_volume()
    }

    pub fn with_default_step(grid: &GridSpec, steps: usize) -> Result<Self> {
        Self::new(steps, Self::default_step_size(grid), 1)
    }
}

/// One recorded energy value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TracePoint {
    pub step: usize,
    pub energy: f64,
}

fn check_inputs(
    u: &AngleField,
    data: &AngleField,
    mask: Option<&Mask>,
    params: &FunctionalParams,
    kernel: &KernelTable,
) -> Result<()> {
    if params.p <= 1.0 {
        return Err(Error::param(format!(
            "p={} must satisfy p>1 for gradient descent",
            params.p
        )));
    }
    u.grid().ensure_same(data.grid(), "data")?;
    u.grid().ensure_same(kernel.grid(), "kernel")?;
    if let Some(m) = mask {
        u.grid().ensure_same(m.grid(), "mask")?;
    }
    Ok(())
}

/// Partial derivatives of the functional with respect to each angle.
pub fn gradient(
    u: &AngleField,
    data: &AngleField,
    mask: Option<&Mask>,
    params: &FunctionalParams,
    kernel: &KernelTable,
) -> Result<Vec<f64>> {
    check_inputs(u, data, mask, params, kernel)?;
    let mut out = vec![0.0; u.len()];
    gradient_into(u.values(), data.values(), mask, params, kernel, &mut out);
    Ok(out)
}

fn gradient_into(
    u: &[f64],
    v: &[f64],
    mask: Option<&Mask>,
    params: &FunctionalParams,
    kernel: &KernelTable,
    out: &mut [f64],
) {
    let pw = Power(params.p);
    let p = params.p;
    let metric = params.metric;
    let hn = kernel.grid().cell_volume();
    let reg_scale = 2.0 * params.alpha * p;
    // each entry is gathered by its own point, so the result does not depend
    // on how rayon splits the blocks
    out.par_chunks_mut(BLOCK).enumerate().for_each(|(b, chunk)| {
        for (off, g) in chunk.iter_mut().enumerate() {
            let i = b * BLOCK + off;
            let ui = u[i];
            let mut fid = 0.0;
            if mask.is_none_or(|m| m.is_known(i)) {
                let (d, slope) = metric.dist_and_slope(ui, v[i]);
                fid = p * pw.pow_m1(d) * slope * hn;
            }
            let mut reg = 0.0;
            for t in kernel.taps() {
                if let Some(j) = kernel.forward(i, t) {
                    let (d, slope) = metric.dist_and_slope(ui, u[j]);
                    reg += t.weight * pw.pow_m1(d) * slope;
                }
                if let Some(j) = kernel.backward(i, t) {
                    let (d, slope) = metric.dist_and_slope(ui, u[j]);
                    reg += t.weight * pw.pow_m1(d) * slope;
                }
            }
            *g = fid + reg_scale * reg;
        }
    });
}

/// Runs `cfg.steps` fixed-step gradient updates from `u0`.
///
/// Energy is recorded at step 0, every `record_energy_every` steps, and at the
/// final step. The trace may rise: a fixed step can overshoot.
pub fn descend(
    u0: &AngleField,
    data: &AngleField,
    mask: Option<&Mask>,
    params: &FunctionalParams,
    kernel: &KernelTable,
    cfg: &DescentConfig,
) -> Result<(AngleField, Vec<TracePoint>)> {
    check_inputs(u0, data, mask, params, kernel)?;
    let grid = *u0.grid();
    let mut u = u0.values().to_vec();
    let mut grad = vec![0.0; u.len()];
    let mut trace = Vec::with_capacity(cfg.steps / cfg.record_energy_every + 2);

    let record = |u: &[f64], step: usize, trace: &mut Vec<TracePoint>| -> Result<()> {
        let field = AngleField::from_canonical(grid, u.to_vec());
        let energy = functional_eval(&field, data, mask, params, kernel)?;
        if !energy.is_finite() {
            return Err(Error::NonFiniteEnergy { step });
        }
        trace.push(TracePoint { step, energy });
        Ok(())
    };

    record(&u, 0, &mut trace)?;
    for step in 1..=cfg.steps {
        gradient_into(&u, data.values(), mask, params, kernel, &mut grad);
        for (a, g) in u.iter_mut().zip(&grad) {
            *a = wrap_2pi(*a - cfg.step_size * g);
        }
        if u.iter().any(|a| !a.is_finite()) {
            return Err(Error::NonFiniteEnergy { step });
        }
        if step % cfg.record_energy_every == 0 || step == cfg.steps {
            record(&u, step, &mut trace)?;
        }
    }
    Ok((AngleField::from_canonical(grid, u), trace))
}
