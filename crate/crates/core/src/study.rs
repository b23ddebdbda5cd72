//! Numerical checks of the functionals' limiting behavior.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::energy::{
    build_kernel, mebr, regularizer_values, seminorm_kernel, FunctionalParams, KernelTable, Power,
    DEFAULT_TRUNC_TOL,
};
use crate::error::{Error, Result};
use crate::field::{wrap_2pi, AngleField, GridSpec, Mask};
use crate::geometry::{signed_wrap, Metric};
use crate::mollifier::{MollifierSpec, Profile};
use crate::pipeline::{add_noise, denoise, wrapped_rmse, NoiseSpec, RunOptions};
use crate::quad;
use crate::solver::DescentConfig;

/// Interior margin of the limit comparisons, in units of ε.
pub const INTERIOR_MARGIN: f64 = 5.0;
/// Limit studies need `h ≤ ε / RESOLUTION`.
pub const RESOLUTION: f64 = 10.0;
/// Relative change below which a ratio sequence counts as stabilized.
pub const STABILIZATION_TOL: f64 = 0.02;

const QUAD_PANELS: usize = 64;

/// Closed-form test functions with analytic gradients.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TestFunction {
    Constant { value: f64 },
    /// `slope · x`.
    Linear { slope: [f64; 2] },
    /// `sin(2π (f₀ x₀ + f₁ x₁))`.
    Sine { freq: [f64; 2] },
    /// `exp(-|x - center|² / width²)`.
    Gaussian { center: [f64; 2], width: f64 },
}

impl TestFunction {
    pub fn value(&self, x: [f64; 2]) -> f64 {
        match *self {
            TestFunction::Constant { value } => value,
            TestFunction::Linear { slope } => slope[0] * x[0] + slope[1] * x[1],
            TestFunction::Sine { freq } => (TAU * (freq[0] * x[0] + freq[1] * x[1])).sin(),
            TestFunction::Gaussian { center, width } => {
                let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
                (-r2 / (width * width)).exp()
            }
        }
    }

    pub fn gradient(&self, x: [f64; 2]) -> [f64; 2] {
        match *self {
            TestFunction::Constant { .. } => [0.0, 0.0],
            TestFunction::Linear { slope } => slope,
            TestFunction::Sine { freq } => {
                let c = TAU * (TAU * (freq[0] * x[0] + freq[1] * x[1])).cos();
                [c * freq[0], c * freq[1]]
            }
            TestFunction::Gaussian { center, width } => {
                let v = self.value(x);
                let s = -2.0 / (width * width);
                [s * (x[0] - center[0]) * v, s * (x[1] - center[1]) * v]
            }
        }
    }

    /// Samples at cell centers. Circle metrics get canonical angles; the
    /// absolute metric keeps the raw reals.
    pub fn sample(&self, grid: &GridSpec, metric: Metric) -> Vec<f64> {
        (0..grid.len())
            .map(|i| {
                let v = self.value(grid.coords(i));
                match metric {
                    Metric::Absolute => v,
                    _ => wrap_2pi(v),
                }
            })
            .collect()
    }
}

/// `|S^{N-1}|`-averaged `|σ · e|^p`, the constant in the limit of the
/// mollified `s = 1` functional. Known for `N = 1` and for `N = 2, p = 2`.
pub fn bbm_constant(dim: usize, p: f64) -> Result<f64> {
    match dim {
        1 => Ok(1.0),
        2 if p == 2.0 => Ok(0.5),
        _ => Err(Error::param(format!(
            "limit constant unknown for N={dim}, p={p}; supported: N=1, or N=2 with p=2"
        ))),
    }
}

fn check_eps_list(eps_list: &[f64], grid: &GridSpec) -> Result<()> {
    if eps_list.is_empty() {
        return Err(Error::param("eps list is empty"));
    }
    if eps_list.iter().any(|e| !(e.is_finite() && *e > 0.0)) {
        return Err(Error::param("every eps must be positive"));
    }
    if eps_list.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("eps list must be strictly decreasing"));
    }
    let h = grid.max_spacing();
    if let Some(e) = eps_list.iter().find(|&&e| h > e / RESOLUTION * (1.0 + 1e-12)) {
        return Err(Error::param(format!(
            "grid spacing {h} exceeds eps/{RESOLUTION} for eps={e}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbmRow {
    pub epsilon: f64,
    /// Interior double sum plus the diagonal-cell quadrature term.
    pub r_eps: f64,
    /// Interior double sum over distinct cells only.
    pub r_eps_raw: f64,
    /// `∫ |∇u|^p` over the interior box.
    pub reference: f64,
    pub ratio: Option<f64>,
    pub ratio_raw: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BbmTable {
    pub constant: f64,
    pub rows: Vec<BbmRow>,
}

impl BbmTable {
    /// True when `|ratio - 1|` never grows along the ε list.
    pub fn approaches_one(&self) -> bool {
        let dev: Option<Vec<f64>> = self.rows.iter().map(|r| r.ratio.map(|x| (x - 1.0).abs())).collect();
        match dev {
            Some(d) => d.windows(2).all(|w| w[1] <= w[0]),
            None => false,
        }
    }

    pub fn final_ratio(&self) -> Option<f64> {
        self.rows.last().and_then(|r| r.ratio)
    }
}

/// Interior cells `[r0, r1] × [c0, c1]` (inclusive) at distance `≥ margin`
/// from the boundary.
fn interior_box(grid: &GridSpec, margin: f64) -> Result<([usize; 2], [usize; 2])> {
    let mut lo = [usize::MAX; 2];
    let mut hi = [0usize; 2];
    for i in 0..grid.len() {
        if grid.boundary_distance(i) >= margin {
            let (r, c) = grid.row_col(i);
            lo = [lo[0].min(r), lo[1].min(c)];
            hi = [hi[0].max(r), hi[1].max(c)];
        }
    }
    if lo[0] == usize::MAX {
        return Err(Error::param(format!(
            "no grid point lies {margin} away from the boundary"
        )));
    }
    Ok((lo, hi))
}

fn gradient_integral(f: &TestFunction, grid: &GridSpec, lo: [usize; 2], hi: [usize; 2], p: f64) -> f64 {
    let h = grid.spacing();
    let a0 = lo[0] as f64 * h[0];
    let b0 = (hi[0] + 1) as f64 * h[0];
    let norm_p = |x: [f64; 2]| {
        let g = f.gradient(x);
        g[0].hypot(g[1]).powf(p)
    };
    if grid.ndim() == 1 {
        quad::integrate(|x| norm_p([x, 0.0]), a0, b0, QUAD_PANELS)
    } else {
        let a1 = lo[1] as f64 * h[1];
        let b1 = (hi[1] + 1) as f64 * h[1];
        quad::integrate(
            |x| quad::integrate(|y| norm_p([x, y]), a1, b1, QUAD_PANELS),
            a0,
            b0,
            QUAD_PANELS,
        )
    }
}

fn difference(metric: Metric, a: f64, b: f64) -> f64 {
    match metric {
        Metric::Absolute => a - b,
        _ => signed_wrap(a, b),
    }
}

/// Mollified `s = 1, k = 0` functional against `K ∫ |∇u|^p` as ε shrinks.
///
/// Both sides are restricted to the cells at least `5ε_max` from the
/// boundary, one region for the whole list: the outer variable of the double
/// sum runs over those cells, the inner one over the whole grid. The diagonal cell, skipped by the double sum, is
/// added back as `h^{2N} ρ_ε(0) K |∇u|^p` with a central-difference gradient.
pub fn bbm_limit_study(
    f: &TestFunction,
    grid: &GridSpec,
    metric: Metric,
    p: f64,
    eps_list: &[f64],
    profile: Profile,
) -> Result<BbmTable> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::param(format!("p={p} must satisfy p>1 for the limit study")));
    }
    check_eps_list(eps_list, grid)?;
    let constant = bbm_constant(grid.ndim(), p)?;
    let values = f.sample(grid, metric);
    let (lo, hi) = interior_box(grid, INTERIOR_MARGIN * eps_list[0])?;
    let reference = gradient_integral(f, grid, lo, hi, p);
    let region = Region { lo, hi, reference };
    let rows = eps_list
        .par_iter()
        .map(|&eps| bbm_row(grid, &values, metric, p, eps, profile, constant, &region))
        .collect::<Result<Vec<_>>>()?;
    Ok(BbmTable { constant, rows })
}

struct Region {
    lo: [usize; 2],
    hi: [usize; 2],
    reference: f64,
}

#[allow(clippy::too_many_arguments)]
fn bbm_row(
    grid: &GridSpec,
    values: &[f64],
    metric: Metric,
    p: f64,
    eps: f64,
    profile: Profile,
    constant: f64,
    region: &Region,
) -> Result<BbmRow> {
    let moll = MollifierSpec::new(profile, eps, grid.ndim())?;
    let params = FunctionalParams::mollified(p, 1.0, 0.0, 1.0, metric, moll)?;
    let kernel = build_kernel(grid, &params, DEFAULT_TRUNC_TOL)?;
    let (lo, hi, reference) = (region.lo, region.hi, region.reference);
    let pw = Power(p);
    let h = grid.spacing();
    let self_weight = grid.cell_volume().powi(2) * moll.eval(0.0)? * constant;

    let mut raw = 0.0;
    let mut diag = 0.0;
    for r in lo[0]..=hi[0] {
        for c in lo[1]..=hi[1] {
            let i = grid.index(r, c);
            raw += one_sided_sum(&kernel, values, metric, pw, i);
            let gr = difference(metric, values[grid.index(r + 1, c)], values[grid.index(r - 1, c)]) / (2.0 * h[0]);
            let gc = if grid.ndim() == 2 {
                difference(metric, values[grid.index(r, c + 1)], values[grid.index(r, c - 1)]) / (2.0 * h[1])
            } else {
                0.0
            };
            diag += self_weight * pw.pow(gr.hypot(gc));
        }
    }
    let denom = constant * reference;
    let ratio_of = |x: f64| (denom > 0.0).then(|| x / denom);
    Ok(BbmRow {
        epsilon: eps,
        r_eps: raw + diag,
        r_eps_raw: raw,
        reference,
        ratio: ratio_of(raw + diag),
        ratio_raw: ratio_of(raw),
    })
}

/// `Σ_{j ≠ i} w_ij d^p(u_i, u_j)` for one outer point.
fn one_sided_sum(kernel: &KernelTable, values: &[f64], metric: Metric, pw: Power, i: usize) -> f64 {
    let mut acc = 0.0;
    for t in kernel.taps() {
        if let Some(j) = kernel.forward(i, t) {
            acc += t.weight * pw.pow(metric.dist(values[i], values[j]));
        }
        if let Some(j) = kernel.backward(i, t) {
            acc += t.weight * pw.pow(metric.dist(values[i], values[j]));
        }
    }
    acc
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureRow {
    pub epsilon: f64,
    pub r_eps: f64,
    pub ratio: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConjectureTable {
    pub seminorm: f64,
    pub rows: Vec<ConjectureRow>,
    /// Both sides vanish, so no ratio exists.
    pub degenerate: bool,
    /// The last two ratios differ by less than 2% relative.
    pub stabilized: bool,
    /// Successive ratio changes shrink along the list.
    pub changes_decrease: bool,
}

/// Ratio of the mollified `k = 0, l = 1` functional to the fractional
/// seminorm of the same order, for a shrinking ε.
pub fn conjecture_study(
    f: &TestFunction,
    grid: &GridSpec,
    metric: Metric,
    p: f64,
    s: f64,
    eps_list: &[f64],
    profile: Profile,
) -> Result<ConjectureTable> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::param(format!("s={s} must lie in (0, 1)")));
    }
    check_eps_list(eps_list, grid)?;
    let values = f.sample(grid, metric);
    let seminorm = regularizer_values(&values, &seminorm_kernel(grid, p, s)?, metric, p);
    let rows = eps_list
        .par_iter()
        .map(|&eps| {
            let moll = MollifierSpec::new(profile, eps, grid.ndim())?;
            let params = FunctionalParams::mollified(p, s, 0.0, 1.0, metric, moll)?;
            let kernel = build_kernel(grid, &params, DEFAULT_TRUNC_TOL)?;
            let r_eps = regularizer_values(&values, &kernel, metric, p);
            Ok(ConjectureRow {
                epsilon: eps,
                r_eps,
                ratio: (seminorm > 0.0).then(|| r_eps / seminorm),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ratios: Option<Vec<f64>> = rows.iter().map(|r| r.ratio).collect();
    let (degenerate, stabilized, changes_decrease) = match ratios {
        None => (true, false, false),
        Some(r) => {
            let stabilized = r.len() >= 2 && {
                let (a, b) = (r[r.len() - 2], r[r.len() - 1]);
                (b - a).abs() < STABILIZATION_TOL * a.abs()
            };
            let changes: Vec<f64> = r.windows(2).map(|w| (w[1] - w[0]).abs()).collect();
            (false, stabilized, changes.windows(2).all(|w| w[1] < w[0]))
        }
    };
    Ok(ConjectureTable {
        seminorm,
        rows,
        degenerate,
        stabilized,
        changes_decrease,
    })
}

/// `α(δ) = c · δ^exponent`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlphaRule {
    pub c: f64,
    pub exponent: f64,
}

impl AlphaRule {
    pub fn new(c: f64, exponent: f64) -> Result<Self> {
        if !(c.is_finite() && c > 0.0 && exponent.is_finite()) {
            return Err(Error::param(format!(
                "alpha rule c={c}, exponent={exponent} needs c>0 and a finite exponent"
            )));
        }
        Ok(Self { c, exponent })
    }

    pub fn alpha(&self, delta: f64) -> f64 {
        self.c * delta.powf(self.exponent)
    }

    /// `α → 0` needs a positive exponent, `δ^p / α → 0` an exponent below `p`.
    pub fn admissible(&self, p: f64) -> bool {
        self.exponent > 0.0 && self.exponent < p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceRow {
    pub sigma: f64,
    /// Median over seeds of the realized data distance.
    pub delta: f64,
    pub alpha: f64,
    pub median_rmse: f64,
    pub rmse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvergenceTable {
    pub rule: AlphaRule,
    pub rule_admissible: bool,
    pub rule_note: String,
    pub rows: Vec<ConvergenceRow>,
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    if n % 2 == 1 {
        s[n / 2]
    } else {
        0.5 * (s[n / 2 - 1] + s[n / 2])
    }
}

/// Denoises `clean + noise` for each σ and seed with `α = rule(δ)`, where δ
/// is the realized distance between the noisy and the clean field.
///
/// `params` supplies everything but α. A run with δ = 0 returns the data,
/// which is the exact minimizer at α = 0.
pub fn convergence_study(
    clean: &AngleField,
    sigmas: &[f64],
    rule: AlphaRule,
    params: &FunctionalParams,
    cfg: &DescentConfig,
    seeds: &[u64],
) -> Result<ConvergenceTable> {
    if sigmas.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::param("sigma list must be strictly decreasing"));
    }
    if seeds.is_empty() {
        return Err(Error::param("convergence study needs at least one seed"));
    }
    let jobs: Vec<(usize, usize)> = (0..sigmas.len())
        .flat_map(|a| (0..seeds.len()).map(move |b| (a, b)))
        .collect();
    let results = jobs
        .par_iter()
        .map(|&(a, b)| {
            let noise = NoiseSpec::new(sigmas[a], seeds[b] ^ ((a as u64) << 32))?;
            let noisy = add_noise(clean, &noise)?;
            let delta = mebr(&noisy, clean, params.metric, params.p, None)?;
            let alpha = rule.alpha(delta);
            let rmse = if alpha > 0.0 {
                let run = params.with_alpha(alpha)?;
                let (u, _) = denoise(&noisy, &run, cfg, &RunOptions::default())?;
                wrapped_rmse(&u, clean)?
            } else {
                wrapped_rmse(&noisy, clean)?
            };
            Ok((delta, alpha, rmse))
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = sigmas
        .iter()
        .enumerate()
        .map(|(a, &sigma)| {
            let chunk = &results[a * seeds.len()..(a + 1) * seeds.len()];
            let deltas: Vec<f64> = chunk.iter().map(|r| r.0).collect();
            let rmse: Vec<f64> = chunk.iter().map(|r| r.2).collect();
            let delta = median(&deltas);
            ConvergenceRow {
                sigma,
                delta,
                alpha: rule.alpha(delta),
                median_rmse: median(&rmse),
                rmse,
            }
        })
        .collect();
    let admissible = rule.admissible(params.p);
    let rule_note = if admissible {
        "admissible: alpha -> 0 and delta^p / alpha -> 0".to_owned()
    } else {
        "violates the parameter-choice assumptions: needs alpha -> 0 and delta^p / alpha -> 0".to_owned()
    };
    Ok(ConvergenceTable {
        rule,
        rule_admissible: admissible,
        rule_note,
        rows,
    })
}

/// `∫_D |w|^p / (∫_{Ω∖D} |w|^p + R(w))` for a real field `w`, with the
/// regularizer measured by absolute differences. Returns 0 for `w = 0`.
pub fn poincare_ratio(grid: &GridSpec, w: &[f64], mask: &Mask, kernel: &KernelTable, p: f64) -> Result<f64> {
    grid.ensure_same(mask.grid(), "poincare mask")?;
    grid.ensure_same(kernel.grid(), "poincare kernel")?;
    if w.len() != grid.len() {
        return Err(Error::InvalidGrid(format!(
            "field has {} values but the grid has {} points",
            w.len(),
            grid.len()
        )));
    }
    let pw = Power(p);
    let hn = grid.cell_volume();
    let (mut inside, mut outside) = (0.0, 0.0);
    for (i, &v) in w.iter().enumerate() {
        if mask.is_known(i) {
            outside += pw.pow(v.abs());
        } else {
            inside += pw.pow(v.abs());
        }
    }
    let num = hn * inside;
    let den = hn * outside + regularizer_values(w, kernel, Metric::Absolute, p);
    Ok(if num == 0.0 { 0.0 } else { num / den })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PoincareSummary {
    pub samples: usize,
    pub max_ratio: f64,
    /// `|D| / |Ω∖D|`, the ratio of every nonzero constant.
    pub constant_ratio: f64,
}

/// Largest [`poincare_ratio`] over `n_samples` random smooth fields.
///
/// Each sample is a random offset plus a few low-frequency cosine modes
/// with amplitudes decaying like `1/m`.
pub fn poincare_ratio_study(
    grid: &GridSpec,
    mask: &Mask,
    params: &FunctionalParams,
    n_samples: usize,
    seed: u64,
    trunc_tol: f64,
) -> Result<PoincareSummary> {
    if mask.unknown_count() == 0 {
        return Err(Error::InvalidMask("the unknown region is empty".into()));
    }
    if n_samples == 0 {
        return Err(Error::param("n_samples must be at least 1"));
    }
    let kernel = build_kernel(grid, params, trunc_tol)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fields: Vec<Vec<f64>> = (0..n_samples).map(|_| random_smooth_field(grid, &mut rng)).collect();
    let ratios = fields
        .par_iter()
        .map(|w| poincare_ratio(grid, w, mask, &kernel, params.p))
        .collect::<Result<Vec<_>>>()?;
    let unknown = mask.unknown_count() as f64;
    Ok(PoincareSummary {
        samples: n_samples,
        max_ratio: ratios.into_iter().fold(0.0, f64::max),
        constant_ratio: unknown / (grid.len() as f64 - unknown),
    })
}

fn random_smooth_field(grid: &GridSpec, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let m1_max = if grid.ndim() == 2 { 2 } else { 0 };
    let offset = rng.random_range(-1.0..1.0);
    let mut modes = Vec::new();
    for m0 in 0..=3usize {
        for m1 in 0..=m1_max {
            if m0 + m1 == 0 {
                continue;
            }
            let amp = normal.sample(rng) / (m0 + m1) as f64;
            let phase = [rng.random_range(0.0..TAU), rng.random_range(0.0..TAU)];
            modes.push((m0 as f64, m1 as f64, amp, phase));
        }
    }
    let ext = grid.extent();
    let l1 = if grid.ndim() == 2 { ext[1] } else { 1.0 };
    (0..grid.len())
        .map(|i| {
            let x = grid.coords(i);
            offset
                + modes
                    .iter()
                    .map(|&(m0, m1, a, ph)| {
                        a * (std::f64::consts::PI * m0 * x[0] / ext[0] + ph[0]).cos()
                            * (std::f64::consts::PI * m1 * x[1] / l1 + ph[1]).cos()
                    })
                    .sum::<f64>()
        })
        .collect()
}
