use std::fmt;
use std::path::Path;
use std::time::Instant;

use circreg::energy::FunctionalParams;
use circreg::field::{AngleField, GridSpec, Mask};
use circreg::geometry::Metric;
use circreg::io;
use circreg::mollifier::{MollifierSpec, Profile};
use circreg::pipeline::{
    add_noise, denoise, inpaint, tv_denoise, tv_inpaint, wrapped_rmse, InpaintInit, NoiseSpec, RunOptions,
};
use circreg::report::RunReport;
use circreg::scenes;
use circreg::solver::DescentConfig;
use circreg::study::{
    bbm_limit_study, conjecture_study, convergence_study, poincare_ratio_study, AlphaRule, TestFunction,
};

use crate::{
    AddNoiseArgs, BbmArgs, Command, ConjectureArgs, ConvergenceArgs, DescentArgs, FunctionArg, FunctionalArgs,
    InitArg, InpaintArgs, IoArgs, MetricArg, PoincareArgs, ProfileArg, RainbowArgs, ReconstructArgs,
    TestFunctionArgs, TvArgs,
};

pub enum Failure {
    Lib(circreg::Error),
    Input(String),
}

impl Failure {
    pub fn is_numerical(&self) -> bool {
        matches!(self, Failure::Lib(e) if e.is_numerical())
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Lib(e) => write!(f, "{e}"),
            Failure::Input(s) => f.write_str(s),
        }
    }
}

impl From<circreg::Error> for Failure {
    fn from(e: circreg::Error) -> Self {
        Failure::Lib(e)
    }
}

type Result<T> = std::result::Result<T, Failure>;

fn input(msg: impl Into<String>) -> Failure {
    Failure::Input(msg.into())
}

pub fn run(command: Command, argv: &[String]) -> Result<()> {
    let start = Instant::now();
    let mut report = RunReport::new(argv.iter().cloned());
    let target = match &command {
        Command::Denoise1d(a) => reconstruct("denoise1d", 1, a, None, &mut report)?,
        Command::Denoise2d(a) => reconstruct("denoise2d", 2, a, None, &mut report)?,
        Command::Inpaint(a) => reconstruct_masked(a, &mut report)?,
        Command::TvDenoise(a) => tv(false, a, &mut report)?,
        Command::TvInpaint(a) => tv(true, a, &mut report)?,
        Command::BbmStudy(a) => bbm(a, &mut report)?,
        Command::ConjectureStudy(a) => conjecture(a, &mut report)?,
        Command::ConvergenceStudy(a) => convergence(a, &mut report)?,
        Command::PoincareStudy(a) => poincare(a, &mut report)?,
        Command::MakeRainbow(a) => return make_rainbow(a),
        Command::AddNoise(a) => return noise(a),
    };
    report.wall_time_ms = start.elapsed().as_millis() as u64;
    let json = report.to_json()?;
    match target {
        Some(path) => std::fs::write(path, json).map_err(|e| circreg::Error::Io {
            path: path.to_owned(),
            source: e,
        })?,
        None => print!("{json}"),
    }
    Ok(())
}

fn is_csv(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("csv"))
}

fn load_field(path: &Path, hue: bool, extent: f64) -> Result<AngleField> {
    Ok(if is_csv(path) {
        io::load_signal_csv(path, extent)?
    } else if hue {
        io::extract_hue(path)?
    } else {
        io::load_angle_image(path)?
    })
}

fn save_field(field: &AngleField, path: &Path, hue: bool) -> Result<()> {
    if is_csv(path) {
        io::save_signal_csv(field, path)?;
    } else if hue {
        io::render_hsv(field, path)?;
    } else {
        io::save_angle_image(field, path)?;
    }
    Ok(())
}

fn metric(m: MetricArg, allow_absolute: bool) -> Result<Metric> {
    match m {
        MetricArg::Geodesic => Ok(Metric::S1Geodesic),
        MetricArg::Chord => Ok(Metric::EuclideanChord),
        MetricArg::Absolute if allow_absolute => Ok(Metric::Absolute),
        MetricArg::Absolute => Err(input("--metric absolute is only available in the studies")),
    }
}

fn profile(p: ProfileArg) -> Profile {
    match p {
        ProfileArg::Gaussian => Profile::Gaussian,
        ProfileArg::Bump => Profile::Bump,
    }
}

fn functional(f: &FunctionalArgs, dim: usize, alpha: f64, allow_absolute: bool) -> Result<FunctionalParams> {
    let mollifier = if f.l == 1 {
        Some(MollifierSpec::new(profile(f.mollifier), f.eps, dim)?)
    } else {
        None
    };
    let k = f.k.unwrap_or(dim as f64);
    Ok(FunctionalParams::new(
        f.p,
        f.s,
        k,
        f.l,
        alpha,
        metric(f.metric, allow_absolute)?,
        mollifier,
    )?)
}

fn descent(d: &DescentArgs, grid: &GridSpec) -> Result<DescentConfig> {
    let step = d.step_size.unwrap_or_else(|| DescentConfig::default_step_size(grid));
    Ok(DescentConfig::new(d.steps, step, d.record_every)?)
}

fn check_dim(name: &str, field: &AngleField, dim: usize) -> Result<()> {
    if field.grid().ndim() != dim {
        let what = if dim == 1 { "a 1D signal (.csv)" } else { "an image" };
        return Err(input(format!("{name} expects {what}")));
    }
    Ok(())
}

struct Loaded {
    noisy: AngleField,
    clean: Option<AngleField>,
    noise: NoiseSpec,
}

fn load_inputs(io_args: &IoArgs, noise: &crate::NoiseArgs) -> Result<Loaded> {
    let data = load_field(&io_args.input, io_args.hue, io_args.extent)?;
    let spec = NoiseSpec::new(noise.sigma, noise.seed)?;
    let noisy = add_noise(&data, &spec)?;
    let clean = match &io_args.clean {
        Some(p) => {
            let c = load_field(p, io_args.hue, io_args.extent)?;
            data.grid().ensure_same(c.grid(), "clean reference")?;
            Some(c)
        }
        None => None,
    };
    Ok(Loaded { noisy, clean, noise: spec })
}

fn merge(report: &mut RunReport, inner: RunReport) {
    report.params = inner.params;
    report.energy_trace = inner.energy_trace;
    report.metrics = inner.metrics;
    report.tables = inner.tables;
}

fn reconstruct<'a>(
    name: &str,
    dim: usize,
    a: &'a ReconstructArgs,
    mask: Option<(&Path, InpaintInit)>,
    report: &mut RunReport,
) -> Result<Option<&'a Path>> {
    let alpha = a
        .functional
        .alpha
        .ok_or_else(|| input(format!("{name} requires --alpha")))?;
    let loaded = load_inputs(&a.io, &a.noise)?;
    check_dim(name, &loaded.noisy, dim)?;
    let grid = *loaded.noisy.grid();
    let params = functional(&a.functional, grid.ndim(), alpha, false)?;
    let cfg = descent(&a.descent, &grid)?;
    let mut opts = RunOptions {
        trunc_tol: a.functional.trunc_tol,
        clean: loaded.clean.clone(),
        ..Default::default()
    };
    let (u, inner) = match mask {
        None => denoise(&loaded.noisy, &params, &cfg, &opts)?,
        Some((path, init)) => {
            let m = io::load_mask(path, &grid)?;
            opts.init = init;
            let observed = circreg::pipeline::ForwardOp::Masking(m.clone()).apply(&loaded.noisy)?;
            inpaint(&observed, &m, &params, &cfg, &opts)?
        }
    };
    merge(report, inner);
    report.param("noise", loaded.noise)?;
    report.seed = Some(loaded.noise.seed);
    if let Some(out) = &a.io.out {
        save_field(&u, out, a.io.hue)?;
    }
    Ok(a.io.report.as_deref())
}

fn reconstruct_masked<'a>(a: &'a InpaintArgs, report: &mut RunReport) -> Result<Option<&'a Path>> {
    let init = match a.init {
        InitArg::Zeros => InpaintInit::Zeros,
        InitArg::Tv => InpaintInit::TotalVariation {
            lambda: a.tv_lambda,
            iters: a.tv_iters,
        },
    };
    reconstruct("inpaint", 2, &a.run, Some((&a.mask, init)), report)
}

fn tv<'a>(masked: bool, a: &'a TvArgs, report: &mut RunReport) -> Result<Option<&'a Path>> {
    let loaded = load_inputs(&a.io, &a.noise)?;
    let grid = *loaded.noisy.grid();
    let raw = match (masked, &a.mask) {
        (true, Some(p)) => {
            let m: Mask = io::load_mask(p, &grid)?;
            tv_inpaint(&grid, loaded.noisy.values(), &m, a.lambda, a.iters)?
        }
        (true, None) => return Err(input("tv-inpaint requires --mask")),
        (false, Some(_)) => return Err(input("tv-denoise takes no --mask; use tv-inpaint")),
        (false, None) => tv_denoise(&grid, loaded.noisy.values(), a.lambda, a.iters)?,
    };
    let u = AngleField::new(grid, raw)?;
    report
        .param("lambda", a.lambda)?
        .param("iters", a.iters)?
        .param("grid", grid)?
        .param("noise", loaded.noise)?;
    report.seed = Some(loaded.noise.seed);
    if let Some(c) = &loaded.clean {
        report.metric("wrapped_rmse", wrapped_rmse(&u, c)?);
        report.metric("wrapped_rmse_observed", wrapped_rmse(&loaded.noisy, c)?);
    }
    if let Some(out) = &a.io.out {
        save_field(&u, out, a.io.hue)?;
    }
    Ok(a.io.report.as_deref())
}

fn study_grid(f: &TestFunctionArgs) -> Result<GridSpec> {
    Ok(match f.dim {
        1 => GridSpec::line(f.n, 1.0)?,
        2 => GridSpec::plane(f.n, f.n, [1.0, 1.0])?,
        d => return Err(input(format!("--dim {d} must be 1 or 2"))),
    })
}

fn test_function(f: &TestFunctionArgs) -> TestFunction {
    let second = if f.dim == 2 { f.freq } else { 0.0 };
    match f.function {
        FunctionArg::Sine => TestFunction::Sine { freq: [f.freq, second] },
        FunctionArg::Linear => TestFunction::Linear { slope: [f.freq, second] },
        FunctionArg::Gaussian => TestFunction::Gaussian {
            center: [0.5, if f.dim == 2 { 0.5 } else { 0.0 }],
            width: f.width,
        },
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn bbm<'a>(a: &'a BbmArgs, report: &mut RunReport) -> Result<Option<&'a Path>> {
    let f = &a.f;
    let grid = study_grid(f)?;
    let func = test_function(f);
    let table = bbm_limit_study(&func, &grid, metric(f.metric, true)?, f.p, &f.eps_list, profile(f.mollifier))?;
    report.param("function", func)?.param("grid", grid)?.param("p", f.p)?;
    report.metric("approaches_one", flag(table.approaches_one()));
    if let Some(r) = table.final_ratio() {
        report.metric("final_ratio", r);
    }
    report.table("bbm", &table)?;
    Ok(f.report.as_deref())
}

fn conjecture<'a>(a: &'a ConjectureArgs, report: &mut RunReport) -> Result<Option<&'a Path>> {
    let f = &a.f;
    let grid = study_grid(f)?;
    let func = test_function(f);
    let table = conjecture_study(&func, &grid, metric(f.metric, true)?, f.p, a.s, &f.eps_list, profile(f.mollifier))?;
    report.param("function", func)?.param("grid", grid)?.param("p", f.p)?.param("s", a.s)?;
    report.metric("stabilized", flag(table.stabilized));
    report.metric("degenerate", flag(table.degenerate));
    report.metric("seminorm", table.seminorm);
    report.table("conjecture", &table)?;
    Ok(f.report.as_deref())
}

fn convergence<'a>(a: &'a ConvergenceArgs, report: &mut RunReport) -> Result<Option<&'a Path>> {
    let clean = match &a.clean {
        Some(p) => io::load_signal_csv(p, 1.0)?,
        None => scenes::phase_signal(a.n)?,
    };
    let grid = *clean.grid();
    // alpha comes from the rule; the placeholder only passes validation
    let params = functional(&a.functional, grid.ndim(), 1.0, false)?;
    let rule = AlphaRule::new(a.rule_c, a.rule_exponent.unwrap_or(a.functional.p / 2.0))?;
    let cfg = descent(&a.descent, &grid)?;
    let table = convergence_study(&clean, &a.sigmas, rule, &params, &cfg, &a.seeds)?;
    let decreasing = table.rows.windows(2).all(|w| w[1].median_rmse < w[0].median_rmse);
    report.param("functional", params)?.param("descent", cfg)?.param("seeds", &a.seeds)?;
    report.metric("rule_admissible", flag(table.rule_admissible));
    report.metric("median_rmse_decreasing", flag(decreasing));
    report.table("convergence", &table)?;
    if !table.rule_admissible {
        eprintln!("warning: {}", table.rule_note);
    }
    Ok(a.report.as_deref())
}

fn poincare<'a>(a: &'a PoincareArgs, report: &mut RunReport) -> Result<Option<&'a Path>> {
    let mask = match &a.mask {
        Some(p) => io::read_mask(p)?,
        None => {
            let grid = GridSpec::line(a.n, 1.0)?;
            let (lo, hi) = (2 * a.n / 5, 3 * a.n / 5);
            Mask::from_unknown(grid, |i| (lo..hi).contains(&i))?
        }
    };
    let grid = *mask.grid();
    let params = functional(&a.functional, grid.ndim(), 1.0, true)?;
    let summary = poincare_ratio_study(&grid, &mask, &params, a.samples, a.seed, a.functional.trunc_tol)?;
    report.param("functional", params)?.param("grid", grid)?.param("samples", a.samples)?;
    report.seed = Some(a.seed);
    report.metric("max_ratio", summary.max_ratio);
    report.metric("constant_ratio", summary.constant_ratio);
    Ok(a.report.as_deref())
}

fn make_rainbow(a: &RainbowArgs) -> Result<()> {
    let u = scenes::rainbow(a.rows, a.cols)?;
    save_field(&u, &a.out, a.hue)
}

fn noise(a: &AddNoiseArgs) -> Result<()> {
    let u = load_field(&a.input, a.hue, a.extent)?;
    let noisy = add_noise(&u, &NoiseSpec::new(a.noise.sigma, a.noise.seed)?)?;
    save_field(&noisy, &a.out, a.hue)
}
