use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;

/// Variational regularization of circle-valued signals and images.
///
/// Angles are radians in [0, 2π). Signals are CSV files with one value per
/// line; images are 8/16-bit grayscale PNG or PGM where pixel v means
/// 2π·v/(max+1), or RGB images read through their hue with --hue.
///
/// Exit codes: 0 success, 2 input error, 3 numerical failure.
#[derive(Parser, Debug)]
#[command(name = "circreg", version)]
struct Cli {
    /// Worker threads for kernel sums (default: one per core).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Denoise a 1D signal (CSV).
    Denoise1d(ReconstructArgs),
    /// Denoise an image.
    Denoise2d(ReconstructArgs),
    /// Fill the unknown region of an image given by --mask.
    Inpaint(InpaintArgs),
    /// TV (ROF) denoising of the raw angle values, for comparison.
    TvDenoise(TvArgs),
    /// TV inpainting of the raw angle values, for comparison.
    TvInpaint(TvArgs),
    /// Compare the mollified s=1 functional with K·∫|∇u|^p as eps shrinks.
    BbmStudy(BbmArgs),
    /// Ratio of the mollified k=0 functional to the W^{s,p} seminorm.
    ConjectureStudy(ConjectureArgs),
    /// Reconstruction error as the noise level shrinks, with alpha = c·delta^e.
    ConvergenceStudy(ConvergenceArgs),
    /// Largest Poincaré-type ratio over random smooth fields.
    PoincareStudy(PoincareArgs),
    /// Write the two-turn rainbow test image u(i,j) = 4πi/rows mod 2π.
    MakeRainbow(RainbowArgs),
    /// Add wrapped Gaussian noise to a signal or image.
    AddNoise(AddNoiseArgs),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum MetricArg {
    Geodesic,
    Chord,
    /// |a - b| on raw values; studies of real-valued fields only.
    Absolute,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ProfileArg {
    Gaussian,
    Bump,
}

#[derive(Args, Debug)]
struct FunctionalArgs {
    /// Smoothness order in (0, 1].
    #[arg(long)]
    s: f64,
    /// Exponent p > 1.
    #[arg(long)]
    p: f64,
    /// Extra distance exponent in [0, N] (default N).
    #[arg(long)]
    k: Option<f64>,
    /// 1 multiplies the kernel by the mollifier, 0 drops it.
    #[arg(long, default_value_t = 1)]
    l: u8,
    /// Regularization weight.
    #[arg(long)]
    alpha: Option<f64>,
    /// Mollifier width, in units of the domain extent.
    #[arg(long, default_value_t = 0.01)]
    eps: f64,
    #[arg(long, value_enum, default_value = "geodesic")]
    metric: MetricArg,
    #[arg(long, value_enum, default_value = "gaussian")]
    mollifier: ProfileArg,
    /// Drop Gaussian kernel taps below this fraction of the peak.
    #[arg(long, default_value_t = 1e-12)]
    trunc_tol: f64,
}

#[derive(Args, Debug)]
struct DescentArgs {
    #[arg(long, default_value_t = 100)]
    steps: usize,
    /// Fixed step length (default 1e-3 / h^N).
    #[arg(long)]
    step_size: Option<f64>,
    /// Record the energy every this many steps.
    #[arg(long, default_value_t = 10)]
    record_every: usize,
}

#[derive(Args, Debug)]
struct NoiseArgs {
    /// Standard deviation of the added noise, in radians (0 adds none).
    #[arg(long, default_value_t = 0.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct IoArgs {
    /// Input signal (.csv) or image.
    input: PathBuf,
    /// Read and write RGB images through their hue.
    #[arg(long)]
    hue: bool,
    /// Domain length of a CSV signal.
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    /// Ground truth in the input's format; enables RMSE metrics.
    #[arg(long)]
    clean: Option<PathBuf>,
    /// Result file (.csv for signals, otherwise an image).
    #[arg(long)]
    out: Option<PathBuf>,
    /// JSON report.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    functional: FunctionalArgs,
    #[command(flatten)]
    descent: DescentArgs,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum InitArg {
    /// Unknown pixels start at angle 0.
    Zeros,
    /// Unknown pixels start from TV inpainting of the raw angles.
    Tv,
}

#[derive(Args, Debug)]
struct InpaintArgs {
    #[command(flatten)]
    run: ReconstructArgs,
    /// Mask image of the same size: nonzero pixels are unknown.
    #[arg(long)]
    mask: PathBuf,
    #[arg(long, value_enum, default_value = "zeros")]
    init: InitArg,
    /// Data weight of the TV initialization.
    #[arg(long, default_value_t = 50.0)]
    tv_lambda: f64,
    #[arg(long, default_value_t = 300)]
    tv_iters: usize,
}

#[derive(Args, Debug)]
struct TvArgs {
    #[command(flatten)]
    io: IoArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Data weight λ in TV + λ/2·|u - f|².
    #[arg(long, default_value_t = 10.0)]
    lambda: f64,
    #[arg(long, default_value_t = 100)]
    iters: usize,
    /// Mask image (tv-inpaint): nonzero pixels are unknown.
    #[arg(long)]
    mask: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum FunctionArg {
    /// sin(2π f x) in 1D, sin(2π f (x + y)) in 2D.
    Sine,
    /// exp(-|x - c|²/w²) centered in the domain.
    Gaussian,
    /// f·x (1D), f·(x + y) (2D).
    Linear,
}

#[derive(Args, Debug)]
struct TestFunctionArgs {
    #[arg(long, value_enum, default_value = "sine")]
    function: FunctionArg,
    /// Frequency or slope.
    #[arg(long, default_value_t = 1.0)]
    freq: f64,
    /// Width of the Gaussian test function.
    #[arg(long, default_value_t = 0.2)]
    width: f64,
    /// Points per axis on the unit interval or square.
    #[arg(long, default_value_t = 2048)]
    n: usize,
    #[arg(long, default_value_t = 1)]
    dim: usize,
    #[arg(long, default_value_t = 2.0)]
    p: f64,
    /// Strictly decreasing, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    eps_list: Vec<f64>,
    #[arg(long, value_enum, default_value = "gaussian")]
    mollifier: ProfileArg,
    #[arg(long, value_enum, default_value = "absolute")]
    metric: MetricArg,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BbmArgs {
    #[command(flatten)]
    f: TestFunctionArgs,
}

#[derive(Args, Debug)]
struct ConjectureArgs {
    #[command(flatten)]
    f: TestFunctionArgs,
    #[arg(long)]
    s: f64,
}

#[derive(Args, Debug)]
struct ConvergenceArgs {
    /// Clean signal (.csv); the built-in wrapped phase signal when omitted.
    clean: Option<PathBuf>,
    /// Samples of the built-in signal.
    #[arg(long, default_value_t = 100)]
    n: usize,
    /// Strictly decreasing noise levels, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    sigmas: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0,1,2,3,4")]
    seeds: Vec<u64>,
    /// alpha = c · delta^exponent.
    #[arg(long, default_value_t = 1.0)]
    rule_c: f64,
    /// Default p/2.
    #[arg(long)]
    rule_exponent: Option<f64>,
    #[command(flatten)]
    functional: FunctionalArgs,
    #[command(flatten)]
    descent: DescentArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PoincareArgs {
    /// Mask image; its size fixes the grid. Without it, a line of --n points
    /// whose middle fifth is unknown.
    #[arg(long)]
    mask: Option<PathBuf>,
    #[arg(long, default_value_t = 100)]
    n: usize,
    #[arg(long, default_value_t = 200)]
    samples: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    functional: FunctionalArgs,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RainbowArgs {
    #[arg(long, default_value_t = 60)]
    rows: usize,
    #[arg(long, default_value_t = 60)]
    cols: usize,
    /// Write an RGB hue image instead of a 16-bit angle map.
    #[arg(long)]
    hue: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AddNoiseArgs {
    input: PathBuf,
    #[arg(long)]
    hue: bool,
    #[arg(long, default_value_t = 1.0)]
    extent: f64,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    // the program path varies between installs; echo a fixed name
    let argv: Vec<String> = std::iter::once("circreg".to_owned()).chain(std::env::args().skip(1)).collect();
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match commands::run(cli.command, &argv) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_numerical() { 3 } else { 2 })
        }
    }
}
