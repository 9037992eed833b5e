//! `ibf`: denoise, corrupt and measure PGM images, and run the sweeps and
//! timing comparisons from the command line.
//!
//! Exit status is 0 on success, 1 when reading or writing a file fails and
//! 2 for usage errors and unmet preconditions.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ibf_core::bilateral::{default_window, FilterParams, Variant};
use ibf_core::experiment::{
    bench, bench_table, fmt_db, fmt_ssim, sweep_l, sweep_l_table, sweep_sigma, sweep_sigma_table,
    BenchConfig, Engine, SweepLConfig, SweepSigmaConfig, Table,
};
use ibf_core::fast::{fast_improved_bilateral_with, FastOptions};
use ibf_core::metrics::MetricsReport;
use ibf_core::noise::{add_gaussian_noise, NoiseSpec};
use ibf_core::pgm::{read_pgm_file, write_pgm_file, PgmFormat};
use ibf_core::{fixtures, Error, Image};

#[derive(Parser, Debug)]
#[command(
    name = "ibf",
    version,
    about = "Bilateral denoising of 8-bit grayscale PGM images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Filter a noisy image and optionally score it against a clean one.
    Denoise(DenoiseArgs),
    /// Add white Gaussian noise to an image.
    AddNoise(AddNoiseArgs),
    /// PSNR, SSIM and MSE of an estimate against a reference.
    Metrics(MetricsArgs),
    /// PSNR of the improved filter across box radii and noise levels.
    SweepL(SweepLArgs),
    /// Best standard against best improved filter across noise levels.
    SweepSigma(SweepSigmaArgs),
    /// Median run times of the direct and fast improved filters.
    Bench(BenchArgs),
    /// Write one of the built-in synthetic images.
    Fixture(FixtureArgs),
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum VariantArg {
    #[value(alias = "sbf")]
    Standard,
    #[value(alias = "improved")]
    Ibf,
    Oracle,
    Iterated,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Standard => Variant::Standard,
            VariantArg::Ibf => Variant::Improved,
            VariantArg::Oracle => Variant::Oracle,
            VariantArg::Iterated => Variant::Iterated,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum EngineArg {
    Direct,
    Fast,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Direct => Engine::Direct,
            EngineArg::Fast => Engine::Fast,
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
enum Report {
    #[default]
    Text,
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default)]
enum FormatArg {
    /// Binary raster.
    #[default]
    P5,
    /// ASCII raster.
    P2,
}

impl From<FormatArg> for PgmFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::P5 => PgmFormat::P5,
            FormatArg::P2 => PgmFormat::P2,
        }
    }
}

#[derive(Args, Debug)]
struct DenoiseArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long, value_enum, default_value = "ibf")]
    variant: VariantArg,
    #[arg(long, value_enum, default_value = "direct")]
    engine: EngineArg,
    #[arg(long)]
    sigma_s: f64,
    #[arg(long)]
    sigma_r: f64,
    /// Box prefilter radius for the improved filter.
    #[arg(long = "l", default_value_t = 1)]
    box_radius: usize,
    /// Spatial window radius; defaults to ceil(3 sigma_s).
    #[arg(long)]
    window: Option<usize>,
    /// Kernel truncation tolerance for the fast engine.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Clean image; needed by the oracle variant and for the scores.
    #[arg(long)]
    reference: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    report: Report,
    #[arg(long, value_enum, default_value_t)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct AddNoiseArgs {
    input: PathBuf,
    output: PathBuf,
    #[arg(long)]
    sigma: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_enum, default_value_t)]
    report: Report,
    #[arg(long, value_enum, default_value_t)]
    format: FormatArg,
}

#[derive(Args, Debug)]
struct MetricsArgs {
    estimate: PathBuf,
    reference: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    report: Report,
}

/// Where the clean image of an experiment comes from.
#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Source {
    /// Clean PGM image.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in image: checkerboard, gradient or gradient-512.
    #[arg(long)]
    fixture: Option<String>,
}

impl Source {
    fn load(&self) -> Result<(Image, String), Failure> {
        match (&self.input, &self.fixture) {
            (Some(path), _) => Ok((read_image(path)?, path.display().to_string())),
            (None, Some(name)) => fixtures::by_name(name)
                .map(|img| (img, format!("fixture:{name}")))
                .ok_or_else(|| {
                    Failure::usage(format!(
                        "unknown fixture `{name}`, expected one of {}",
                        fixtures::NAMES.join(", ")
                    ))
                }),
            (None, None) => Err(Failure::usage("give --input or --fixture")),
        }
    }
}

#[derive(Args, Debug)]
struct SweepLArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    seed: u64,
    #[arg(long = "l", value_delimiter = ',', default_value = "0,1,2,3,4,5")]
    box_radii: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "20,30")]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = 6.0)]
    sigma_s: f64,
    #[arg(long, default_value_t = 20.0)]
    sigma_r: f64,
    #[arg(long, value_enum, default_value = "direct")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value_t)]
    report: Report,
    /// Write the table here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepSigmaArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    seed: u64,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50")]
    sigma: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5")]
    sigma_s_grid: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "10,20,30,40,50,60")]
    sigma_r_grid: Vec<f64>,
    #[arg(long = "l", default_value_t = 1)]
    box_radius: usize,
    /// Engine for the improved filter; the standard filter always runs directly.
    #[arg(long, value_enum, default_value = "direct")]
    engine: EngineArg,
    #[arg(long, value_enum, default_value_t)]
    report: Report,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    seed: u64,
    /// Settings as sigma_s:sigma_r pairs.
    #[arg(long, value_delimiter = ',', value_parser = parse_pair,
          default_value = "2:15,4:20,3:25,5:30,3:35,4:40")]
    grid: Vec<(f64, f64)>,
    #[arg(long, default_value_t = 3)]
    repetitions: usize,
    /// Noise added to the clean image before timing.
    #[arg(long, default_value_t = 20.0)]
    sigma: f64,
    #[arg(long = "l", default_value_t = 1)]
    box_radius: usize,
    #[arg(long, value_enum, default_value_t)]
    report: Report,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FixtureArgs {
    /// checkerboard, gradient or gradient-512.
    name: String,
    output: PathBuf,
    #[arg(long, value_enum, default_value_t)]
    format: FormatArg,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| format!("expected sigma_s:sigma_r, got `{s}`"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok((parse(a)?, parse(b)?))
}

/// A message and the exit status it maps to.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn io(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }

    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Io(_) | Error::Pgm { .. } | Error::KernelBreakdown { .. } => {
                Failure::io(e.to_string())
            }
            _ => Failure::usage(e.to_string()),
        }
    }
}

fn read_image(path: &Path) -> Result<Image, Failure> {
    read_pgm_file(path).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn write_image(path: &Path, img: &Image, format: FormatArg) -> Result<(), Failure> {
    write_pgm_file(path, img, format.into())
        .map_err(|e| Failure::io(format!("{}: {e}", path.display())))
}

fn emit(table: &Table, report: Report, output: Option<&Path>) -> Result<(), Failure> {
    let text = match report {
        Report::Text => table.to_text(),
        Report::Csv => table.to_csv(),
    };
    match output {
        Some(path) => {
            fs::write(path, text).map_err(|e| Failure::io(format!("{}: {e}", path.display())))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

fn metrics_table(config: Vec<(String, String)>, m: Option<&MetricsReport>) -> Table {
    Table {
        config,
        header: if m.is_some() {
            vec!["psnr_db", "ssim", "mse"]
        } else {
            vec![]
        },
        rows: m
            .map(|m| {
                vec![vec![
                    fmt_db(m.psnr_db),
                    fmt_ssim(m.ssim),
                    format!("{:.4}", m.mse),
                ]]
            })
            .unwrap_or_default(),
    }
}

fn denoise(args: &DenoiseArgs) -> Result<(), Failure> {
    let variant = Variant::from(args.variant);
    let engine = Engine::from(args.engine);
    if variant == Variant::Oracle && args.reference.is_none() {
        return Err(Failure::usage("the oracle variant needs --reference"));
    }
    if engine == Engine::Fast && variant != Variant::Improved {
        return Err(Failure::usage(format!(
            "the fast engine runs the ibf variant only, got {variant}"
        )));
    }
    let noisy = read_image(&args.input)?;
    let reference = args.reference.as_deref().map(read_image).transpose()?;
    if let Some(r) = &reference {
        if !r.same_shape(&noisy) {
            return Err(Error::DimensionMismatch {
                left_width: noisy.width(),
                left_height: noisy.height(),
                right_width: r.width(),
                right_height: r.height(),
            }
            .into());
        }
    }

    let mut params = FilterParams::new(args.sigma_s, args.sigma_r)?
        .with_variant(variant)
        .with_box_radius(args.box_radius);
    if let Some(w) = args.window {
        params = params.with_window(w);
    }
    params.validate()?;

    let mut config = vec![
        kv("command", "denoise"),
        kv("input", args.input.display()),
        kv("output", args.output.display()),
        kv("variant", variant),
        kv("engine", engine),
        kv("sigma_s", params.sigma_s),
        kv("sigma_r", params.sigma_r),
        kv("window", params.window),
        kv("l", params.box_radius.0),
    ];
    let out = match engine {
        Engine::Direct => ibf_core::bilateral::filter_direct(&noisy, reference.as_ref(), &params)?,
        Engine::Fast => {
            let options = FastOptions {
                epsilon: args.epsilon,
                ..FastOptions::default()
            };
            let run = fast_improved_bilateral_with(&noisy, &params, &options)?;
            let k = &run.approximation;
            config.push(kv("dynamic_range", format!("{:.4}", k.dynamic_range())));
            config.push(kv("order", k.order()));
            config.push(kv("truncation", k.truncation()));
            config.push(kv("terms", run.retained_terms()));
            run.image
        }
    };
    config.push(kv(
        "epsilon",
        args.epsilon
            .map_or_else(|| "default".to_string(), |e| e.to_string()),
    ));
    if let Some(r) = &args.reference {
        config.push(kv("reference", r.display()));
    }
    write_image(&args.output, &out, args.format)?;

    let metrics = reference
        .as_ref()
        .map(|r| MetricsReport::compute(&out, r))
        .transpose()?;
    emit(&metrics_table(config, metrics.as_ref()), args.report, None)
}

fn add_noise(args: &AddNoiseArgs) -> Result<(), Failure> {
    let spec = NoiseSpec::new(args.sigma, args.seed)?;
    let clean = read_image(&args.input)?;
    let noisy = add_gaussian_noise(&clean, spec);
    write_image(&args.output, &noisy, args.format)?;
    // scores the unrounded noisy image
    let m = MetricsReport::compute(&noisy, &clean)?;
    let config = vec![
        kv("command", "add-noise"),
        kv("input", args.input.display()),
        kv("output", args.output.display()),
        kv("sigma", args.sigma),
        kv("seed", args.seed),
    ];
    emit(&metrics_table(config, Some(&m)), args.report, None)
}

fn metrics(args: &MetricsArgs) -> Result<(), Failure> {
    let estimate = read_image(&args.estimate)?;
    let reference = read_image(&args.reference)?;
    let m = MetricsReport::compute(&estimate, &reference)?;
    let config = vec![
        kv("command", "metrics"),
        kv("estimate", args.estimate.display()),
        kv("reference", args.reference.display()),
    ];
    emit(&metrics_table(config, Some(&m)), args.report, None)
}

fn with_source(mut table: Table, source: String) -> Table {
    table.config.insert(1, kv("input", source));
    table
}

fn cmd_sweep_l(args: &SweepLArgs) -> Result<(), Failure> {
    let (clean, source) = args.source.load()?;
    let config = SweepLConfig {
        box_radii: args.box_radii.clone(),
        noise_sigmas: args.sigma.clone(),
        sigma_s: args.sigma_s,
        sigma_r: args.sigma_r,
        seed: args.seed,
        engine: args.engine.into(),
    };
    let rows = sweep_l(&clean, &config)?;
    let table = with_source(sweep_l_table(&config, &rows), source);
    emit(&table, args.report, args.output.as_deref())
}

fn cmd_sweep_sigma(args: &SweepSigmaArgs) -> Result<(), Failure> {
    let (clean, source) = args.source.load()?;
    let config = SweepSigmaConfig {
        noise_sigmas: args.sigma.clone(),
        sigma_s_grid: args.sigma_s_grid.clone(),
        sigma_r_grid: args.sigma_r_grid.clone(),
        box_radius: args.box_radius,
        seed: args.seed,
        engine: args.engine.into(),
    };
    let rows = sweep_sigma(&clean, &config)?;
    let table = with_source(sweep_sigma_table(&config, &rows), source);
    emit(&table, args.report, args.output.as_deref())
}

fn cmd_bench(args: &BenchArgs) -> Result<(), Failure> {
    let (clean, source) = args.source.load()?;
    let config = BenchConfig {
        grid: args.grid.clone(),
        box_radius: args.box_radius,
        repetitions: args.repetitions,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let rows = bench(&clean, &config)?;
    let mut table = with_source(bench_table(&config, &rows), source);
    let windows: Vec<String> = args
        .grid
        .iter()
        .map(|&(s, _)| default_window(s).to_string())
        .collect();
    table.config.push(kv("window", windows.join(" ")));
    emit(&table, args.report, args.output.as_deref())
}

fn fixture(args: &FixtureArgs) -> Result<(), Failure> {
    let img = fixtures::by_name(&args.name).ok_or_else(|| {
        Failure::usage(format!(
            "unknown fixture `{}`, expected one of {}",
            args.name,
            fixtures::NAMES.join(", ")
        ))
    })?;
    write_image(&args.output, &img, args.format)
}

fn run(cli: &Cli) -> Result<(), Failure> {
    match &cli.command {
        Command::Denoise(a) => denoise(a),
        Command::AddNoise(a) => add_noise(a),
        Command::Metrics(a) => metrics(a),
        Command::SweepL(a) => cmd_sweep_l(a),
        Command::SweepSigma(a) => cmd_sweep_sigma(a),
        Command::Bench(a) => cmd_bench(a),
        Command::Fixture(a) => fixture(a),
    }
}

fn main() -> ExitCode {
    // clap exits with status 2 on usage errors by itself
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("ibf: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
