//! Denoising and timing experiments, reported as tables.
//!
//! Every randomized run takes an explicit seed. With the direct engine the
//! numbers are bit-for-bit reproducible; the fast engine is reproducible
//! too, since its reductions run in a fixed order.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::bilateral::{filter_direct, FilterParams, Variant};
use crate::error::{invalid, Error, Result};
use crate::fast::fast_improved_bilateral;
use crate::image::Image;
use crate::metrics::{psnr, MetricsReport};
use crate::noise::{add_gaussian_noise, NoiseSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Direct,
    Fast,
}

impl Engine {
    pub fn name(self) -> &'static str {
        match self {
            Engine::Direct => "direct",
            Engine::Fast => "fast",
        }
    }
}

impl fmt::Display for Engine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Engine {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "direct" => Ok(Engine::Direct),
            "fast" => Ok(Engine::Fast),
            other => Err(invalid("engine", format!("unknown engine `{other}`"))),
        }
    }
}

/// Runs `params.variant` on `noisy` with the chosen engine.
///
/// The fast engine only covers the improved variant. `clean` is needed by
/// the oracle variant and ignored otherwise.
pub fn denoise(
    noisy: &Image,
    clean: Option<&Image>,
    params: &FilterParams,
    engine: Engine,
    epsilon: Option<f64>,
) -> Result<Image> {
    match engine {
        Engine::Direct => filter_direct(noisy, clean, params),
        Engine::Fast => fast_improved_bilateral(noisy, params, epsilon),
    }
}

/// A header plus rows of preformatted cells.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// `key=value` pairs describing the run, echoed before the header.
    pub config: Vec<(String, String)>,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    /// Comma-separated values; the configuration goes on `#` lines first.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.config {
            out.push_str(&format!("# {k}={v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    /// Space-aligned columns for reading in a terminal.
    pub fn to_text(&self) -> String {
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
        for row in &self.rows {
            for (w, cell) in widths.iter_mut().zip(row) {
                *w = (*w).max(cell.len());
            }
        }
        let line = |cells: &mut dyn Iterator<Item = &str>| {
            let padded: Vec<String> = cells
                .zip(&widths)
                .map(|(c, &w)| format!("{c:>w$}"))
                .collect();
            padded.join("  ").trim_end().to_string() + "\n"
        };
        let mut out = String::new();
        for (k, v) in &self.config {
            out.push_str(&format!("{k}: {v}\n"));
        }
        out.push_str(&line(&mut self.header.iter().copied()));
        for row in &self.rows {
            out.push_str(&line(&mut row.iter().map(String::as_str)));
        }
        out
    }
}

pub fn fmt_db(v: f64) -> String {
    format!("{v:.4}")
}

pub fn fmt_ssim(v: f64) -> String {
    format!("{v:.6}")
}

fn fmt_list<T: fmt::Display>(items: &[T]) -> String {
    items
        .iter()
        .map(|v| v.to_string())
        .collect::<Vec<_>>()
        .join(" ")
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepLConfig {
    pub box_radii: Vec<usize>,
    pub noise_sigmas: Vec<f64>,
    pub sigma_s: f64,
    pub sigma_r: f64,
    pub seed: u64,
    pub engine: Engine,
}

impl SweepLConfig {
    /// Box radii 0 to 5 at noise levels 20 and 30, filtered with
    /// sigma_s = 6 and sigma_r = 20.
    pub fn new(seed: u64) -> Self {
        Self {
            box_radii: (0..=5).collect(),
            noise_sigmas: vec![20.0, 30.0],
            sigma_s: 6.0,
            sigma_r: 20.0,
            seed,
            engine: Engine::Direct,
        }
    }

    fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("experiment".into(), "sweep-l".into()),
            ("l".into(), fmt_list(&self.box_radii)),
            ("sigma".into(), fmt_list(&self.noise_sigmas)),
            ("sigma_s".into(), self.sigma_s.to_string()),
            ("sigma_r".into(), self.sigma_r.to_string()),
            (
                "window".into(),
                crate::bilateral::default_window(self.sigma_s).to_string(),
            ),
            ("seed".into(), self.seed.to_string()),
            ("engine".into(), self.engine.to_string()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepLRow {
    pub box_radius: usize,
    pub noise_sigma: f64,
    pub psnr: f64,
}

/// PSNR of the improved filter against `clean` for each box radius and
/// noise level. Each noise level is corrupted once, with `config.seed`.
pub fn sweep_l(clean: &Image, config: &SweepLConfig) -> Result<Vec<SweepLRow>> {
    if config.box_radii.is_empty() {
        return Err(invalid("l", "at least one box radius is required"));
    }
    let mut rows = Vec::with_capacity(config.box_radii.len() * config.noise_sigmas.len());
    for &sigma in &config.noise_sigmas {
        let noisy = add_gaussian_noise(clean, NoiseSpec::new(sigma, config.seed)?);
        for &l in &config.box_radii {
            let params = FilterParams::new(config.sigma_s, config.sigma_r)?.with_box_radius(l);
            let out = denoise(&noisy, None, &params, config.engine, None)?;
            rows.push(SweepLRow {
                box_radius: l,
                noise_sigma: sigma,
                psnr: psnr(&out, clean)?,
            });
        }
    }
    Ok(rows)
}

pub fn sweep_l_table(config: &SweepLConfig, rows: &[SweepLRow]) -> Table {
    Table {
        config: config.describe(),
        header: vec!["l", "sigma", "psnr_db"],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.box_radius.to_string(),
                    r.noise_sigma.to_string(),
                    fmt_db(r.psnr),
                ]
            })
            .collect(),
    }
}

/// Box radius with the highest PSNR at `sigma`; ties go to the smaller radius.
pub fn best_box_radius(rows: &[SweepLRow], sigma: f64) -> Option<&SweepLRow> {
    rows.iter()
        .filter(|r| r.noise_sigma == sigma)
        .fold(None, |best: Option<&SweepLRow>, r| match best {
            Some(b) if b.psnr >= r.psnr => Some(b),
            _ => Some(r),
        })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSigmaConfig {
    pub noise_sigmas: Vec<f64>,
    pub sigma_s_grid: Vec<f64>,
    pub sigma_r_grid: Vec<f64>,
    pub box_radius: usize,
    pub seed: u64,
    /// Engine for the improved filter; the standard filter is always direct.
    pub engine: Engine,
}

impl SweepSigmaConfig {
    /// Noise levels 10 to 50, sigma_s in 2..=5 and sigma_r in 10..=60 by 10.
    pub fn new(seed: u64) -> Self {
        Self {
            noise_sigmas: vec![10.0, 20.0, 30.0, 40.0, 50.0],
            sigma_s_grid: vec![2.0, 3.0, 4.0, 5.0],
            sigma_r_grid: (1..=6).map(|k| 10.0 * f64::from(k)).collect(),
            box_radius: 1,
            seed,
            engine: Engine::Direct,
        }
    }

    fn describe(&self) -> Vec<(String, String)> {
        vec![
            ("experiment".into(), "sweep-sigma".into()),
            ("sigma".into(), fmt_list(&self.noise_sigmas)),
            ("sigma_s_grid".into(), fmt_list(&self.sigma_s_grid)),
            ("sigma_r_grid".into(), fmt_list(&self.sigma_r_grid)),
            ("l".into(), self.box_radius.to_string()),
            ("window".into(), "ceil(3 sigma_s)".into()),
            ("seed".into(), self.seed.to_string()),
            ("engine".into(), self.engine.to_string()),
        ]
    }
}

/// Best grid point for one filter, judged by PSNR.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BestSetting {
    pub sigma_s: f64,
    pub sigma_r: f64,
    pub psnr: f64,
    pub ssim: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSigmaRow {
    pub noise_sigma: f64,
    pub noisy_psnr: f64,
    pub standard: BestSetting,
    pub improved: BestSetting,
}

/// Standard against improved filter across noise levels, each at its best
/// `(sigma_s, sigma_r)` on the grid.
pub fn sweep_sigma(clean: &Image, config: &SweepSigmaConfig) -> Result<Vec<SweepSigmaRow>> {
    if config.sigma_s_grid.is_empty() || config.sigma_r_grid.is_empty() {
        return Err(invalid("grid", "the parameter grid is empty"));
    }
    let mut rows = Vec::with_capacity(config.noise_sigmas.len());
    for &sigma in &config.noise_sigmas {
        let noisy = add_gaussian_noise(clean, NoiseSpec::new(sigma, config.seed)?);
        let mut best: [Option<(f64, f64, f64, Image)>; 2] = [None, None];
        for &ss in &config.sigma_s_grid {
            for &sr in &config.sigma_r_grid {
                let base = FilterParams::new(ss, sr)?.with_box_radius(config.box_radius);
                let runs = [
                    (base.with_variant(Variant::Standard), Engine::Direct),
                    (base, config.engine),
                ];
                for (slot, (params, engine)) in best.iter_mut().zip(runs) {
                    let out = denoise(&noisy, None, &params, engine, None)?;
                    let p = psnr(&out, clean)?;
                    if slot.as_ref().is_none_or(|b| p > b.2) {
                        *slot = Some((ss, sr, p, out));
                    }
                }
            }
        }
        let [standard, improved] = best.map(|b| b.expect("grid is non-empty"));
        let settle =
            |(sigma_s, sigma_r, psnr, out): (f64, f64, f64, Image)| -> Result<BestSetting> {
                Ok(BestSetting {
                    sigma_s,
                    sigma_r,
                    psnr,
                    ssim: MetricsReport::compute(&out, clean)?.ssim,
                })
            };
        rows.push(SweepSigmaRow {
            noise_sigma: sigma,
            noisy_psnr: psnr(&noisy, clean)?,
            standard: settle(standard)?,
            improved: settle(improved)?,
        });
    }
    Ok(rows)
}

pub fn sweep_sigma_table(config: &SweepSigmaConfig, rows: &[SweepSigmaRow]) -> Table {
    Table {
        config: config.describe(),
        header: vec![
            "sigma",
            "noisy_psnr_db",
            "sbf_psnr_db",
            "sbf_ssim",
            "sbf_sigma_s",
            "sbf_sigma_r",
            "ibf_psnr_db",
            "ibf_ssim",
            "ibf_sigma_s",
            "ibf_sigma_r",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.noise_sigma.to_string(),
                    fmt_db(r.noisy_psnr),
                    fmt_db(r.standard.psnr),
                    fmt_ssim(r.standard.ssim),
                    r.standard.sigma_s.to_string(),
                    r.standard.sigma_r.to_string(),
                    fmt_db(r.improved.psnr),
                    fmt_ssim(r.improved.ssim),
                    r.improved.sigma_s.to_string(),
                    r.improved.sigma_r.to_string(),
                ]
            })
            .collect(),
    }
}

/// One setting of [`fast_filter_sweep`].
#[derive(Debug, Clone)]
pub struct SweepResult {
    pub params: FilterParams,
    pub fast: Image,
    pub fast_time: Duration,
    pub direct_time: Duration,
    /// Largest pixel difference between the two engines.
    pub max_abs_diff: f64,
}

/// Runs the direct and fast improved filters once per setting, timing both.
pub fn fast_filter_sweep(img: &Image, grid: &[FilterParams]) -> Result<Vec<SweepResult>> {
    if grid.is_empty() {
        return Err(invalid("grid", "the parameter grid is empty"));
    }
    grid.iter()
        .map(|params| {
            let params = params.with_variant(Variant::Improved);
            let start = Instant::now();
            let direct = filter_direct(img, None, &params)?;
            let direct_time = start.elapsed();
            let start = Instant::now();
            let fast = fast_improved_bilateral(img, &params, None)?;
            let fast_time = start.elapsed();
            let max_abs_diff = max_abs_diff(&fast, &direct)?;
            Ok(SweepResult {
                params,
                fast,
                fast_time,
                direct_time,
                max_abs_diff,
            })
        })
        .collect()
}

pub fn max_abs_diff(a: &Image, b: &Image) -> Result<f64> {
    a.check_same_shape(b)?;
    Ok(a.pixels()
        .iter()
        .zip(b.pixels())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max))
}

/// Default `(sigma_s, sigma_r)` settings for timing runs.
pub const TIMING_GRID: [(f64, f64); 6] = [
    (2.0, 15.0),
    (4.0, 20.0),
    (3.0, 25.0),
    (5.0, 30.0),
    (3.0, 35.0),
    (4.0, 40.0),
];

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub grid: Vec<(f64, f64)>,
    pub box_radius: usize,
    pub repetitions: usize,
    pub noise_sigma: f64,
    pub seed: u64,
}

impl BenchConfig {
    pub fn new(seed: u64) -> Self {
        Self {
            grid: TIMING_GRID.to_vec(),
            box_radius: 1,
            repetitions: 3,
            noise_sigma: 20.0,
            seed,
        }
    }

    fn describe(&self) -> Vec<(String, String)> {
        let grid: Vec<String> = self.grid.iter().map(|(s, r)| format!("{s}/{r}")).collect();
        vec![
            ("experiment".into(), "bench".into()),
            ("grid".into(), grid.join(" ")),
            ("l".into(), self.box_radius.to_string()),
            ("repetitions".into(), self.repetitions.to_string()),
            ("sigma".into(), self.noise_sigma.to_string()),
            ("seed".into(), self.seed.to_string()),
            ("threads".into(), rayon::current_num_threads().to_string()),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchRow {
    pub sigma_s: f64,
    pub sigma_r: f64,
    /// Median seconds over the repetitions.
    pub direct_secs: f64,
    pub fast_secs: f64,
    pub max_abs_diff: f64,
}

impl BenchRow {
    pub fn ratio(&self) -> f64 {
        self.fast_secs / self.direct_secs
    }
}

/// Median wall times of the direct and fast improved filters on the noisy
/// version of `clean`. Repetitions run one after another.
pub fn bench(clean: &Image, config: &BenchConfig) -> Result<Vec<BenchRow>> {
    if config.repetitions == 0 {
        return Err(invalid("repetitions", "must be at least 1"));
    }
    let noisy = add_gaussian_noise(clean, NoiseSpec::new(config.noise_sigma, config.seed)?);
    let grid = config
        .grid
        .iter()
        .map(|&(ss, sr)| FilterParams::new(ss, sr).map(|p| p.with_box_radius(config.box_radius)))
        .collect::<Result<Vec<_>>>()?;
    let mut samples = vec![(Vec::new(), Vec::new(), 0.0f64); grid.len()];
    for _ in 0..config.repetitions {
        for (sample, run) in samples.iter_mut().zip(fast_filter_sweep(&noisy, &grid)?) {
            sample.0.push(run.direct_time.as_secs_f64());
            sample.1.push(run.fast_time.as_secs_f64());
            sample.2 = sample.2.max(run.max_abs_diff);
        }
    }
    Ok(grid
        .iter()
        .zip(samples)
        .map(|(p, (direct, fast, diff))| BenchRow {
            sigma_s: p.sigma_s,
            sigma_r: p.sigma_r,
            direct_secs: median(direct),
            fast_secs: median(fast),
            max_abs_diff: diff,
        })
        .collect())
}

pub fn bench_table(config: &BenchConfig, rows: &[BenchRow]) -> Table {
    Table {
        config: config.describe(),
        header: vec![
            "sigma_s",
            "sigma_r",
            "direct_s",
            "fast_s",
            "ratio",
            "max_abs_diff",
        ],
        rows: rows
            .iter()
            .map(|r| {
                vec![
                    r.sigma_s.to_string(),
                    r.sigma_r.to_string(),
                    format!("{:.4}", r.direct_secs),
                    format!("{:.4}", r.fast_secs),
                    format!("{:.4}", r.ratio()),
                    format!("{:.4}", r.max_abs_diff),
                ]
            })
            .collect(),
    }
}

/// Middle value; the mean of the middle two for an even count.
pub fn median(mut values: Vec<f64>) -> f64 {
    assert!(!values.is_empty(), "median of nothing");
    values.sort_by(f64::total_cmp);
    let mid = values.len() / 2;
    if values.len() % 2 == 1 {
        values[mid]
    } else {
        0.5 * (values[mid - 1] + values[mid])
    }
}
