use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use anomscale_core::estimators::{analyze_exponents, ExponentAnalysis, FitOptions};
use anomscale_core::generators::{default_flm_window, DEFAULT_FLM_MESH, DEFAULT_VDP_EPSILON, DEFAULT_VDP_SUBSTEPS};
use anomscale_core::market::{analyze_sessions, ingest_prices, write_minute_bars, ColumnMap, IntervalSpec, SessionSpec, SyntheticDays};
use anomscale_core::{generate as generate_ensemble, io, make_time_grid, Error, ProcessSpec};
use anyhow::{anyhow, Context};
use clap::{Args, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

use crate::FitArgs;

/// An error with the process exit code it maps to.
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

const USAGE: u8 = 2;
const GENERATION: u8 = 3;
const ESTIMATION: u8 = 4;

trait Code<T> {
    fn code(self, code: u8) -> Result<T, Failure>;
}

impl<T, E: Into<anyhow::Error>> Code<T> for Result<T, E> {
    fn code(self, code: u8) -> Result<T, Failure> {
        self.map_err(|e| Failure { code, error: e.into() })
    }
}

fn usage(msg: impl std::fmt::Display) -> Failure {
    Failure {
        code: USAGE,
        error: anyhow!("{msg}"),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Bm,
    Sbm,
    Fbm,
    Sfbm,
    Lm,
    Slm,
    Flm,
    Sflm,
    Vdp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Binary,
    Csv,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    family: Family,
    /// Joseph exponent (FBM, SFBM, FLM, SFLM).
    #[arg(long = "J")]
    joseph: Option<f64>,
    /// Latent exponent (LM, SLM, FLM, SFLM).
    #[arg(long = "L")]
    latent: Option<f64>,
    /// Moses exponent (SBM, SFBM, SLM, SFLM).
    #[arg(long = "M")]
    moses: Option<f64>,
    /// Hurst exponent (VDP).
    #[arg(long = "H")]
    hurst: Option<f64>,
    /// Shape of the VDP diffusion profile.
    #[arg(long)]
    epsilon: Option<f64>,
    /// Euler-Maruyama steps per unit time (VDP).
    #[arg(long)]
    substeps: Option<usize>,
    /// Fine steps per unit time of the fractional Lévy kernel.
    #[arg(long)]
    mesh: Option<usize>,
    /// Kernel length in fine steps; defaults to the whole path.
    #[arg(long)]
    window: Option<usize>,
    #[arg(long)]
    paths: usize,
    #[arg(long)]
    steps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(short = 'o', long)]
    output: PathBuf,
    /// Defaults to CSV for a `.csv` output path and binary otherwise.
    #[arg(long, value_enum)]
    format: Option<Format>,
}

impl GenerateArgs {
    fn spec(&self) -> Result<ProcessSpec, Failure> {
        use Family::*;
        let f = self.family;
        let name = format!("{f:?}").to_uppercase();
        let need = |v: Option<f64>, flag: &str| v.ok_or_else(|| usage(format!("--family {} requires --{flag}", name.to_lowercase())));
        let wants = |flag: &str| match flag {
            "J" => matches!(f, Fbm | Sfbm | Flm | Sflm),
            "L" => matches!(f, Lm | Slm | Flm | Sflm),
            "M" => matches!(f, Sbm | Sfbm | Slm | Sflm),
            "H" | "epsilon" | "substeps" => f == Vdp,
            "mesh" | "window" => matches!(f, Flm | Sflm),
            _ => false,
        };
        let given = [
            ("J", self.joseph.is_some()),
            ("L", self.latent.is_some()),
            ("M", self.moses.is_some()),
            ("H", self.hurst.is_some()),
            ("epsilon", self.epsilon.is_some()),
            ("substeps", self.substeps.is_some()),
            ("mesh", self.mesh.is_some()),
            ("window", self.window.is_some()),
        ];
        if let Some((flag, _)) = given.iter().find(|(flag, set)| *set && !wants(flag)) {
            return Err(usage(format!("--{flag} does not apply to {name}")));
        }
        let mesh = self.mesh.unwrap_or(DEFAULT_FLM_MESH);
        let window = self.window.unwrap_or_else(|| default_flm_window(mesh, self.steps));
        let spec = match f {
            Bm => ProcessSpec::Bm,
            Sbm => ProcessSpec::Sbm { moses: need(self.moses, "M")? },
            Fbm => ProcessSpec::Fbm { joseph: need(self.joseph, "J")? },
            Sfbm => ProcessSpec::Sfbm {
                joseph: need(self.joseph, "J")?,
                moses: need(self.moses, "M")?,
            },
            Lm => ProcessSpec::Lm { latent: need(self.latent, "L")? },
            Slm => ProcessSpec::Slm {
                latent: need(self.latent, "L")?,
                moses: need(self.moses, "M")?,
            },
            Flm => ProcessSpec::Flm {
                joseph: need(self.joseph, "J")?,
                latent: need(self.latent, "L")?,
                mesh,
                window,
            },
            Sflm => ProcessSpec::Sflm {
                joseph: need(self.joseph, "J")?,
                latent: need(self.latent, "L")?,
                moses: need(self.moses, "M")?,
                mesh,
                window,
            },
            Vdp => ProcessSpec::Vdp {
                hurst: need(self.hurst, "H")?,
                epsilon: self.epsilon.unwrap_or(DEFAULT_VDP_EPSILON),
                substeps: self.substeps.unwrap_or(DEFAULT_VDP_SUBSTEPS),
            },
        };
        spec.validate().map_err(usage)?;
        Ok(spec)
    }
}

pub fn generate(args: GenerateArgs) -> Result<(), Failure> {
    let spec = args.spec()?;
    if args.paths == 0 || args.steps == 0 {
        return Err(usage("--paths and --steps must be at least 1"));
    }
    let ensemble = generate_ensemble(&spec, args.paths, args.steps, args.seed).code(GENERATION)?;
    let format = args.format.unwrap_or(match io::EnsembleFormat::from_path(&args.output) {
        io::EnsembleFormat::Csv => Format::Csv,
        io::EnsembleFormat::Binary => Format::Binary,
    });
    let file = File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))
        .code(GENERATION)?;
    let w = BufWriter::new(file);
    match format {
        Format::Binary => io::write_binary(&ensemble, w),
        Format::Csv => io::write_csv(&ensemble, w),
    }
    .code(GENERATION)?;
    let descriptor: Value = serde_json::from_str(ensemble.descriptor()).code(GENERATION)?;
    print_json(&json!({
        "descriptor": descriptor,
        "n_paths": args.paths,
        "n_steps": args.steps,
        "seed": args.seed,
        "output": args.output,
        "format": format,
    }))
}

#[derive(Debug, Args)]
pub struct EstimateArgs {
    /// Ensemble file (binary, or CSV by extension).
    input: PathBuf,
    #[arg(long, default_value_t = 50)]
    t_min: usize,
    /// Requested grid points; rounding may merge some.
    #[arg(long, default_value_t = 500)]
    count: usize,
    /// Largest grid time; defaults to the path length.
    #[arg(long)]
    t_max: Option<usize>,
    #[command(flatten)]
    fit: FitArgs,
}

fn fit_options(fit: &FitArgs) -> Result<FitOptions, Failure> {
    if fit.bootstrap < 2 {
        return Err(usage("--bootstrap must be at least 2"));
    }
    if !(fit.min_decay >= 0.0 && fit.min_decay.is_finite()) {
        return Err(usage("--min-decay must be finite and nonnegative"));
    }
    Ok(FitOptions {
        bootstrap: fit.bootstrap,
        seed: fit.seed,
        k_sigma: fit.k_sigma,
        min_decay: fit.min_decay,
    })
}

fn estimation_error(e: Error) -> Failure {
    Failure {
        code: ESTIMATION,
        error: anyhow::Error::from(e),
    }
}

fn analysis_json(a: &ExponentAnalysis) -> Value {
    let fits: Vec<Value> = a
        .fits
        .iter()
        .map(|f| {
            json!({
                "statistic": f.series.kind().name(),
                "omega_prime": f.series.kind().exponent_label(),
                "fit": f.fit,
                "failed_replicates": f.failed_replicates,
                "t": f.series.times(),
                "values": f.series.values(),
                "variances": f.series.variances(),
            })
        })
        .collect();
    json!({ "report": a.report, "fits": fits })
}

fn write_fit_csvs(dir: &Path, a: &ExponentAnalysis) -> anyhow::Result<()> {
    fs::create_dir_all(dir)?;
    for f in &a.fits {
        let name = f.series.kind().name();
        f.series.write_csv(BufWriter::new(File::create(dir.join(format!("{name}_series.csv")))?))?;
        f.fit.write_curve_csv(&f.series, BufWriter::new(File::create(dir.join(format!("{name}_fit.csv")))?))?;
    }
    Ok(())
}

pub fn estimate(args: EstimateArgs) -> Result<(), Failure> {
    let options = fit_options(&args.fit)?;
    if !args.input.is_file() {
        return Err(usage(format!("{}: no such file", args.input.display())));
    }
    let ensemble = io::load(&args.input)
        .with_context(|| format!("reading {}", args.input.display()))
        .code(USAGE)?;
    let t_max = args.t_max.unwrap_or(ensemble.n_steps());
    let grid = make_time_grid(args.t_min, t_max, args.count).map_err(usage)?;
    if t_max > ensemble.n_steps() {
        return Err(usage(format!("--t-max {t_max} exceeds the path length {}", ensemble.n_steps())));
    }
    let analysis = analyze_exponents(&ensemble, &grid, &options).map_err(estimation_error)?;
    if analysis.report.has_flag(anomscale_core::estimators::ReportFlag::RsUnreliable) {
        log::warn!("R/S-unreliable: fractional Lévy ensemble with J < 1/2");
    }
    let descriptor: Value = serde_json::from_str(ensemble.descriptor()).unwrap_or_else(|_| Value::String(ensemble.descriptor().into()));
    let mut out = json!({
        "command": "estimate",
        "config": {
            "input": args.input,
            "t_min": args.t_min,
            "t_max": t_max,
            "count": args.count,
            "grid_points": grid.len(),
            "options": options,
        },
        "ensemble": {
            "descriptor": descriptor,
            "master_seed": ensemble.master_seed(),
            "n_paths": ensemble.n_paths(),
            "n_steps": ensemble.n_steps(),
        },
    });
    merge(&mut out, analysis_json(&analysis));
    if let Some(dir) = &args.fit.out_dir {
        write_fit_csvs(dir, &analysis).code(ESTIMATION)?;
        write_json(&dir.join("report.json"), &out).code(ESTIMATION)?;
    }
    print_json(&out)
}

#[derive(Debug, Args)]
pub struct MarketArgs {
    /// Minute bars: date, time, open, high, low, close, volume by default.
    input: PathBuf,
    #[arg(long)]
    symbol: Option<String>,
    /// Intraday interval `start:end` in minutes after the open; repeatable.
    #[arg(long = "interval", default_values_t = [IntervalSpec::new(30, 190), IntervalSpec::new(260, 380)])]
    intervals: Vec<IntervalSpec>,
    #[arg(long, default_value_t = anomscale_core::market::DEFAULT_INTERVAL_T_MIN)]
    t_min: usize,
    #[arg(long, default_value_t = anomscale_core::market::DEFAULT_INTERVAL_GRID)]
    grid: usize,
    /// Session open as HH:MM.
    #[arg(long, default_value = "09:30")]
    open: String,
    #[arg(long, default_value_t = 390)]
    minutes: usize,
    #[arg(long, default_value_t = 2500)]
    max_days: usize,
    #[arg(long, default_value_t = 0)]
    date_col: usize,
    #[arg(long, default_value_t = 1)]
    time_col: usize,
    #[arg(long, default_value_t = 5)]
    close_col: usize,
    #[arg(long, default_value_t = ',')]
    delimiter: char,
    /// Treat the first row as a header (detected when omitted).
    #[arg(long, conflicts_with = "no_header")]
    header: bool,
    #[arg(long)]
    no_header: bool,
    #[command(flatten)]
    fit: FitArgs,
}

pub fn market(args: MarketArgs) -> Result<(), Failure> {
    let options = fit_options(&args.fit)?;
    let (h, m) = args
        .open
        .split_once(':')
        .and_then(|(h, m)| Some((h.parse::<u32>().ok()?, m.parse::<u32>().ok()?)))
        .filter(|&(h, m)| h < 24 && m < 60)
        .ok_or_else(|| usage(format!("--open {:?} is not HH:MM", args.open)))?;
    if !args.delimiter.is_ascii() {
        return Err(usage("--delimiter must be a single ASCII character"));
    }
    let session = SessionSpec {
        open_minute: h * 60 + m,
        n_minutes: args.minutes,
        max_days: args.max_days,
        columns: ColumnMap {
            date: args.date_col,
            time: args.time_col,
            close: args.close_col,
        },
        delimiter: args.delimiter as u8,
        has_header: match (args.header, args.no_header) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        },
        ..SessionSpec::default()
    };
    let intervals: Vec<IntervalSpec> = args
        .intervals
        .iter()
        .map(|i| IntervalSpec {
            t_min: args.t_min,
            grid_count: args.grid,
            ..*i
        })
        .collect();
    for i in &intervals {
        i.grid().map_err(usage)?;
        if i.end >= args.minutes {
            return Err(usage(format!("interval {i} does not fit in a {}-minute session", args.minutes)));
        }
    }
    let symbol = args.symbol.clone().unwrap_or_else(|| {
        args.input
            .file_stem()
            .map_or_else(|| "UNKNOWN".into(), |s| s.to_string_lossy().into_owned())
    });
    let file = File::open(&args.input)
        .with_context(|| format!("opening {}", args.input.display()))
        .code(USAGE)?;
    let sessions = ingest_prices(BufReader::new(file), &session, &symbol)
        .with_context(|| format!("reading {}", args.input.display()))
        .code(USAGE)?;
    let result = analyze_sessions(&sessions, &intervals, &options).map_err(estimation_error)?;
    let reports: Vec<Value> = result
        .intervals
        .iter()
        .map(|i| {
            let mut v = json!({
                "interval": i.interval,
                "tau_rs": i.rs_timescale(),
            });
            merge(&mut v, analysis_json(&i.analysis));
            v
        })
        .collect();
    let out = json!({
        "command": "market",
        "config": {
            "input": args.input,
            "symbol": symbol,
            "session": session,
            "intervals": intervals,
            "options": options,
        },
        "n_days": result.n_days,
        "first_day": sessions.calendar().first(),
        "last_day": sessions.calendar().last(),
        "profile": { "t": result.profile.times(), "mean_abs_return": result.profile.values() },
        "intervals": reports,
    });
    if let Some(dir) = &args.fit.out_dir {
        let write = || -> anyhow::Result<()> {
            fs::create_dir_all(dir)?;
            result.profile.write_csv(BufWriter::new(File::create(dir.join("profile.csv"))?))?;
            for i in &result.intervals {
                write_fit_csvs(&dir.join(format!("interval_{}_{}", i.interval.start, i.interval.end)), &i.analysis)?;
            }
            write_json(&dir.join("report.json"), &out)
        };
        write().code(ESTIMATION)?;
    }
    print_json(&out)
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long = "H", default_value_t = 0.3)]
    hurst: f64,
    #[arg(long, default_value_t = 2500)]
    days: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = DEFAULT_VDP_EPSILON)]
    epsilon: f64,
    #[arg(long, default_value_t = DEFAULT_VDP_SUBSTEPS)]
    substeps: usize,
    /// Minutes of small noise before the process starts.
    #[arg(long, default_value_t = 20)]
    warmup: usize,
    /// Log-price units per unit of the process.
    #[arg(long, default_value_t = 1e-3)]
    scale: f64,
    #[arg(short = 'o', long)]
    output: PathBuf,
}

pub fn synth_prices(args: SynthArgs) -> Result<(), Failure> {
    let spec = SyntheticDays {
        hurst: args.hurst,
        epsilon: args.epsilon,
        substeps: args.substeps,
        n_days: args.days,
        warmup: args.warmup,
        scale: args.scale,
        seed: args.seed,
        ..SyntheticDays::vdp(args.hurst, args.days, args.seed)
    };
    let sessions = spec.sessions().map_err(usage)?;
    let file = File::create(&args.output)
        .with_context(|| format!("creating {}", args.output.display()))
        .code(GENERATION)?;
    write_minute_bars(&sessions, 9 * 60 + 30, BufWriter::new(file)).code(GENERATION)?;
    print_json(&json!({ "synthetic": spec, "output": args.output }))
}

fn merge(into: &mut Value, from: Value) {
    if let (Value::Object(a), Value::Object(b)) = (into, from) {
        a.extend(b);
    }
}

fn write_json(path: &Path, v: &Value) -> anyhow::Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, v)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn print_json(v: &Value) -> Result<(), Failure> {
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    serde_json::to_writer_pretty(&mut lock, v)
        .map_err(anyhow::Error::from)
        .and_then(|_| writeln!(lock).map_err(anyhow::Error::from))
        .code(USAGE)
}
