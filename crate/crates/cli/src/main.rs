//! `scde`: thresholds, saturation searches, sweeps and complexity reports
//! for q-ary spatially coupled protograph ensembles on the BEC.

mod config;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use scde_core::analysis::{self, DecodeMode, COMPARISON_EPSILONS, COMPARISON_GRID};
use scde_core::threshold::{self, ThresholdConfig};
use scde_core::{EnsembleSpec, Error};

use config::Settings;

#[derive(Parser, Debug)]
#[command(
    name = "scde",
    version,
    about = "Density evolution thresholds of q-ary SC-LDPC ensembles on the BEC"
)]
struct Cli {
    /// TOML defaults file (delta, max_iters, stall_eps, tolerance, confirmations, w_max, l_max, jobs).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Flooding or windowed decoding threshold of each ensemble.
    Threshold(ThresholdArgs),
    /// Threshold table over ensembles, field sizes and window sizes.
    Sweep(ThresholdArgs),
    /// Smallest window size reaching the saturated windowed threshold.
    Wstar(SaturationArgs),
    /// Smallest coupling length reaching the saturated flooding threshold.
    Lstar(SaturationArgs),
    /// Per-position iteration counts, complexity order and latency of one decode.
    Complexity(ComplexityArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Ensemble name, e.g. `C1(3,6,4,2)`, `C2(3,6,m)`, `B(3,6,1)`; repeatable.
    #[arg(long = "ensemble")]
    ensembles: Vec<String>,
    /// Field exponents: `5`, `1..10`, `1-10` or `1,2,4,8`. Required when a name uses `m`.
    #[arg(long)]
    m: Option<String>,
    /// Coupling length override.
    #[arg(long = "L")]
    length: Option<usize>,
    #[arg(long)]
    delta: Option<f64>,
    /// Bisection resolution and plateau tolerance.
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Worker threads for independent cells.
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ThresholdArgs {
    #[command(flatten)]
    common: Common,
    /// Flooding schedule (the default when `--wd` is absent).
    #[arg(long, conflicts_with = "wd")]
    fsd: bool,
    /// Window size; `sweep` also accepts a range.
    #[arg(long)]
    wd: Option<String>,
}

#[derive(Args, Debug, Clone)]
struct SaturationArgs {
    #[command(flatten)]
    common: Common,
    /// Largest window (wstar) or coupling length (lstar) to try.
    #[arg(long)]
    cap: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ComplexityArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, conflicts_with = "wd")]
    fsd: bool,
    #[arg(long)]
    wd: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Evaluate the standard latency grid of `C1(3,6,m,2)` at both reference erasure rates.
    #[arg(long, conflicts_with_all = ["epsilon", "fsd", "wd"])]
    table1: bool,
}

/// A failed invocation with its process exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: 2,
            message: message.into(),
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Grammar { .. } | Error::InvalidArgument(_) => 2,
        Error::DegenerateBracket(_) => 3,
        Error::WindowTooSmall { .. } => 4,
        Error::NoPlateau { .. } => 5,
        Error::DecodeFailure { .. } => 6,
        _ => 1,
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure {
            code: exit_code(&e),
            message: e.to_string(),
        }
    }
}

/// Decoding schedule of one threshold cell; serializes as `"FSD"` or the window size.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Schedule {
    Fsd,
    Wd(usize),
}

impl Serialize for Schedule {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Schedule::Fsd => s.serialize_str("FSD"),
            Schedule::Wd(w) => s.serialize_u64(*w as u64),
        }
    }
}

/// Parses `5`, `1..10`, `1-10` or `1,2,4,8` into a non-empty list.
fn parse_range(text: &str) -> Result<Vec<usize>, Failure> {
    let bad = || Failure::usage(format!("invalid range `{text}`"));
    let num = |s: &str| s.trim().parse::<usize>().map_err(|_| bad());
    let values: Vec<usize> = if let Some((a, b)) = text.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        (num(a)?..=num(b)?).collect()
    } else if let Some((a, b)) = text.split_once('-') {
        (num(a)?..=num(b)?).collect()
    } else {
        text.split(',').map(num).collect::<Result<_, _>>()?
    };
    if values.is_empty() {
        return Err(Failure::usage(format!("range `{text}` is empty")));
    }
    Ok(values)
}

struct Context {
    settings: Settings,
    format: Option<Format>,
    out: Option<PathBuf>,
}

impl Context {
    fn new(config: Option<&PathBuf>, common: &Common) -> Result<Self, Failure> {
        let mut settings = match config {
            Some(path) => Settings::load(path).map_err(Failure::usage)?,
            None => Settings::default(),
        };
        let t = &mut settings.threshold;
        if let Some(d) = common.delta {
            t.pde.delta = d;
        }
        if let Some(tol) = common.tol {
            t.resolution = tol;
            t.tolerance = tol;
        }
        if let Some(n) = common.max_iters {
            t.pde.max_iters = n;
        }
        if let Some(j) = common.jobs {
            settings.jobs = j;
        }
        if settings.jobs == 0 {
            return Err(Failure::usage("--jobs must be at least 1"));
        }
        t.pde.validate()?;
        Ok(Context {
            settings,
            format: common.format,
            out: common.out.clone(),
        })
    }

    fn config(&self) -> &ThresholdConfig {
        &self.settings.threshold
    }

    /// Maps `f` over `items` on the configured number of workers, preserving order.
    fn par_map<T: Sync, R: Send>(
        &self,
        items: &[T],
        f: impl Fn(&T) -> R + Sync + Send,
    ) -> Result<Vec<R>, Failure> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.settings.jobs)
            .build()
            .map_err(|e| Failure {
                code: 1,
                message: e.to_string(),
            })?;
        Ok(pool.install(|| items.par_iter().map(f).collect()))
    }

    fn emit(&self, bytes: Vec<u8>) -> Result<(), Failure> {
        let io = |e: std::io::Error| Failure {
            code: 1,
            message: e.to_string(),
        };
        match &self.out {
            Some(path) => std::fs::write(path, bytes).map_err(io),
            None => std::io::stdout().write_all(&bytes).map_err(io),
        }
    }

    fn emit_json<T: Serialize>(&self, docs: &[T]) -> Result<(), Failure> {
        let mut text = if docs.len() == 1 {
            serde_json::to_string_pretty(&docs[0])
        } else {
            serde_json::to_string_pretty(docs)
        }
        .map_err(|e| Failure {
            code: 1,
            message: e.to_string(),
        })?;
        text.push('\n');
        self.emit(text.into_bytes())
    }
}

/// Expands ensemble names over the `--m` list and applies the `--L` override.
fn expand(common: &Common) -> Result<Vec<EnsembleSpec>, Failure> {
    if common.ensembles.is_empty() {
        return Err(Failure::usage("at least one --ensemble is required"));
    }
    let ms = common.m.as_deref().map(parse_range).transpose()?;
    let mut specs = Vec::new();
    for name in &common.ensembles {
        let (spec, free_m) = EnsembleSpec::parse_template(name)?;
        let spec = match common.length {
            Some(l) => spec.with_length(l)?,
            None => spec,
        };
        match &ms {
            Some(ms) => {
                for &m in ms {
                    specs.push(spec.with_m(m as u32)?);
                }
            }
            None if free_m => {
                return Err(Failure::usage(format!("`{name}` leaves m free; pass --m")))
            }
            None => specs.push(spec),
        }
    }
    Ok(specs)
}

#[derive(Debug, Clone, Serialize)]
struct ThresholdDoc {
    ensemble: String,
    m: u32,
    #[serde(rename = "W")]
    schedule: Schedule,
    #[serde(rename = "L")]
    length: Option<usize>,
    #[serde(rename = "R_L")]
    rate: Option<f64>,
    epsilon_star: Option<f64>,
    capacity_gap: Option<f64>,
    evaluations: Option<usize>,
    resolution: Option<f64>,
    bracket: Option<(f64, f64)>,
    window_too_small: bool,
    error: Option<String>,
    #[serde(skip)]
    code: u8,
}

fn threshold_cell(
    spec: &EnsembleSpec,
    schedule: Schedule,
    config: &ThresholdConfig,
) -> ThresholdDoc {
    let rate = spec.design_rate().ok();
    let mut doc = ThresholdDoc {
        ensemble: spec.to_string(),
        m: spec.m,
        schedule,
        length: spec.is_coupled().then_some(spec.length),
        rate,
        epsilon_star: None,
        capacity_gap: None,
        evaluations: None,
        resolution: None,
        bracket: None,
        window_too_small: false,
        error: None,
        code: 0,
    };
    let result = match schedule {
        Schedule::Fsd => threshold::fsd_threshold(spec, config),
        Schedule::Wd(w) => threshold::wd_threshold(spec, w, config),
    };
    match result {
        Ok(r) => {
            doc.epsilon_star = Some(r.epsilon);
            doc.capacity_gap = rate.and_then(|rate| threshold::capacity_gap(rate, r.epsilon).ok());
            doc.evaluations = Some(r.evaluations);
            doc.resolution = Some(r.resolution);
            doc.bracket = Some(r.bracket);
            doc.window_too_small = r.window_too_small;
        }
        Err(e) => {
            doc.code = exit_code(&e);
            doc.error = Some(e.to_string());
        }
    }
    doc
}

fn opt<T: ToString>(v: &Option<T>) -> String {
    v.as_ref().map(T::to_string).unwrap_or_default()
}

fn threshold_csv(docs: &[ThresholdDoc]) -> Result<Vec<u8>, Failure> {
    let fail = |e: csv::Error| Failure {
        code: 1,
        message: e.to_string(),
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record([
        "ensemble",
        "m",
        "W",
        "L",
        "R_L",
        "epsilon_star",
        "capacity_gap",
        "evaluations",
        "error",
    ])
    .map_err(fail)?;
    for d in docs {
        let sched = match d.schedule {
            Schedule::Fsd => "FSD".to_string(),
            Schedule::Wd(w) => w.to_string(),
        };
        w.write_record([
            d.ensemble.clone(),
            d.m.to_string(),
            sched,
            opt(&d.length),
            opt(&d.rate),
            opt(&d.epsilon_star),
            opt(&d.capacity_gap),
            opt(&d.evaluations),
            opt(&d.error),
        ])
        .map_err(fail)?;
    }
    w.into_inner().map_err(|e| Failure {
        code: 1,
        message: e.to_string(),
    })
}

fn threshold_cells(
    args: &ThresholdArgs,
    allow_range: bool,
) -> Result<Vec<(EnsembleSpec, Schedule)>, Failure> {
    let specs = expand(&args.common)?;
    let schedules: Vec<Schedule> = match &args.wd {
        None => vec![Schedule::Fsd],
        Some(text) if allow_range => parse_range(text)?.into_iter().map(Schedule::Wd).collect(),
        Some(text) => vec![Schedule::Wd(text.trim().parse().map_err(|_| {
            Failure::usage(format!("--wd expects a window size, got `{text}`"))
        })?)],
    };
    Ok(specs
        .into_iter()
        .flat_map(|s| schedules.iter().map(move |&sched| (s.clone(), sched)))
        .collect())
}

fn cmd_threshold(ctx: &Context, args: &ThresholdArgs) -> Result<(), Failure> {
    let cells = threshold_cells(args, false)?;
    let docs = ctx.par_map(&cells, |(spec, sched)| {
        threshold_cell(spec, *sched, ctx.config())
    })?;
    if let Some(d) = docs.iter().find(|d| d.error.is_some()) {
        return Err(Failure {
            code: d.code,
            message: format!("{}: {}", d.ensemble, opt(&d.error)),
        });
    }
    match ctx.format.unwrap_or(Format::Json) {
        Format::Json => ctx.emit_json(&docs)?,
        Format::Csv => ctx.emit(threshold_csv(&docs)?)?,
    }
    if docs.iter().any(|d| d.window_too_small) {
        return Err(Failure {
            code: 4,
            message: "window smaller than w + 1; threshold reported as 0".into(),
        });
    }
    Ok(())
}

fn cmd_sweep(ctx: &Context, args: &ThresholdArgs) -> Result<(), Failure> {
    let cells = threshold_cells(args, true)?;
    let docs = ctx.par_map(&cells, |(spec, sched)| {
        threshold_cell(spec, *sched, ctx.config())
    })?;
    match ctx.format.unwrap_or(Format::Csv) {
        Format::Json => ctx.emit_json(&docs)?,
        Format::Csv => ctx.emit(threshold_csv(&docs)?)?,
    }
    let failed = docs.iter().filter(|d| d.error.is_some()).count();
    if failed > 0 {
        return Err(Failure {
            code: 1,
            message: format!("{failed} of {} cells failed", docs.len()),
        });
    }
    Ok(())
}

#[derive(Debug, Serialize)]
struct TracePoint {
    value: usize,
    epsilon: f64,
}

#[derive(Debug, Serialize)]
struct SaturationDoc {
    ensemble: String,
    m: u32,
    parameter: &'static str,
    star_value: usize,
    plateau_value: f64,
    trace: Vec<TracePoint>,
}

fn cmd_saturation(ctx: &Context, args: &SaturationArgs, window: bool) -> Result<(), Failure> {
    if ctx.format == Some(Format::Csv) {
        return Err(Failure::usage(
            "saturation results are emitted as JSON only",
        ));
    }
    let specs = expand(&args.common)?;
    let cfg = ctx.config();
    let results = ctx.par_map(&specs, |spec| {
        if window {
            threshold::find_w_star(spec, cfg, args.cap.unwrap_or(cfg.w_max))
        } else {
            threshold::find_l_star(spec, cfg, args.cap.unwrap_or(cfg.l_max))
        }
    })?;
    let mut docs = Vec::new();
    for (spec, r) in specs.iter().zip(results) {
        let r = r.map_err(|e| Failure {
            code: exit_code(&e),
            message: format!("{spec}: {e}"),
        })?;
        docs.push(SaturationDoc {
            ensemble: spec.to_string(),
            m: spec.m,
            parameter: if window { "W" } else { "L" },
            star_value: r.star_value,
            plateau_value: r.plateau_value,
            trace: r
                .trace
                .into_iter()
                .map(|(value, epsilon)| TracePoint { value, epsilon })
                .collect(),
        });
    }
    ctx.emit_json(&docs)
}

#[derive(Debug, Serialize)]
struct ComplexityDoc {
    ensemble: String,
    m: u32,
    #[serde(rename = "W")]
    schedule: Schedule,
    #[serde(rename = "L")]
    length: Option<usize>,
    #[serde(rename = "R_L")]
    rate: f64,
    epsilon: f64,
    latency: Option<u64>,
    l_t: Vec<u64>,
    total: u64,
    order: f64,
}

fn complexity_doc(
    spec: &EnsembleSpec,
    schedule: Schedule,
    epsilon: f64,
    cfg: &ThresholdConfig,
) -> Result<ComplexityDoc, Error> {
    let k = spec.ratio;
    let (mode, latency) = match schedule {
        Schedule::Fsd if spec.is_coupled() => (
            DecodeMode::Fsd,
            Some(analysis::latency_fsd(
                k,
                spec.m,
                spec.length,
                spec.coupling_width(),
            )?),
        ),
        Schedule::Fsd if k == 2 => (DecodeMode::Fsd, Some(analysis::latency_block_fsd(spec.m)?)),
        Schedule::Fsd => (DecodeMode::Fsd, None),
        Schedule::Wd(w) => (DecodeMode::Wd(w), Some(analysis::latency_wd(k, spec.m, w)?)),
    };
    let r = analysis::complexity_profile(spec, mode, epsilon, &cfg.pde)?;
    Ok(ComplexityDoc {
        ensemble: spec.to_string(),
        m: spec.m,
        schedule,
        length: spec.is_coupled().then_some(spec.length),
        rate: r.rate,
        epsilon,
        latency: latency.map(|l| l.latency),
        l_t: r.updates,
        total: r.total,
        order: r.order,
    })
}

#[derive(Debug, Serialize)]
struct GridDoc {
    latency: Option<u64>,
    m: u32,
    #[serde(rename = "W")]
    window: usize,
    epsilon: f64,
    order: Option<f64>,
    total: Option<u64>,
    error: Option<String>,
}

fn cmd_complexity(ctx: &Context, args: &ComplexityArgs) -> Result<(), Failure> {
    if ctx.format == Some(Format::Csv) {
        return Err(Failure::usage(
            "complexity reports are emitted as JSON only",
        ));
    }
    let cfg = ctx.config();
    if args.table1 {
        let length = args
            .common
            .length
            .unwrap_or(scde_core::ensemble::DEFAULT_COUPLING_LENGTH);
        let cells: Vec<(f64, u32, usize)> = COMPARISON_EPSILONS
            .iter()
            .flat_map(|&e| COMPARISON_GRID.iter().map(move |&(m, w)| (e, m, w)))
            .collect();
        let docs = ctx.par_map(&cells, |&(epsilon, m, w)| {
            let spec = EnsembleSpec::type_p(3, 2, m, 2, length);
            let doc = spec.and_then(|s| complexity_doc(&s, Schedule::Wd(w), epsilon, cfg));
            GridDoc {
                latency: doc.as_ref().ok().and_then(|d| d.latency),
                m,
                window: w,
                epsilon,
                order: doc.as_ref().ok().map(|d| d.order),
                total: doc.as_ref().ok().map(|d| d.total),
                error: doc.err().map(|e| e.to_string()),
            }
        })?;
        return ctx.emit_json(&docs);
    }
    let epsilon = args
        .epsilon
        .ok_or_else(|| Failure::usage("--epsilon is required (or use --table1)"))?;
    let schedule = args.wd.map(Schedule::Wd).unwrap_or(Schedule::Fsd);
    let specs = expand(&args.common)?;
    let results = ctx.par_map(&specs, |spec| complexity_doc(spec, schedule, epsilon, cfg))?;
    let docs = results
        .into_iter()
        .zip(&specs)
        .map(|(r, spec)| {
            r.map_err(|e| Failure {
                code: exit_code(&e),
                message: format!("{spec}: {e}"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    ctx.emit_json(&docs)
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = cli.config.as_ref();
    match &cli.command {
        Command::Threshold(a) => cmd_threshold(&Context::new(config, &a.common)?, a),
        Command::Sweep(a) => cmd_sweep(&Context::new(config, &a.common)?, a),
        Command::Wstar(a) => cmd_saturation(&Context::new(config, &a.common)?, a, true),
        Command::Lstar(a) => cmd_saturation(&Context::new(config, &a.common)?, a, false),
        Command::Complexity(a) => cmd_complexity(&Context::new(config, &a.common)?, a),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
