//! Command-line front end.

pub mod formats;

use std::ffi::OsString;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use faer::c64;
use serde::Serialize;

use crate::evaluate::{error_grid, linspace, logspace, EvalConfig, ParameterSlice};
use crate::loewner::{build_pencil, Partition};
use crate::models::{builtin, ParametricModel, BUILTINS};
use crate::numkit::MatC;
use crate::rankbounds;
use formats::{PartitionRecord, RunManifest, Source};

/// Environment variable read when `--threads` is absent.
pub const THREADS_ENV: &str = "LOEWNER_LFT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "loewner-lft", version, about = "Parametric transfer functions from Loewner interpolation of snapshot matrices")]
pub struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true, env = THREADS_ENV)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a parametric realization from snapshots.
    Interpolate(InterpolateArgs),
    /// Evaluate Ĥ(s, p) of a saved realization.
    Eval(EvalArgs),
    /// Error δ(ω, p) of a realization against a reference model, as CSV.
    Grid(GridArgs),
    /// Pencil ranks against their theoretical bounds, as JSON.
    Ranks(RanksArgs),
    /// Evaluate the reference transfer function H(s, p).
    TrueEval(TrueEvalArgs),
    /// List the built-in models.
    BuiltinList,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct SourceArgs {
    /// Built-in model name (see `builtin-list`).
    #[arg(long)]
    pub builtin: Option<String>,
    /// JSON model file with polynomial coefficients.
    #[arg(long)]
    pub model: Option<PathBuf>,
    /// JSON snapshot file.
    #[arg(long)]
    pub snapshots: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
pub struct ReferenceArgs {
    #[arg(long)]
    pub builtin: Option<String>,
    #[arg(long)]
    pub model: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "uniform")]
    pub params: Option<Vec<f64>>,
    /// `min,max,count` equally spaced parameter values.
    #[arg(long, value_parser = parse_uniform, allow_hyphen_values = true)]
    pub uniform: Option<Uniform>,
    /// Left interpolation points (with --right; default: alternating split).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "right")]
    pub left: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, requires = "left")]
    pub right: Option<Vec<f64>>,
}

#[derive(Debug, Args)]
pub struct InterpolateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub samples: SampleArgs,
    /// Truncation tolerance on the discarded singular-value energy.
    #[arg(long, default_value_t = 1e-7)]
    pub eps: f64,
    /// Use this truncation rank instead of the tolerance rule.
    #[arg(long)]
    pub rank: Option<usize>,
    /// Skip the rank-regularity check (one SVD per sample).
    #[arg(long)]
    pub skip_regularity: bool,
    /// Output directory.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalSettings {
    #[arg(long, default_value_t = 1e6)]
    pub eps_cond: f64,
    /// |s| at or below which the s = 0 formula is used.
    #[arg(long, default_value_t = 0.0)]
    pub zero_s_tol: f64,
}

impl EvalSettings {
    fn config(&self) -> anyhow::Result<EvalConfig> {
        Ok(EvalConfig::new(self.eps_cond, self.zero_s_tol)?)
    }
}

#[derive(Debug, Args)]
pub struct PointArgs {
    /// Complex frequency, e.g. `0`, `2i`, `-1+3.5i`.
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, conflicts_with = "omega", required_unless_present = "omega")]
    pub s: Option<c64>,
    /// Angular frequency; evaluates at s = iω.
    #[arg(long)]
    pub omega: Option<f64>,
    #[arg(long, short, allow_hyphen_values = true)]
    pub p: f64,
}

impl PointArgs {
    fn s(&self) -> c64 {
        self.s.unwrap_or_else(|| c64::new(0.0, self.omega.unwrap_or(0.0)))
    }
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Realization directory written by `interpolate`.
    #[arg(long, short)]
    pub realization: PathBuf,
    #[command(flatten)]
    pub point: PointArgs,
    #[command(flatten)]
    pub settings: EvalSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long, short)]
    pub realization: PathBuf,
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[arg(long, default_value_t = 1e-2)]
    pub omega_min: f64,
    #[arg(long, default_value_t = 1e4)]
    pub omega_max: f64,
    #[arg(long, default_value_t = 400)]
    pub omega_count: usize,
    #[arg(long, value_enum, default_value_t = Spacing::Log)]
    pub omega_spacing: Spacing,
    /// Comma-separated parameter values.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, conflicts_with = "uniform")]
    pub params: Option<Vec<f64>>,
    /// `min,max,count` equally spaced parameter values (default 0,100,50).
    #[arg(long, value_parser = parse_uniform, allow_hyphen_values = true)]
    pub uniform: Option<Uniform>,
    #[command(flatten)]
    pub settings: EvalSettings,
    /// CSV output path.
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct RanksArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub samples: SampleArgs,
    /// Also write the JSON report here.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct TrueEvalArgs {
    #[command(flatten)]
    pub reference: ReferenceArgs,
    #[command(flatten)]
    pub point: PointArgs,
}

/// `min,max,count`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Uniform {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Uniform {
    pub fn points(&self) -> Vec<f64> {
        linspace(self.min, self.max, self.count)
    }
}

fn parse_uniform(text: &str) -> Result<Uniform, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let [min, max, count] = parts[..] else {
        return Err(format!("expected min,max,count, got `{text}`"));
    };
    let num = |t: &str| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number"));
    let u = Uniform {
        min: num(min)?,
        max: num(max)?,
        count: count.parse().map_err(|_| format!("`{count}` is not a count"))?,
    };
    if !(u.min.is_finite() && u.max.is_finite()) || u.count == 0 {
        return Err(format!("`{text}` is not a usable range"));
    }
    Ok(u)
}

/// Parses `a`, `bi`, `a+bi`, `a-bi`, `i` and `-i`.
pub fn parse_complex(text: &str) -> Result<c64, String> {
    let t: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || format!("`{text}` is not a complex number (try 2, 3i or -1+2.5i)");
    let Some(body) = t.strip_suffix(['i', 'j']) else {
        return t.parse().map(|re| c64::new(re, 0.0)).map_err(|_| bad());
    };
    // split before the last sign that is not part of an exponent
    let bytes = body.as_bytes();
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'));
    let (re, im) = match split {
        Some(k) => (&body[..k], &body[k..]),
        None => ("0", body),
    };
    let im = match im {
        "" | "+" => "1",
        "-" => "-1",
        other => other,
    };
    let re: f64 = re.parse().map_err(|_| bad())?;
    let im: f64 = im.parse().map_err(|_| bad())?;
    Ok(c64::new(re, im))
}

fn load_reference(builtin_name: &Option<String>, model: &Option<PathBuf>) -> anyhow::Result<(String, ParametricModel)> {
    if let Some(name) = builtin_name {
        return Ok((format!("builtin:{name}"), builtin(name)?));
    }
    let path = model.as_ref().ok_or_else(|| anyhow!("give --builtin or --model"))?;
    match formats::load_source(path).with_context(|| format!("reading {}", path.display()))? {
        Source::Model(m) => Ok((path.display().to_string(), m)),
        Source::Snapshots(_) => bail!("{} holds snapshots only; this command needs polynomial coefficients", path.display()),
    }
}

fn load_any(src: &SourceArgs) -> anyhow::Result<(String, Source)> {
    if let Some(path) = &src.snapshots {
        let source = formats::load_source(path).with_context(|| format!("reading {}", path.display()))?;
        return Ok((path.display().to_string(), source));
    }
    let (name, model) = load_reference(&src.builtin, &src.model)?;
    Ok((name, Source::Model(model)))
}

/// Sample values and partition from the command-line options.
fn resolve_samples(samples: &SampleArgs, fixed: Option<Vec<f64>>) -> anyhow::Result<(Vec<f64>, Partition)> {
    let given = match (&samples.params, &samples.uniform) {
        (Some(p), _) => Some(p.clone()),
        (None, Some(u)) => Some(u.points()),
        (None, None) => None,
    };
    let params = match (fixed, given, &samples.left, &samples.right) {
        (Some(_), Some(_), _, _) => bail!("--params/--uniform cannot be combined with --snapshots"),
        (Some(f), None, _, _) => f,
        (None, Some(g), _, _) => g,
        (None, None, Some(l), Some(r)) => l.iter().chain(r).copied().collect(),
        (None, None, _, _) => bail!("give --params, --uniform or --left/--right"),
    };
    let partition = match (&samples.left, &samples.right) {
        (Some(l), Some(r)) => Partition::explicit(&params, l, r)?,
        _ => Partition::alternating(&params)?,
    };
    Ok((params, partition))
}

fn print_json<T: Serialize>(value: &T) -> anyhow::Result<()> {
    let stdout = std::io::stdout();
    let mut out = stdout.lock();
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

/// Complex matrix as nested `[re, im]` pairs, row by row.
fn complex_rows(m: &MatC) -> Vec<Vec<[f64; 2]>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect())
        .collect()
}

#[derive(Serialize)]
struct PointOutput {
    s: [f64; 2],
    p: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    formula: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    cond_estimate: Option<f64>,
    value: Vec<Vec<[f64; 2]>>,
}

fn cmd_interpolate(args: &InterpolateArgs) -> anyhow::Result<ExitCode> {
    if !(args.eps > 0.0 && args.eps < 1.0) {
        bail!("--eps must lie in (0, 1), got {}", args.eps);
    }
    let (name, source) = load_any(&args.source)?;
    let (set, params, partition) = match source {
        Source::Model(model) => {
            let (params, partition) = resolve_samples(&args.samples, None)?;
            (model.snapshots(&params)?, params, partition)
        }
        Source::Snapshots(set) => {
            let (params, partition) = resolve_samples(&args.samples, Some(set.params()))?;
            (set, params, partition)
        }
    };
    let pencil = build_pencil(&set, &partition)?;
    let trunc = pencil.truncation(args.eps);
    let mut warnings = trunc.warnings();
    if !args.skip_regularity {
        warnings.extend(pencil.regularity(&params)?.warnings());
    }
    let r = args.rank.unwrap_or(trunc.rank);
    let real = pencil.realize(r)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    formats::save_realization(&args.out, &real)?;
    let d = set.dims();
    let manifest = RunManifest {
        source: name,
        n: d.n,
        n_i: d.n_i,
        n_o: d.n_o,
        params,
        partition: PartitionRecord {
            left: partition.left_values(),
            right: partition.right_values(),
            left_indices: partition.left().iter().map(|e| e.0).collect(),
            right_indices: partition.right().iter().map(|e| e.0).collect(),
        },
        pencil_shape: (pencil.l.nrows(), pencil.l.ncols()),
        eps: args.eps,
        truncation_rule: "tail_energy".into(),
        r,
        r_column: trunc.column_rank,
        r_literal: trunc.literal_rank,
        rank_override: args.rank,
        singular_values_row: pencil.sv_row.clone(),
        singular_values_col: pencil.sv_col.clone(),
        warnings,
    };
    formats::write_manifest(&args.out, &manifest)?;
    println!(
        "r = {r} from a {}x{} pencil; wrote {}",
        manifest.pencil_shape.0,
        manifest.pencil_shape.1,
        args.out.display()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_eval(args: &EvalArgs) -> anyhow::Result<ExitCode> {
    let real = formats::load_realization(&args.realization)
        .with_context(|| format!("loading {}", args.realization.display()))?;
    let s = args.point.s();
    let res = ParameterSlice::new(&real, args.point.p).eval(s, &args.settings.config()?)?;
    print_json(&PointOutput {
        s: [s.re, s.im],
        p: args.point.p,
        formula: Some(res.formula.as_str()),
        cond_estimate: Some(res.cond_estimate),
        value: complex_rows(&res.value),
    })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_true_eval(args: &TrueEvalArgs) -> anyhow::Result<ExitCode> {
    let (_, model) = load_reference(&args.reference.builtin, &args.reference.model)?;
    let s = args.point.s();
    let value = model.true_tf(s, args.point.p)?;
    print_json(&PointOutput {
        s: [s.re, s.im],
        p: args.point.p,
        formula: None,
        cond_estimate: None,
        value: complex_rows(&value),
    })?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_grid(args: &GridArgs) -> anyhow::Result<ExitCode> {
    let real = formats::load_realization(&args.realization)
        .with_context(|| format!("loading {}", args.realization.display()))?;
    let (_, model) = load_reference(&args.reference.builtin, &args.reference.model)?;
    if args.omega_count == 0 {
        bail!("--omega-count must be positive");
    }
    let omegas = match args.omega_spacing {
        Spacing::Log => {
            if !(args.omega_min > 0.0 && args.omega_max > 0.0) {
                bail!("log spacing needs positive --omega-min and --omega-max");
            }
            logspace(args.omega_min, args.omega_max, args.omega_count)
        }
        Spacing::Linear => linspace(args.omega_min, args.omega_max, args.omega_count),
    };
    let params = match (&args.params, &args.uniform) {
        (Some(p), _) => p.clone(),
        (None, Some(u)) => u.points(),
        (None, None) => linspace(0.0, 100.0, 50),
    };
    let grid = error_grid(&real, &model, &omegas, &params, &args.settings.config()?)?;
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let mut w = BufWriter::new(file);
    formats::write_grid_csv(&mut w, &grid)?;
    w.flush()?;
    println!(
        "max delta = {:.3e}, median delta = {:.3e}, precise fraction = {:.4}, failed cells = {}",
        grid.max_delta(),
        grid.median_delta(),
        grid.precise_fraction(),
        grid.failures()
    );
    Ok(ExitCode::SUCCESS)
}

fn cmd_ranks(args: &RanksArgs) -> anyhow::Result<ExitCode> {
    let (_, source) = load_any(&args.source)?;
    let Source::Model(model) = source else {
        bail!("rank bounds need the polynomial coefficients Γₖ; snapshot-only input cannot be checked");
    };
    let (_, partition) = resolve_samples(&args.samples, None)?;
    let report = rankbounds::bounds(&model, &partition)?;
    print_json(&report)?;
    if let Some(path) = &args.out {
        std::fs::write(path, serde_json::to_string_pretty(&report)?)?;
    }
    if report.all_hold() {
        Ok(ExitCode::SUCCESS)
    } else {
        eprintln!("rank bound violated: holds = {:?}", report.holds);
        Ok(ExitCode::from(2))
    }
}

fn cmd_builtin_list() -> anyhow::Result<ExitCode> {
    for (name, about) in BUILTINS {
        println!("{name:<14}{about}");
    }
    Ok(ExitCode::SUCCESS)
}

/// Runs a parsed command line.
pub fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(t) = cli.threads {
        if t == 0 {
            bail!("--threads must be positive");
        }
        pool = pool.num_threads(t);
    }
    let pool = pool.build()?;
    pool.install(|| match &cli.command {
        Command::Interpolate(a) => cmd_interpolate(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Grid(a) => cmd_grid(a),
        Command::Ranks(a) => cmd_ranks(a),
        Command::TrueEval(a) => cmd_true_eval(a),
        Command::BuiltinList => cmd_builtin_list(),
    })
}

/// Entry point used by the binary: parses `args`, runs, and maps errors to
/// exit code 1.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
