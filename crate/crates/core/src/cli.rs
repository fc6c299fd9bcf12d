//! Command-line driver.
//!
//! Every sub-command reads and writes Medit files. Options can also come from
//! a `key = value` file passed with `--config`; keys are long option names
//! and take precedence over the command line.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::error::Error;
use crate::field::ScalarField;
use crate::io::{read_metric_sol, read_mesh, read_scalar_sol, write_mesh, write_metric_sol, write_scalar_sol, write_sol, SolData};
use crate::levelset::{sample, spiral_sizemap, AnalyticLevelSet, FieldSource, SpiralSizemapParams};
use crate::mesh::{build_adjacency, generate_equilateral, generate_uniform, Mesh, Rect};
use crate::metric::{intersect_fields, levelset_metric, physical_metric, recover_hessian, MetricBounds};
use crate::mmpde::{apply_displacement, solve, BoundaryCondition, Closure, MonitorSources, Safeguard, SolverConfig};
use crate::monitor::MonitorSpec;
use crate::quality::{compression_ratio, edge_histogram, narrow_band_stats, StatsTable, DEFAULT_BINS};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_SOLVER: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "adapt2d", version, about = "Metric and moving-mesh adaptation of 2D triangulations")]
struct Cli {
    /// key = value file of options; its values override the command line.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Repeat for more log output.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Uniform triangulation of a rectangle.
    Generate(GenerateArgs),
    /// Level-set or spiral sizemap values at the mesh vertices.
    Sample(SampleArgs),
    /// Metric field from a solution, a level set, or the intersection of two metrics.
    Metric(MetricArgs),
    /// Moves the mesh nodes by solving the mesh PDE.
    Adapt(AdaptArgs),
    /// Compression, narrow-band statistics and edge-length histograms.
    Stats(StatsArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Lattice {
    /// Right triangles with alternating diagonals.
    Uniform,
    /// Near-equilateral triangles in offset rows.
    Equilateral,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    /// x0,x1,y0,y1
    #[arg(long, default_value = "-1,1,-1,1", value_parser = parse_rect, allow_hyphen_values = true)]
    domain: Rect,
    #[arg(long)]
    h: f64,
    #[arg(long, value_enum, default_value = "uniform")]
    lattice: Lattice,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SampleArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// circle:cx,cy,r | flower | flower:cx,cy,R0,A,k
    #[arg(long, conflicts_with = "spiral")]
    levelset: Option<AnalyticLevelSet>,
    /// Spiral sizemap parameters a,s.
    #[arg(long, value_parser = parse_spiral)]
    spiral: Option<SpiralSizemapParams>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum MetricKind {
    /// Clamped absolute Hessian of a scalar solution.
    Physical,
    /// Anisotropic metric resolving the zero level set.
    Levelset,
    /// Intersection of two metric files.
    Intersect,
}

#[derive(Debug, Args)]
struct MetricArgs {
    #[arg(long, value_enum)]
    kind: MetricKind,
    #[arg(long)]
    mesh: PathBuf,
    /// Scalar solution (.sol) for `physical`.
    #[arg(long)]
    field: Option<PathBuf>,
    /// Level-set values (.sol) for `levelset`.
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Analytic level set for `levelset`, instead of --phi.
    #[arg(long, conflicts_with = "phi")]
    levelset: Option<AnalyticLevelSet>,
    #[arg(long)]
    a: Option<PathBuf>,
    #[arg(long)]
    b: Option<PathBuf>,
    /// Normal size at the level set.
    #[arg(long, default_value_t = 1e-3)]
    eps: f64,
    /// Half-width of the anisotropic band.
    #[arg(long, default_value_t = 0.05)]
    band: f64,
    #[arg(long, default_value_t = 1e-4)]
    h_min: f64,
    #[arg(long, default_value_t = 0.1)]
    h_max: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Boundary {
    Dirichlet,
    Slip,
}

#[derive(Debug, Args)]
struct AdaptArgs {
    #[arg(long)]
    mesh: PathBuf,
    /// Analytic level set evaluated at the moving nodes.
    #[arg(long)]
    levelset: Option<AnalyticLevelSet>,
    /// Level-set values on the input mesh (.sol), instead of --levelset.
    #[arg(long, conflicts_with = "levelset")]
    phi: Option<PathBuf>,
    /// Solution values on the input mesh (.sol).
    #[arg(long)]
    u: Option<PathBuf>,
    /// Water depth on the input mesh (.sol).
    #[arg(long)]
    depth: Option<PathBuf>,
    /// Free-surface elevation on the input mesh (.sol).
    #[arg(long)]
    eta: Option<PathBuf>,
    /// gb:a0,aphi,bphi | gbk:c,aphi,bphi | pc:t1,..,tn/w1,..,wn+1 | solution:au,bu |
    /// combined:eps,au,bu+<gb|gbk|pc> | shoreline:epsH,aeta,adry,beta | general:a,b,g,p
    #[arg(long)]
    monitor: MonitorSpec,
    /// laplace | elasticity | elasticity:mu,lambda
    #[arg(long, default_value = "laplace")]
    closure: Closure,
    /// Convergence threshold on the increment drop.
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    #[arg(long, default_value_t = 5000)]
    max_iter: usize,
    /// Jacobi sweeps per outer iteration.
    #[arg(long, default_value_t = 1)]
    sweeps: usize,
    /// Step limiter in (0, 1].
    #[arg(long, default_value_t = 1.0)]
    step: f64,
    /// halve | clamp
    #[arg(long, default_value = "halve")]
    safeguard: Safeguard,
    /// Relaxation time.
    #[arg(long, default_value_t = 0.0)]
    tau: f64,
    #[arg(long, value_enum, default_value = "dirichlet")]
    boundary: Boundary,
    #[arg(long)]
    out: PathBuf,
    /// Diagnostics CSV.
    #[arg(long)]
    diag: Option<PathBuf>,
    /// Displacement field (.sol) on the input mesh.
    #[arg(long)]
    displacement: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct StatsArgs {
    #[arg(long = "ref")]
    reference: PathBuf,
    #[arg(long)]
    adapted: Option<PathBuf>,
    /// Level-set values on the reference mesh (.sol).
    #[arg(long)]
    phi: Option<PathBuf>,
    /// Analytic level set, instead of --phi.
    #[arg(long, conflicts_with = "phi")]
    levelset: Option<AnalyticLevelSet>,
    #[arg(long, default_value_t = 1e-2)]
    band: f64,
    /// Metric on the adapted (or reference) mesh for the edge-length histogram.
    #[arg(long)]
    metric: Option<PathBuf>,
    /// Comma-separated histogram bin edges.
    #[arg(long, value_parser = parse_bins)]
    bins: Option<Bins>,
    /// Narrow-band statistics CSV.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-element compression ratio CSV.
    #[arg(long)]
    compression_out: Option<PathBuf>,
    /// Edge-length histogram CSV.
    #[arg(long)]
    histogram_out: Option<PathBuf>,
}

#[derive(Clone, Debug)]
struct Bins(Vec<f64>);

fn parse_numbers(s: &str) -> Result<Vec<f64>, String> {
    s.split(',').map(|t| t.trim().parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}"))).collect()
}

fn parse_rect(s: &str) -> Result<Rect, String> {
    match parse_numbers(s)?[..] {
        [x0, x1, y0, y1] => Rect::new(x0, x1, y0, y1).map_err(|e| e.to_string()),
        _ => Err("expected x0,x1,y0,y1".into()),
    }
}

fn parse_spiral(s: &str) -> Result<SpiralSizemapParams, String> {
    match parse_numbers(s)?[..] {
        [a, sv] => SpiralSizemapParams::new(a, sv).map_err(|e| e.to_string()),
        _ => Err("expected a,s".into()),
    }
}

fn parse_bins(s: &str) -> Result<Bins, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|t| match t.trim() {
            "inf" => Ok(f64::INFINITY),
            t => t.parse::<f64>().map_err(|e| format!("bad number `{t}`: {e}")),
        })
        .collect::<Result<_, _>>()?;
    if v.len() < 2 || v.windows(2).any(|w| !(w[1] > w[0])) {
        return Err("need at least two strictly increasing bin edges".into());
    }
    Ok(Bins(v))
}

/// Failure of a sub-command, mapped to an exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        Self { code: EXIT_USAGE, message: message.into() }
    }

    fn input(message: impl Into<String>) -> Self {
        Self { code: EXIT_INPUT, message: message.into() }
    }

    fn kind(&self) -> &'static str {
        match self.code {
            EXIT_USAGE => "usage",
            EXIT_INPUT => "input",
            EXIT_SOLVER => "solver",
            _ => "error",
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "error: {}: {}", self.kind(), self.message.replace('\n', " "))
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match &e {
            Error::InvalidParameter { .. } | Error::MissingField(_) => EXIT_USAGE,
            Error::SingularBlock(_) | Error::InversionUnrecoverable { .. } => EXIT_SOLVER,
            _ => EXIT_INPUT,
        };
        Self { code, message: e.to_string() }
    }
}

/// Error from an input file, naming the file.
fn in_file(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| match e {
        Error::Parse { .. } => e.into(),
        Error::Io(io) => CliError::input(format!("{}: {io}", path.display())),
        other => {
            let mut c = CliError::from(other);
            c.message = format!("{}: {}", path.display(), c.message);
            c
        }
    }
}

fn write_err(path: &Path) -> impl Fn(Error) -> CliError + '_ {
    move |e| CliError::input(format!("cannot write {}: {e}", path.display()))
}

/// Merges a `key = value` config file into `args`: config values replace
/// command-line values of the same option, with a warning.
fn apply_config(args: Vec<String>) -> Result<Vec<String>, CliError> {
    let Some(pos) = args.iter().position(|a| a == "--config" || a.starts_with("--config=")) else {
        return Ok(args);
    };
    let path = match args[pos].split_once('=') {
        Some((_, p)) => p.to_string(),
        None => args.get(pos + 1).cloned().ok_or_else(|| CliError::usage("--config needs a file"))?,
    };
    let text = fs::read_to_string(&path).map_err(|e| CliError::input(format!("{path}: {e}")))?;
    let mut out = args;
    for (k, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .map(|(k, v)| (k.trim().trim_start_matches("--"), v.trim()))
            .ok_or_else(|| CliError::usage(format!("{path}:{}: expected key = value", k + 1)))?;
        if key.is_empty() || key == "config" {
            return Err(CliError::usage(format!("{path}:{}: invalid key `{key}`", k + 1)));
        }
        let flag = format!("--{key}");
        let prefix = format!("{flag}=");
        let mut i = 0;
        let mut replaced = false;
        while i < out.len() {
            if out[i] == flag && i + 1 < out.len() {
                log::warn!("config {path} overrides {flag} {} with {value}", out[i + 1]);
                out.drain(i..i + 2);
                replaced = true;
            } else if out[i].starts_with(&prefix) {
                log::warn!("config {path} overrides {} with {value}", out[i]);
                out.remove(i);
                replaced = true;
            } else {
                i += 1;
            }
        }
        if !replaced {
            log::debug!("config {path}: {flag} = {value}");
        }
        out.push(format!("{flag}={value}"));
    }
    Ok(out)
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .try_init();
}

/// Runs the command line `args` (program name first) and returns the exit
/// status. Errors are reported as one line on stderr.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let args: Vec<String> = args.into_iter().map(Into::into).collect();
    let verbose = args.iter().filter(|a| *a == "-v" || *a == "--verbose").count()
        + args.iter().filter(|a| a.starts_with("-vv")).map(|a| a.len() - 1).sum::<usize>();
    init_logging(verbose.min(255) as u8);
    match execute(args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.code
        }
    }
}

fn execute(args: Vec<String>) -> Result<(), CliError> {
    let args = apply_config(args)?;
    let cli = match Cli::try_parse_from(&args) {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let first = e.to_string().lines().next().unwrap_or("").trim_start_matches("error: ").to_string();
            return Err(CliError::usage(first));
        }
    };
    let _ = cli.config;
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Sample(a) => sample_cmd(a),
        Command::Metric(a) => metric_cmd(a),
        Command::Adapt(a) => adapt(a),
        Command::Stats(a) => stats(a),
    }
}

fn load_mesh(path: &Path) -> Result<Mesh, CliError> {
    read_mesh(path).map_err(in_file(path))
}

fn load_scalar(path: &Path, n: usize) -> Result<ScalarField, CliError> {
    let f = read_scalar_sol(path, Some(n)).map_err(in_file(path))?;
    f.check(n).map_err(in_file(path))?;
    Ok(f)
}

fn generate(a: GenerateArgs) -> Result<(), CliError> {
    let mesh = match a.lattice {
        Lattice::Uniform => generate_uniform(&a.domain, a.h),
        Lattice::Equilateral => generate_equilateral(&a.domain, a.h),
    }
    .map_err(|e| CliError::usage(format!("--h: {e}")))?;
    write_mesh(&mesh, &a.out).map_err(write_err(&a.out))?;
    log::info!("wrote {} ({} vertices, {} triangles)", a.out.display(), mesh.num_vertices(), mesh.num_triangles());
    Ok(())
}

fn sample_cmd(a: SampleArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&a.mesh)?;
    let values = match (a.levelset, a.spiral) {
        (Some(ls), None) => sample(&mesh, |p| ls.eval(p)),
        (None, Some(params)) => sample(&mesh, |p| spiral_sizemap(p, &params)),
        _ => return Err(CliError::usage("give exactly one of --levelset or --spiral")),
    }?;
    write_scalar_sol(&values, &a.out).map_err(write_err(&a.out))
}

fn bounds(h_min: f64, h_max: f64) -> Result<MetricBounds, CliError> {
    MetricBounds::new(h_min, h_max).map_err(|e| CliError::usage(format!("--h-min/--h-max: {e}")))
}

fn metric_cmd(a: MetricArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&a.mesh)?;
    let n = mesh.num_vertices();
    let metric = match a.kind {
        MetricKind::Physical => {
            let path = a.field.as_deref().ok_or_else(|| CliError::usage("--kind physical needs --field"))?;
            let u = load_scalar(path, n)?;
            physical_metric(&recover_hessian(&mesh, &u)?, &bounds(a.h_min, a.h_max)?)?
        }
        MetricKind::Levelset => {
            let phi = match (&a.phi, &a.levelset) {
                (Some(p), None) => load_scalar(p, n)?,
                (None, Some(ls)) => sample(&mesh, |p| ls.eval(p))?,
                _ => return Err(CliError::usage("--kind levelset needs --phi or --levelset")),
            };
            levelset_metric(&mesh, &phi, a.eps, a.band, &bounds(a.h_min, a.h_max)?)?.metric
        }
        MetricKind::Intersect => {
            let (Some(pa), Some(pb)) = (&a.a, &a.b) else {
                return Err(CliError::usage("--kind intersect needs --a and --b"));
            };
            let ma = read_metric_sol(pa, Some(n)).map_err(in_file(pa))?;
            let mb = read_metric_sol(pb, Some(n)).map_err(in_file(pb))?;
            intersect_fields(&ma, &mb)?
        }
    };
    write_metric_sol(&metric, &a.out).map_err(write_err(&a.out))
}

fn tabulated(mesh: &Mesh, path: &Option<PathBuf>) -> Result<Option<FieldSource>, CliError> {
    path.as_deref()
        .map(|p| {
            let values = load_scalar(p, mesh.num_vertices())?;
            FieldSource::tabulated(mesh, &values).map_err(in_file(p))
        })
        .transpose()
}

fn write_diagnostics(path: &Option<PathBuf>, diagnostics: &crate::mmpde::Diagnostics) -> Result<(), CliError> {
    if let Some(p) = path {
        let file = fs::File::create(p).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))?;
        diagnostics
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))?;
    }
    Ok(())
}

fn adapt(a: AdaptArgs) -> Result<(), CliError> {
    let mesh = load_mesh(&a.mesh)?;
    let phi = match (&a.levelset, &a.phi) {
        (Some(ls), _) => Some(FieldSource::LevelSet(*ls)),
        (None, p) => tabulated(&mesh, p)?,
    };
    let sources = MonitorSources { phi, u: tabulated(&mesh, &a.u)?, depth: tabulated(&mesh, &a.depth)?, eta: tabulated(&mesh, &a.eta)? };
    let need = a.monitor.requirements();
    for (needed, present, flag) in [
        (need.phi, sources.phi.is_some(), "--levelset or --phi"),
        (need.u, sources.u.is_some(), "--u"),
        (need.depth, sources.depth.is_some(), "--depth"),
        (need.eta, sources.eta.is_some(), "--eta"),
    ] {
        if needed && !present {
            return Err(CliError::usage(format!("--monitor {} needs {flag}", a.monitor)));
        }
    }
    let config = SolverConfig {
        closure: a.closure,
        max_outer_iters: a.max_iter,
        jacobi_sweeps_per_outer: a.sweeps,
        residual_drop: a.tol,
        step_limiter: a.step,
        safeguard: a.safeguard,
        tau: a.tau,
        boundary: match a.boundary {
            Boundary::Dirichlet => BoundaryCondition::Dirichlet,
            Boundary::Slip => BoundaryCondition::Slip,
        },
        ..Default::default()
    };
    config.validate()?;
    let before = build_adjacency(&mesh)?.fingerprint();
    let solution = match solve(&mesh, &a.monitor, &sources, &config) {
        Ok(s) => s,
        Err(Error::InversionUnrecoverable { iteration, last_valid }) => {
            write_diagnostics(&a.diag, &last_valid.diagnostics)?;
            let last = apply_displacement(&mesh, &last_valid.displacement);
            write_mesh(&last, &a.out).map_err(write_err(&a.out))?;
            return Err(CliError {
                code: EXIT_SOLVER,
                message: format!("element inversion not recoverable at iteration {iteration}; last valid mesh written to {}", a.out.display()),
            });
        }
        Err(e) => return Err(e.into()),
    };
    write_diagnostics(&a.diag, &solution.diagnostics)?;
    let adapted = apply_displacement(&mesh, &solution.displacement);
    debug_assert_eq!(before, build_adjacency(&adapted)?.fingerprint());
    write_mesh(&adapted, &a.out).map_err(write_err(&a.out))?;
    if let Some(p) = &a.displacement {
        write_sol(&[SolData::Vector(solution.displacement.to_vec())], p).map_err(write_err(p))?;
    }
    let d = &solution.diagnostics;
    if d.converged {
        log::info!("converged after {} iterations", d.iterations());
    }
    Ok(())
}

fn stats(a: StatsArgs) -> Result<(), CliError> {
    let reference = load_mesh(&a.reference)?;
    let adapted = a.adapted.as_deref().map(load_mesh).transpose()?;
    let n = reference.num_vertices();
    if let Some(m) = &adapted {
        if !reference.same_connectivity(m) {
            return Err(CliError::input(format!(
                "{}: connectivity differs from {}",
                a.adapted.as_ref().unwrap().display(),
                a.reference.display()
            )));
        }
    }
    let phi_source = match (&a.phi, &a.levelset) {
        (Some(p), None) => Some(FieldSource::tabulated(&reference, &load_scalar(p, n)?).map_err(in_file(p))?),
        (None, Some(ls)) => Some(FieldSource::LevelSet(*ls)),
        _ => None,
    };
    let mut report = String::new();
    if let Some(src) = &phi_source {
        let mut table = StatsTable::default();
        table.push("reference", narrow_band_stats(&reference, &src.sample_at(&reference.positions())?, a.band)?);
        if let Some(m) = &adapted {
            table.push("adapted", narrow_band_stats(m, &src.sample_at(&m.positions())?, a.band)?);
        }
        report.push_str(&table.to_table());
        if let Some(p) = &a.out {
            fs::write(p, table.to_csv()).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))?;
        }
    } else if a.out.is_some() {
        return Err(CliError::usage("--out needs --phi or --levelset"));
    }
    if let Some(m) = &adapted {
        let qr = compression_ratio(&reference, m)?;
        let max = qr.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = qr.iter().copied().fold(f64::INFINITY, f64::min);
        let avg = qr.iter().sum::<f64>() / qr.len().max(1) as f64;
        report.push_str(&format!("compression ratio: min {min:.4} max {max:.4} avg {avg:.4}\n"));
        if let Some(p) = &a.compression_out {
            let mut csv = String::from("element,compression\n");
            for (t, q) in qr.iter().enumerate() {
                csv.push_str(&format!("{t},{q:.16e}\n"));
            }
            fs::write(p, csv).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))?;
        }
    }
    if let Some(mp) = &a.metric {
        let mesh = adapted.as_ref().unwrap_or(&reference);
        let metric = read_metric_sol(mp, Some(n)).map_err(in_file(mp))?;
        let bins = a.bins.as_ref().map_or(DEFAULT_BINS.to_vec(), |b| b.0.clone());
        let hist = edge_histogram(mesh, &metric, &bins)?;
        report.push_str(&hist.to_table());
        if let Some(p) = &a.histogram_out {
            fs::write(p, hist.to_csv()).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display())))?;
        }
    }
    print!("{report}");
    Ok(())
}
