//! `tmandel` command line: rasters, distances, experiments and figure presets.
//!
//! Exit codes: 0 success, 1 a verdict failed, 2 bad configuration or I/O.

mod config;
mod output;

use std::ffi::OsString;
use std::fmt;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{ArgMatches, Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use tmandel::experiments::{
    counterexample_constants, counterexample_template, run_lsc_counterexample, run_usc_experiment, sign_warning,
    verify_boundedness, verify_invariance, verify_invariance_random, BoundednessSpec, C1Sign, CounterexampleConstants,
    ExperimentReport, ProbeSpec, UscRun,
};
use tmandel::number::parse_real;
use tmandel::pnm::{read_raster, write_pbm, write_pgm};
use tmandel::raster::{with_workers, Raster, SliceSpec, Window};
use tmandel::render::{render_overlay, Image, BLACK, DARK_BROWN, GREEN, LIGHT_BLUE, WHITE};
use tmandel::{
    compare, raster_filled_julia, raster_mandelbrot_slice, Complex64, CriticalTimes, DynamicsError, MembershipConfig,
    ParameterPoint, Template, TemplateError,
};

use config::ConfigFile;
use output::OutDir;

/// Environment variable holding the worker thread count.
pub const WORKERS_ENV: &str = "TMANDEL_WORKERS";

#[derive(Debug)]
pub enum Failure {
    Config(String),
    Io(String),
    Verdict,
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Config(m) | Failure::Io(m) => f.write_str(m),
            Failure::Verdict => f.write_str("one or more checks failed"),
        }
    }
}

impl Failure {
    fn exit_code(&self) -> i32 {
        match self {
            Failure::Verdict => 1,
            Failure::Config(_) | Failure::Io(_) => 2,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "tmandel", version, about = "Fixed-template Mandelbrot sets and iterated filled Julia sets")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Raster of the iterated filled Julia set at a given time.
    Julia(JuliaArgs),
    /// Raster of a one-coordinate slice of the fixed-template Mandelbrot set.
    Mandel(MandelArgs),
    /// Directed and Hausdorff distances between two PBM/PGM rasters.
    Distance(DistanceArgs),
    /// Distance trend between periodic approximations and the limit template.
    Usc(UscArgs),
    /// Empirical excluded ball around the counterexample parameter.
    Lsc(LscArgs),
    /// Random checks that large constants and large points escape.
    Bounds(BoundsArgs),
    /// Random checks of escape-step shifting under composition.
    Invariance(InvarianceArgs),
    /// Preset: full slices through the counterexample parameter.
    Figure1(FigureArgs),
    /// Preset: zooms about the counterexample parameter.
    Figure2(FigureArgs),
}

#[derive(Args, Debug)]
struct Common {
    /// Read `key = value` lines mirroring these flags; flags given here win.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Directory for all outputs and the manifest.
    #[arg(long, value_name = "DIR", default_value = "tmandel-out")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct Orbit {
    /// Orbit horizon (maximum iterations per critical time).
    #[arg(long, default_value_t = tmandel::dynamics::DEFAULT_MAX_ITERATIONS)]
    horizon: u32,
    /// Hard cap on orbit modulus.
    #[arg(long, default_value = "1e150")]
    guard: f64,
}

#[derive(Args, Debug)]
struct Membership {
    #[command(flatten)]
    orbit: Orbit,
    /// Critical times to test: `all` or `zero`.
    #[arg(long, default_value = "all")]
    critical_times: String,
}

#[derive(Args, Debug)]
struct Counterexample {
    #[arg(long, default_value = "1/256", allow_hyphen_values = true)]
    eps0: String,
    #[arg(long, default_value = "1/256", allow_hyphen_values = true)]
    eps1: String,
    /// `minus` for c1 = 1/4 - eps1, `plus` for 1/4 + eps1.
    #[arg(long, default_value = "minus")]
    c1_sign: String,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct JuliaArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    template: String,
    /// Parameter literal, e.g. `c=(-1,0) d=(2) dmax=2`.
    #[arg(long, allow_hyphen_values = true)]
    param: String,
    /// Start time m.
    #[arg(long, default_value_t = 0)]
    time: usize,
    #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
    window: String,
    #[arg(long, default_value = "512x512")]
    res: String,
    #[command(flatten)]
    orbit: Orbit,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct MandelArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    template: String,
    /// Base parameter literal; the varying coordinate's value is ignored.
    #[arg(long, allow_hyphen_values = true)]
    base: String,
    /// Index of the constant that varies over the window.
    #[arg(long, default_value_t = 0)]
    vary: usize,
    #[arg(long, default_value = "-2,2,-2,2", allow_hyphen_values = true)]
    window: String,
    #[arg(long, default_value = "512x512")]
    res: String,
    #[command(flatten)]
    membership: Membership,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct DistanceArgs {
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Also write `distance.csv` and a manifest here.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    a: PathBuf,
    b: PathBuf,
    /// Window bounds, required when the files carry none.
    #[arg(long, allow_hyphen_values = true)]
    window: Option<String>,
    #[arg(long)]
    label_a: Option<String>,
    #[arg(long)]
    label_b: Option<String>,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct UscArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value = "D=2:0|1")]
    template: String,
    /// Base parameter literal; defaults to the counterexample parameter.
    #[arg(long, allow_hyphen_values = true)]
    base: Option<String>,
    #[command(flatten)]
    counterexample: Counterexample,
    /// Slice as `COORD:re_min,re_max,im_min,im_max`; repeatable.
    #[arg(long, allow_hyphen_values = true, default_value = "0:-1.25,1.25,-1.25,1.25")]
    slice: Vec<String>,
    #[arg(long, default_value = "10,20,50,100,200")]
    n_list: String,
    #[arg(long, default_value = "300x300")]
    res: String,
    #[command(flatten)]
    membership: Membership,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct LscArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    counterexample: Counterexample,
    #[arg(long, default_value = "20,50,100,200")]
    n_list: String,
    /// Product-metric sphere radii.
    #[arg(long, default_value = "0.002,0.005,0.01,0.02")]
    radii: String,
    /// Samples per sphere.
    #[arg(long, default_value_t = 256)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    membership: Membership,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct BoundsArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Alphabet sizes, used in turn.
    #[arg(long, default_value = "1,2,3")]
    dims: String,
    #[arg(long, default_value_t = 4)]
    dmax: u32,
    /// Members to find by rejection sampling.
    #[arg(long, default_value_t = 100)]
    members: usize,
    /// Probe points per member.
    #[arg(long, default_value_t = 16)]
    probes: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[command(flatten)]
    membership: Membership,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct InvarianceArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    /// Random parameter/template pairs; ignored when --param and --template are given.
    #[arg(long, default_value_t = 5)]
    pairs: usize,
    #[arg(long, allow_hyphen_values = true)]
    param: Option<String>,
    #[arg(long)]
    template: Option<String>,
    #[arg(long, default_value_t = tmandel::dynamics::DEFAULT_MAX_ITERATIONS)]
    horizon: u32,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args, Debug)]
#[command(args_override_self = true)]
struct FigureArgs {
    #[command(flatten)]
    common: Common,
    /// Resolution relative to the native 1200x1200.
    #[arg(long, default_value = "1")]
    scale: f64,
    #[command(flatten)]
    counterexample: Counterexample,
    #[arg(long, default_value = "20,200")]
    n_list: String,
    #[command(flatten)]
    membership: Membership,
}

/// Runs the command line and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<String> = args.into_iter().map(|a| a.into().to_string_lossy().into_owned()).collect();
    match dispatch(&argv) {
        Ok(()) => 0,
        Err(failure) => {
            if !matches!(failure, Failure::Verdict) {
                eprintln!("error: {failure}");
            }
            failure.exit_code()
        }
    }
}

/// Splices config file entries in front of the user's flags.
fn dispatch(argv: &[String]) -> Result<(), Failure> {
    let root = Cli::command();
    let sub_index = argv.iter().skip(1).position(|a| !a.starts_with('-')).map(|p| p + 1);
    let mut config = ConfigFile::default();
    let mut full = argv.to_vec();
    if let Some(index) = sub_index {
        if let Some(sub) = root.find_subcommand(&argv[index]) {
            if let Some(path) = config_path(&argv[index + 1..]) {
                config = ConfigFile::load(Path::new(&path), sub)?;
                let tokens = config.tokens(sub)?;
                full.splice(index + 1..index + 1, tokens);
            }
        }
    }
    let matches = match root.clone().try_get_matches_from(&full) {
        Ok(m) => m,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return Ok(());
            }
            return Err(Failure::Config(e.to_string().trim_end().to_string()));
        }
    };
    let cli = Cli::from_arg_matches(&matches).map_err(|e| Failure::Config(e.to_string()))?;
    let (name, sub_matches) = matches.subcommand().expect("subcommand required");
    let sub = root.find_subcommand(name).expect("known subcommand");
    let ctx = Ctx {
        config: &config,
        user_args: sub_index.map_or(&[][..], |i| &argv[i + 1..]),
        resolved: config::resolved(sub, sub_matches),
        command: name.to_string(),
    };
    let workers = workers()?;
    with_workers(workers, || execute(cli.command, &ctx, sub_matches))
}

fn config_path(args: &[String]) -> Option<String> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        if arg == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = arg.strip_prefix("--config=") {
            return Some(path.to_string());
        }
    }
    None
}

fn workers() -> Result<Option<usize>, Failure> {
    match std::env::var(WORKERS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(Failure::Config(format!("{WORKERS_ENV} must be a positive integer, got `{v}`"))),
        },
    }
}

/// Parse context: where each flag's value came from.
struct Ctx<'a> {
    config: &'a ConfigFile,
    user_args: &'a [String],
    resolved: String,
    command: String,
}

impl Ctx<'_> {
    fn on_command_line(&self, key: &str) -> bool {
        let flag = format!("--{key}");
        self.user_args.iter().any(|a| *a == flag || a.starts_with(&format!("{flag}=")))
    }

    /// Error at 1-based `column` of the value of `--key`.
    fn literal_error(&self, key: &str, column: usize, message: &str) -> Failure {
        if !self.on_command_line(key) {
            if let Some(origin) = self.config.origin(key) {
                return self.config.error_at(origin, column.saturating_sub(1), message);
            }
        }
        Failure::Config(format!("--{key}: column {column}: {message}"))
    }

    fn template(&self, key: &str, text: &str) -> Result<Template, Failure> {
        text.parse().map_err(|e| match e {
            TemplateError::Parse { column, message } => self.literal_error(key, column, &message),
            other => self.literal_error(key, 1, &other.to_string()),
        })
    }

    fn parameter(&self, key: &str, text: &str) -> Result<ParameterPoint, Failure> {
        text.parse().map_err(|e| match e {
            DynamicsError::Parse { column, message } => self.literal_error(key, column, &message),
            other => self.literal_error(key, 1, &other.to_string()),
        })
    }

    fn real(&self, key: &str, text: &str, base_column: usize) -> Result<f64, Failure> {
        parse_real(text.trim()).map_err(|e| self.literal_error(key, base_column + e.offset, &e.message))
    }

    /// Comma-separated reals, each exact.
    fn reals(&self, key: &str, text: &str) -> Result<Vec<f64>, Failure> {
        let mut out = Vec::new();
        let mut column = 1;
        for part in text.split(',') {
            let lead = part.len() - part.trim_start().len();
            out.push(self.real(key, part, column + lead)?);
            column += part.len() + 1;
        }
        Ok(out)
    }

    fn bounds(&self, key: &str, text: &str) -> Result<[f64; 4], Failure> {
        let values = self.reals(key, text)?;
        <[f64; 4]>::try_from(values)
            .map_err(|v| self.literal_error(key, 1, &format!("expected 4 bounds, got {}", v.len())))
    }

    fn window(&self, key: &str, text: &str, (width, height): (usize, usize)) -> Result<Window, Failure> {
        let [a, b, c, d] = self.bounds(key, text)?;
        Window::new(a, b, c, d, width, height).map_err(|e| self.literal_error(key, 1, &e.to_string()))
    }

    fn resolution(&self, key: &str, text: &str) -> Result<(usize, usize), Failure> {
        let parsed = text.split_once('x').and_then(|(w, h)| Some((w.parse().ok()?, h.parse().ok()?)));
        match parsed {
            Some((w, h)) if w > 0 && h > 0 => Ok((w, h)),
            _ => Err(self.literal_error(key, 1, &format!("expected WIDTHxHEIGHT, got `{text}`"))),
        }
    }

    fn list(&self, key: &str, text: &str) -> Result<Vec<usize>, Failure> {
        let mut column = 1;
        let mut out = Vec::new();
        for part in text.split(',') {
            match part.trim().parse::<usize>() {
                Ok(n) if n > 0 => out.push(n),
                _ => {
                    return Err(self.literal_error(key, column, &format!("expected a positive integer, got `{part}`")))
                }
            }
            column += part.len() + 1;
        }
        Ok(out)
    }

    fn membership(&self, m: &Membership) -> Result<MembershipConfig, Failure> {
        let critical_times: CriticalTimes =
            m.critical_times.parse().map_err(|e: String| self.literal_error("critical-times", 1, &e))?;
        Ok(MembershipConfig { max_iterations: m.orbit.horizon, critical_times, overflow_guard: m.orbit.guard })
    }

    fn counterexample(&self, c: &Counterexample) -> Result<(CounterexampleConstants, C1Sign), Failure> {
        let eps0 = self.real("eps0", &c.eps0, 1)?;
        let eps1 = self.real("eps1", &c.eps1, 1)?;
        let consts = counterexample_constants(eps0, eps1).map_err(|e| self.literal_error("eps0", 1, &e.to_string()))?;
        let sign: C1Sign = c.c1_sign.parse().map_err(|e: String| self.literal_error("c1-sign", 1, &e))?;
        Ok((consts, sign))
    }
}

fn execute(command: Cmd, ctx: &Ctx, _matches: &ArgMatches) -> Result<(), Failure> {
    match command {
        Cmd::Julia(a) => julia(a, ctx),
        Cmd::Mandel(a) => mandel(a, ctx),
        Cmd::Distance(a) => distance(a, ctx),
        Cmd::Usc(a) => usc(a, ctx),
        Cmd::Lsc(a) => lsc(a, ctx),
        Cmd::Bounds(a) => bounds(a, ctx),
        Cmd::Invariance(a) => invariance(a, ctx),
        Cmd::Figure1(a) => figure(a, ctx, false),
        Cmd::Figure2(a) => figure(a, ctx, true),
    }
}

fn domain(e: impl fmt::Display) -> Failure {
    Failure::Config(e.to_string())
}

fn open_out(common: &Common, ctx: &Ctx) -> Result<OutDir, Failure> {
    open_dir(&common.out, ctx)
}

fn open_dir(dir: &Path, ctx: &Ctx) -> Result<OutDir, Failure> {
    let mut out = OutDir::create(dir)?;
    let header = format!("# tmandel {} resolved configuration\n", ctx.command);
    out.write("resolved.cfg", (header + &ctx.resolved).as_bytes())?;
    Ok(out)
}

fn finish(out: OutDir) -> Result<(), Failure> {
    let manifest = out.finish()?;
    println!("wrote {}", manifest.display());
    Ok(())
}

fn write_raster(out: &mut OutDir, stem: &str, raster: &Raster) -> Result<(), Failure> {
    let mut pbm = Vec::new();
    write_pbm(raster, &mut pbm).expect("in-memory write");
    out.write(&format!("{stem}.pbm"), &pbm)?;
    let mut pgm = Vec::new();
    write_pgm(raster, &mut pgm).expect("in-memory write");
    out.write(&format!("{stem}.pgm"), &pgm)
}

fn write_image(out: &mut OutDir, stem: &str, image: &Image) -> Result<(), Failure> {
    let mut ppm = Vec::new();
    image.write_ppm(&mut ppm).expect("in-memory write");
    out.write(&format!("{stem}.ppm"), &ppm)?;
    let mut png = Vec::new();
    image.write_png(&mut png).map_err(|e| Failure::Io(e.to_string()))?;
    out.write(&format!("{stem}.png"), &png)
}

/// Prints checks and wall time; fails if any check failed.
fn publish(out: &mut OutDir, name: &str, report: &ExperimentReport) -> Result<bool, Failure> {
    out.write(&format!("{name}.json"), (report.to_json() + "\n").as_bytes())?;
    for warning in &report.warnings {
        eprintln!("warning: {warning}");
    }
    for check in &report.checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        println!("{verdict} {}: {}", check.name, check.detail);
    }
    eprintln!("{name}: wall time {:.2} s", report.wall_time.as_secs_f64());
    Ok(report.passed)
}

fn verdict(passed: bool) -> Result<(), Failure> {
    if passed {
        Ok(())
    } else {
        Err(Failure::Verdict)
    }
}

fn julia(a: JuliaArgs, ctx: &Ctx) -> Result<(), Failure> {
    let template = ctx.template("template", &a.template)?;
    let point = ctx.parameter("param", &a.param)?;
    let window = ctx.window("window", &a.window, ctx.resolution("res", &a.res)?)?;
    let raster =
        raster_filled_julia(&point, &template, a.time, &window, a.orbit.horizon, a.orbit.guard).map_err(domain)?;
    let mut out = open_out(&a.common, ctx)?;
    write_raster(&mut out, "julia", &raster)?;
    println!("inside pixels: {} of {}", raster.inside_count(), window.len());
    finish(out)
}

fn mandel(a: MandelArgs, ctx: &Ctx) -> Result<(), Failure> {
    let template = ctx.template("template", &a.template)?;
    let base = ctx.parameter("base", &a.base)?;
    let window = ctx.window("window", &a.window, ctx.resolution("res", &a.res)?)?;
    let cfg = ctx.membership(&a.membership)?;
    let spec = SliceSpec::new(base, a.vary, window).map_err(|e| ctx.literal_error("vary", 1, &e.to_string()))?;
    let raster = raster_mandelbrot_slice(&spec, &template, &cfg).map_err(domain)?;
    let mut out = open_out(&a.common, ctx)?;
    write_raster(&mut out, "mandel", &raster)?;
    println!("inside pixels: {} of {}", raster.inside_count(), window.len());
    finish(out)
}

fn read_file(path: &Path, bounds: Option<[f64; 4]>) -> Result<Raster, Failure> {
    let file = std::fs::File::open(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    read_raster(BufReader::new(file), bounds).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

fn distance(a: DistanceArgs, ctx: &Ctx) -> Result<(), Failure> {
    let bounds = a.window.as_deref().map(|w| ctx.bounds("window", w)).transpose()?;
    let ra = read_file(&a.a, bounds)?;
    let rb = read_file(&a.b, bounds)?;
    let cmp = compare(&ra, &rb).map_err(domain)?;
    let label = |l: &Option<String>, p: &Path| l.clone().unwrap_or_else(|| p.display().to_string());
    let csv = format!(
        "{}\n{}\n",
        tmandel::Comparison::csv_header(),
        cmp.csv_row(&label(&a.label_a, &a.a), &label(&a.label_b, &a.b))
    );
    print!("{csv}");
    let Some(dir) = &a.out else { return Ok(()) };
    let mut out = open_dir(dir, ctx)?;
    out.write("distance.csv", csv.as_bytes())?;
    finish(out)
}

fn default_base(consts: &CounterexampleConstants, sign: C1Sign) -> ParameterPoint {
    consts.parameter(sign)
}

fn usc(a: UscArgs, ctx: &Ctx) -> Result<(), Failure> {
    let template = ctx.template("template", &a.template)?;
    let (consts, sign) = ctx.counterexample(&a.counterexample)?;
    let base = match &a.base {
        Some(text) => ctx.parameter("base", text)?,
        None => default_base(&consts, sign),
    };
    let res = ctx.resolution("res", &a.res)?;
    let mut slices = Vec::new();
    for text in &a.slice {
        let Some((coord, bounds)) = text.split_once(':') else {
            return Err(ctx.literal_error("slice", 1, "expected COORD:re_min,re_max,im_min,im_max"));
        };
        let coordinate = coord.trim().parse().map_err(|_| ctx.literal_error("slice", 1, "bad coordinate"))?;
        let window = ctx.window("slice", bounds, res)?;
        slices.push(
            SliceSpec::new(base.clone(), coordinate, window)
                .map_err(|e| ctx.literal_error("slice", 1, &e.to_string()))?,
        );
    }
    let n_list = ctx.list("n-list", &a.n_list)?;
    let cfg = ctx.membership(&a.membership)?;
    let mut run = run_usc_experiment(&template, &slices, &n_list, &cfg).map_err(domain)?;
    if a.base.is_none() {
        run.report.warnings.extend(sign_warning(sign));
    }
    let mut out = open_out(&a.common, ctx)?;
    write_usc_rasters(&mut out, &run, &n_list)?;
    out.write("usc.csv", run.csv().as_bytes())?;
    let passed = publish(&mut out, "usc", &run.report)?;
    finish(out)?;
    verdict(passed)
}

fn write_usc_rasters(out: &mut OutDir, run: &UscRun, n_list: &[usize]) -> Result<(), Failure> {
    for (index, rasters) in run.rasters.iter().enumerate() {
        let coordinate = rasters[0].meta().slice_coordinate().unwrap_or(index);
        let prefix = format!("slice{index}_c{coordinate}");
        write_raster(out, &format!("{prefix}_limit"), &rasters[0])?;
        for (n, raster) in n_list.iter().zip(&rasters[1..]) {
            write_raster(out, &format!("{prefix}_n{n}"), raster)?;
        }
    }
    Ok(())
}

fn lsc(a: LscArgs, ctx: &Ctx) -> Result<(), Failure> {
    let (consts, sign) = ctx.counterexample(&a.counterexample)?;
    let n_list = ctx.list("n-list", &a.n_list)?;
    let radii = ctx.reals("radii", &a.radii)?;
    let cfg = ctx.membership(&a.membership)?;
    let probe = ProbeSpec { radii, samples_per_radius: a.samples, seed: a.seed };
    let report = run_lsc_counterexample(&consts, sign, &n_list, &probe, &cfg).map_err(domain)?;
    let mut out = open_out(&a.common, ctx)?;
    let passed = publish(&mut out, "lsc", &report)?;
    finish(out)?;
    verdict(passed)
}

fn bounds(a: BoundsArgs, ctx: &Ctx) -> Result<(), Failure> {
    let dimensions = ctx.list("dims", &a.dims)?;
    let spec = BoundednessSpec {
        trials: a.trials,
        dimensions,
        max_degree: a.dmax,
        members: a.members,
        probes_per_member: a.probes,
        seed: a.seed,
    };
    let cfg = ctx.membership(&a.membership)?;
    let report = verify_boundedness(&spec, &cfg).map_err(domain)?;
    let mut out = open_out(&a.common, ctx)?;
    let passed = publish(&mut out, "bounds", &report)?;
    finish(out)?;
    verdict(passed)
}

fn invariance(a: InvarianceArgs, ctx: &Ctx) -> Result<(), Failure> {
    let report = match (&a.param, &a.template) {
        (Some(p), Some(t)) => {
            let point = ctx.parameter("param", p)?;
            let template = ctx.template("template", t)?;
            verify_invariance(a.samples, &point, &template, a.horizon, a.seed)
        }
        (None, None) => verify_invariance_random(a.samples, a.pairs, a.horizon, a.seed),
        _ => return Err(Failure::Config("--param and --template must be given together".into())),
    }
    .map_err(domain)?;
    let mut out = open_out(&a.common, ctx)?;
    let passed = publish(&mut out, "invariance", &report)?;
    finish(out)?;
    verdict(passed)
}

/// Native figure resolution.
const FIGURE_PIXELS: f64 = 1200.0;

fn figure(a: FigureArgs, ctx: &Ctx, zoom: bool) -> Result<(), Failure> {
    if !(a.scale > 0.0 && a.scale <= 4.0) {
        return Err(ctx.literal_error("scale", 1, "scale must lie in (0, 4]"));
    }
    let side = ((FIGURE_PIXELS * a.scale).round() as usize).max(1);
    let (consts, sign) = ctx.counterexample(&a.counterexample)?;
    let base = consts.parameter(sign);
    let (c0, c1) = (base.constants()[0], base.constants()[1]);
    let windows = if zoom {
        [
            Window::centered(Complex64::new(c0.re, 0.0), 0.25, 0.25, side, side),
            Window::centered(Complex64::new(c1.re, 0.0), 0.05, 0.05, side, side),
        ]
    } else {
        [Window::new(-1.25, 1.25, -1.25, 1.25, side, side), Window::new(-1.5, 0.5, -1.0, 1.0, side, side)]
    };
    let slices = windows
        .into_iter()
        .enumerate()
        .map(|(coordinate, w)| SliceSpec::new(base.clone(), coordinate, w.map_err(domain)?).map_err(domain))
        .collect::<Result<Vec<_>, _>>()?;
    let n_list = ctx.list("n-list", &a.n_list)?;
    let cfg = ctx.membership(&a.membership)?;
    let mut run = run_usc_experiment(&counterexample_template(), &slices, &n_list, &cfg).map_err(domain)?;
    run.report.warnings.extend(sign_warning(sign));

    let name = if zoom { "figure2" } else { "figure1" };
    let mut out = open_out(&a.common, ctx)?;
    write_usc_rasters(&mut out, &run, &n_list)?;
    let palette = [LIGHT_BLUE, DARK_BROWN];
    let mut csv = format!("{}\n", tmandel::Comparison::csv_header());
    for (coordinate, rasters) in run.rasters.iter().enumerate() {
        let mut layers = vec![(&rasters[0], GREEN)];
        for (k, raster) in rasters[1..].iter().enumerate() {
            layers.push((raster, palette.get(k).copied().unwrap_or(DARK_BROWN)));
        }
        let mut image = render_overlay(&layers, WHITE).map_err(domain)?.expect("at least one layer");
        if zoom {
            image.cross(rasters[0].window(), base.constants()[coordinate], 0.05, BLACK);
        }
        write_image(&mut out, &format!("{name}_c{coordinate}"), &image)?;
    }
    for row in &run.rows {
        let cmp = tmandel::Comparison {
            d_ab: row.d_approx_limit,
            d_ba: row.d_limit_approx,
            d_h: row.d_h,
            quantization_bound: row.quantization_bound,
        };
        csv.push_str(&cmp.csv_row(&format!("c{}:N={}", row.coordinate, row.n), &format!("c{}:limit", row.coordinate)));
        csv.push('\n');
    }
    out.write(&format!("{name}.csv"), csv.as_bytes())?;
    let passed = publish(&mut out, name, &run.report)?;
    finish(out)?;
    verdict(passed)
}
