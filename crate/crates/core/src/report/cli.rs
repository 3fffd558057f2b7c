//! Command-line front end. The `ctrlcurv` binary only forwards to [`run`].
//!
//! Exit codes: 0 ok, 1 usage or input error, 2 numerical failure,
//! 3 verdict unreliable (more than 20% of samples excluded).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::fd::FdConfig;
use crate::flows::{FlowConfig, FlowError, FlowStatus, GenerateConfig, MoserFamily};
use crate::invariants::InvariantConfig;
use crate::linalg::Vec2;

use super::selftest::{self, SelftestOptions};
use super::{
    cmd_check, cmd_extremals, cmd_invariants, fan, load_system, regularity_violations, trajectories_csv,
    trajectories_json, velocity_table_csv, Format, InitialCondition, LoadError, LoadedSystem, RegionGrid, RegionSpec,
    MoserSpec, SystemFile, SystemSpec, TrajectoryRecord,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_NUMERICAL: i32 = 2;
pub const EXIT_UNRELIABLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ctrlcurv", version, about = "Feedback invariants of planar control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tabulate c, b, κ and identity residuals on a grid.
    Invariants(GridArgs),
    /// Trivializability verdicts from sup-norms on a grid.
    Check(GridArgs),
    /// Integrate extremals of the Hamiltonian field.
    Extremals(ExtremalArgs),
    /// Build the commuting-frame system of a Moser family.
    Generate(GenerateArgs),
    /// Run the built-in check battery.
    Selftest(SelftestArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

impl From<FormatArg> for Format {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => Format::Csv,
            FormatArg::Json => Format::Json,
        }
    }
}

#[derive(Debug, Args)]
struct NumericArgs {
    /// Verdict threshold on sup-norms.
    #[arg(long, value_name = "T")]
    tol: Option<f64>,
    /// Base finite-difference step.
    #[arg(long, value_name = "H")]
    fd_step: Option<f64>,
}

impl NumericArgs {
    fn config(&self) -> Result<InvariantConfig, String> {
        let mut cfg = InvariantConfig::default();
        if let Some(t) = self.tol {
            if !(t > 0.0) {
                return Err(format!("--tol must be positive, got {t}"));
            }
            cfg.verdict_threshold = t;
        }
        if let Some(h) = self.fd_step {
            if !(h > 0.0 && h < 1.0) {
                return Err(format!("--fd-step must lie in (0, 1), got {h}"));
            }
            cfg.fd = FdConfig { step: h, ..cfg.fd };
        }
        Ok(cfg)
    }
}

#[derive(Debug, Args)]
struct RegionArgs {
    /// Samples per q axis (at least 3).
    #[arg(long, value_name = "N")]
    grid: Option<usize>,
    /// Samples over the control domain (at least 8).
    #[arg(long, value_name = "N")]
    u_samples: Option<usize>,
    /// Region `q1lo,q1hi,q2lo,q2hi`, overriding the file.
    #[arg(long, value_name = "BOX", value_parser = parse_floats::<4>, allow_hyphen_values = true)]
    region: Option<[f64; 4]>,
}

impl RegionArgs {
    fn grid(&self, base: RegionGrid) -> Result<RegionGrid, LoadError> {
        let base = match self.region {
            Some([a, b, c, d]) => RegionGrid::new([a, b], [c, d], base.nq, base.u_samples)?,
            None => base,
        };
        base.with_resolution(self.grid, self.u_samples)
    }
}

#[derive(Debug, Args)]
struct GridArgs {
    /// System definition (JSON).
    system: PathBuf,
    #[command(flatten)]
    region: RegionArgs,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct ExtremalArgs {
    system: PathBuf,
    /// Start point `q1,q2` for a fan of initial controls.
    #[arg(long, value_name = "Q", value_parser = parse_floats::<2>, allow_hyphen_values = true)]
    from: Option<[f64; 2]>,
    /// Number of initial controls in the fan.
    #[arg(long, default_value_t = 8)]
    angles: usize,
    /// Explicit initial condition `q1,q2,u`; repeatable.
    #[arg(long = "init", value_name = "Q,U", value_parser = parse_floats::<3>, allow_hyphen_values = true)]
    inits: Vec<[f64; 3]>,
    #[arg(long, default_value_t = 1.0)]
    t_end: f64,
    #[command(flatten)]
    numeric: NumericArgs,
    /// Directory for one file per trajectory; stdout when absent.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct GenerateArgs {
    #[arg(long, allow_hyphen_values = true)]
    a1: String,
    #[arg(long, allow_hyphen_values = true)]
    a2: String,
    #[arg(long, allow_hyphen_values = true, default_value_t = 1.0)]
    sign: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 0.0)]
    u0: f64,
    /// Half-width of the control interval for transported systems.
    #[arg(long)]
    span: Option<f64>,
    /// RK4 steps per transport.
    #[arg(long)]
    steps: Option<usize>,
    #[command(flatten)]
    region: RegionArgs,
    /// Output file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// `json` writes a loadable system file, `csv` samples f and ∂f/∂u.
    #[arg(long, value_enum)]
    format: Option<FormatArg>,
}

#[derive(Debug, Args)]
struct SelftestArgs {
    /// Reduced battery.
    #[arg(long)]
    quick: bool,
    #[arg(long, hide = true)]
    inject_fault: bool,
    /// Summary file; stdout when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

fn parse_floats<const N: usize>(s: &str) -> Result<[f64; N], String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != N {
        return Err(format!("expected {N} comma-separated numbers, got `{s}`"));
    }
    let mut out = [0.0; N];
    for (o, p) in out.iter_mut().zip(parts) {
        *o = p.trim().parse().map_err(|_| format!("`{p}` is not a number"))?;
    }
    Ok(out)
}

/// A failure with its exit code.
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(message: impl ToString) -> Self {
        Failure { code: EXIT_USAGE, message: message.to_string() }
    }

    fn numerical(message: impl ToString) -> Self {
        Failure { code: EXIT_NUMERICAL, message: message.to_string() }
    }
}

impl From<LoadError> for Failure {
    fn from(e: LoadError) -> Self {
        let code = if matches!(e, LoadError::Regularity { .. }) { EXIT_NUMERICAL } else { EXIT_USAGE };
        Failure { code, message: e.to_string() }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::usage(e)
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => Ok(out.write_all(text.as_bytes())?),
    }
}

fn load(args: &GridArgs) -> Result<(LoadedSystem, RegionGrid, InvariantConfig), Failure> {
    let cfg = args.numeric.config().map_err(Failure::usage)?;
    let loaded = load_system(&args.system)?;
    let grid = args.region.grid(loaded.grid)?;
    Ok((loaded, grid, cfg))
}

fn invariants_cmd(args: GridArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (loaded, grid, cfg) = load(&args)?;
    let table = cmd_invariants(&loaded.system, &grid, &cfg);
    emit(out, args.out.as_deref(), &table.render(args.format.map_or(Format::Csv, Into::into)))?;
    let excluded = table.excluded();
    Ok(if excluded == table.rows.len() {
        EXIT_NUMERICAL
    } else if excluded as f64 > super::UNRELIABLE_FRACTION * table.rows.len() as f64 {
        EXIT_UNRELIABLE
    } else {
        EXIT_OK
    })
}

fn check_cmd(args: GridArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let (loaded, grid, cfg) = load(&args)?;
    let report = cmd_check(&loaded.system, &grid, &cfg);
    emit(out, args.out.as_deref(), &report.render(args.format.map_or(Format::Json, Into::into)))?;
    Ok(if report.excluded == report.total {
        EXIT_NUMERICAL
    } else if report.unreliable {
        EXIT_UNRELIABLE
    } else {
        EXIT_OK
    })
}

fn extremals_cmd(args: ExtremalArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    let invariants = args.numeric.config().map_err(Failure::usage)?;
    let loaded = load_system(&args.system)?;
    let sys = &loaded.system;
    let mut inits: Vec<InitialCondition> =
        args.inits.iter().map(|&[q1, q2, u]| InitialCondition { q: [q1, q2], u }).collect();
    if let Some(q) = args.from {
        if args.angles == 0 {
            return Err(Failure::usage("--angles must be positive"));
        }
        inits.extend(fan(sys, q, args.angles));
    }
    if inits.is_empty() {
        let g = loaded.grid;
        let centre: Vec2 = [0.5 * (g.q1_range[0] + g.q1_range[1]), 0.5 * (g.q2_range[0] + g.q2_range[1])];
        inits = fan(sys, centre, args.angles.max(1));
    }
    let cfg = FlowConfig { invariants, ..Default::default() };
    let records = cmd_extremals(sys, &inits, args.t_end, &cfg).map_err(|e| match e {
        FlowError::Config(m) => Failure::usage(m),
        e => Failure::numerical(e),
    })?;
    let format = args.format.map_or(Format::Csv, Into::into);
    let render = |r: &[TrajectoryRecord]| match format {
        Format::Csv => trajectories_csv(r),
        Format::Json => trajectories_json(r),
    };
    match &args.out {
        Some(dir) => {
            std::fs::create_dir_all(dir).map_err(|e| Failure::usage(format!("cannot create {}: {e}", dir.display())))?;
            let ext = match format {
                Format::Csv => "csv",
                Format::Json => "json",
            };
            for rec in &records {
                let path = dir.join(format!("trajectory_{:03}.{ext}", rec.index));
                emit(out, Some(&path), &render(std::slice::from_ref(rec)))?;
            }
        }
        None => emit(out, None, &render(&records))?,
    }
    let all_completed = records.iter().all(|r| r.trajectory.status == FlowStatus::Completed);
    Ok(if all_completed { EXIT_OK } else { EXIT_NUMERICAL })
}

fn generate_cmd(args: GenerateArgs, out: &mut dyn Write) -> Result<i32, Failure> {
    MoserFamily::parse(&args.a1, &args.a2, args.sign, args.u0).map_err(Failure::usage)?;
    let defaults = GenerateConfig::default();
    let grid = args.region.grid(RegionGrid::from_spec(None)?)?;
    let file = SystemFile {
        schema: super::SCHEMA_VERSION.to_string(),
        name: Some("moser".into()),
        region: Some(RegionSpec {
            q1: grid.q1_range,
            q2: grid.q2_range,
            nq: Some(grid.nq),
            u_samples: Some(grid.u_samples),
        }),
        spec: SystemSpec::Moser(MoserSpec {
            a1: args.a1,
            a2: args.a2,
            sign: args.sign,
            u0: args.u0,
            span: Some(args.span.unwrap_or(defaults.span)),
            steps: Some(args.steps.unwrap_or(defaults.transport.steps)),
        }),
    };
    let sys = file.build()?;
    let violations = regularity_violations(&sys, &grid, InvariantConfig::default().regularity_tol);
    if !violations.is_empty() {
        return Err(LoadError::Regularity { checked: grid.len(), violations }.into());
    }
    let text = match args.format.map_or(Format::Json, Into::into) {
        Format::Json => file.to_json() + "\n",
        Format::Csv => velocity_table_csv(&sys, &grid),
    };
    emit(out, args.out.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn selftest_cmd(args: SelftestArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, Failure> {
    let summary = selftest::run(SelftestOptions { quick: args.quick, inject_fault: args.inject_fault });
    for c in &summary.checks {
        let _ = writeln!(err, "{} {} {}: {} ({:.1}s)", if c.passed { "PASS" } else { "FAIL" }, c.id, c.name, c.detail, c.seconds);
    }
    emit(out, args.out.as_deref(), &summary.to_json())?;
    Ok(if summary.passed { EXIT_OK } else { EXIT_NUMERICAL })
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if code == EXIT_OK { out.write_all(text.as_bytes()) } else { err.write_all(text.as_bytes()) };
            return code;
        }
    };
    let result = match cli.command {
        Command::Invariants(a) => invariants_cmd(a, out),
        Command::Check(a) => check_cmd(a, out),
        Command::Extremals(a) => extremals_cmd(a, out),
        Command::Generate(a) => generate_cmd(a, out),
        Command::Selftest(a) => selftest_cmd(a, out, err),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}
