//! `smipcut`: generate, solve, verify and benchmark two-stage SMIP instances.
//!
//! Exit codes: 0 success, 1 internal failure, 2 usage or input error,
//! 3 solve stopped on a limit, 4 verification failure.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use log::info;
use serde::Serialize;

use smipcut::checks::{self, SuiteReport};
use smipcut::driver::{self, Aggregation, BenchSpec, CutFamily, DriverConfig};
use smipcut::instances::{self, Family, GeneratorSpec};
use smipcut::model::{fixtures, SmipInstance, SolveStatus};
use smipcut::strengthen::Strategy;
use smipcut::{milp, Error};

const EXIT_INTERNAL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_LIMIT: u8 = 3;
const EXIT_VERIFY: u8 = 4;

#[derive(Parser, Debug)]
#[command(name = "smipcut", version, about = "Two-stage SMIP solver with ReLU Lagrangian cuts")]
struct Cli {
    /// Log to stderr; repeat for more detail.
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated instance (or a named fixture) as JSON.
    Generate(GenerateArgs),
    /// Solve an instance file or `fixture:NAME`.
    Solve(SolveArgs),
    /// Run the oracle checks on a fixture or an instance file.
    Verify(VerifyArgs),
    /// Run a benchmark spec and write a CSV or JSON table.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct GenerateArgs {
    #[arg(long, value_parser = parse_family, required_unless_present = "fixture")]
    family: Option<Family>,
    /// SSLP locations / SMRCSP jobs / DCAP tasks.
    #[arg(long = "J")]
    j: Option<usize>,
    /// SSLP clients / DCAP resources.
    #[arg(long = "I")]
    i: Option<usize>,
    /// SMRCSP bid jobs.
    #[arg(long = "JB")]
    jb: Option<usize>,
    /// SMRCSP / DCAP periods.
    #[arg(long = "T")]
    t: Option<usize>,
    /// SMRCSP resource classes.
    #[arg(long = "K")]
    k: Option<usize>,
    /// Number of scenarios.
    #[arg(short = 'N', default_value_t = 1)]
    n: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write a named fixture instead of generating.
    #[arg(long, conflicts_with = "family")]
    fixture: Option<String>,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    /// Instance JSON file or `fixture:NAME`.
    instance: String,
    /// JSON file with driver options; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, value_parser = parse_from_str::<CutFamily>)]
    cuts: Option<CutFamily>,
    #[arg(long)]
    gap: Option<f64>,
    /// Seconds.
    #[arg(long)]
    time_limit: Option<f64>,
    #[arg(long)]
    iteration_limit: Option<usize>,
    #[arg(long, value_parser = parse_from_str::<Aggregation>)]
    agg: Option<Aggregation>,
    #[arg(long, value_parser = parse_from_str::<Strategy>)]
    strategy: Option<Strategy>,
    #[arg(long, value_parser = parse_switch)]
    objective_cuts: Option<bool>,
    #[arg(long, value_parser = parse_switch)]
    warm_start: Option<bool>,
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Record wall time in the report (makes it non-reproducible).
    #[arg(long)]
    timing: bool,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long, required_unless_present = "instance")]
    fixture: Option<String>,
    /// Instance JSON file for the generic checks.
    #[arg(conflicts_with = "fixture")]
    instance: Option<PathBuf>,
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct BenchArgs {
    spec: PathBuf,
    /// `.json` writes JSON, anything else CSV.
    #[arg(short = 'o', long = "out")]
    out: Option<PathBuf>,
}

fn parse_from_str<T: std::str::FromStr<Err = Error>>(s: &str) -> Result<T, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn parse_family(s: &str) -> Result<Family, String> {
    match s.to_ascii_lowercase().as_str() {
        "sslp" => Ok(Family::Sslp),
        "smrcsp" => Ok(Family::Smrcsp),
        "dcap" => Ok(Family::Dcap),
        _ => Err(format!("unknown family '{s}' (sslp, smrcsp, dcap)")),
    }
}

fn parse_switch(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" => Ok(true),
        "off" | "false" => Ok(false),
        _ => Err(format!("expected on or off, got '{s}'")),
    }
}

/// A user-facing failure with its exit code.
struct Failure {
    code: u8,
    kind: &'static str,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Failure {
            code: EXIT_USAGE,
            kind: "usage",
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let (code, kind) = match &e {
            Error::Io(_) => (EXIT_USAGE, "io"),
            Error::Json(_) => (EXIT_USAGE, "parse"),
            Error::InvalidConfig(_) => (EXIT_USAGE, "config"),
            Error::InvalidInstance(_) | Error::Dimension { .. } => (EXIT_USAGE, "instance"),
            Error::RecourseInfeasible(_) | Error::MasterInfeasible => (EXIT_INTERNAL, "infeasible"),
            _ => (EXIT_INTERNAL, "internal"),
        };
        Failure {
            code,
            kind,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    error: ErrorDetail<'a>,
}

#[derive(Serialize)]
struct ErrorDetail<'a> {
    kind: &'a str,
    message: &'a str,
}

fn read_file(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))
}

fn write_output(out: Option<&Path>, body: &str) -> Result<(), Failure> {
    match out {
        Some(p) => fs::write(p, body).map_err(|e| Failure::usage(format!("cannot write {}: {e}", p.display()))),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> Result<String, Failure> {
    let mut s = serde_json::to_string_pretty(v).map_err(|e| Failure::from(Error::Json(e)))?;
    s.push('\n');
    Ok(s)
}

fn load_instance(arg: &str) -> Result<SmipInstance, Failure> {
    if let Some(name) = arg.strip_prefix("fixture:") {
        return fixtures::by_name(name)
            .ok_or_else(|| Failure::usage(format!("unknown fixture '{name}' (expected one of {})", fixtures::NAMED.join(", "))));
    }
    let text = read_file(Path::new(arg))?;
    Ok(SmipInstance::from_json_str(&text)?)
}

fn need(v: Option<usize>, flag: &str, family: Family) -> Result<usize, Failure> {
    v.ok_or_else(|| Failure::usage(format!("{family} needs --{flag}")))
}

fn generate(a: GenerateArgs) -> Result<u8, Failure> {
    let inst = if let Some(name) = &a.fixture {
        fixtures::by_name(name)
            .ok_or_else(|| Failure::usage(format!("unknown fixture '{name}' (expected one of {})", fixtures::NAMED.join(", "))))?
    } else {
        let family = a.family.expect("clap requires --family without --fixture");
        let mut spec = match family {
            Family::Sslp => GeneratorSpec::sslp(need(a.j, "J", family)?, need(a.i, "I", family)?, a.n, a.seed),
            Family::Smrcsp => GeneratorSpec::smrcsp(need(a.j, "J", family)?, need(a.jb, "JB", family)?, need(a.t, "T", family)?, a.n, a.seed),
            Family::Dcap => GeneratorSpec::dcap(need(a.i, "I", family)?, need(a.j, "J", family)?, need(a.t, "T", family)?, a.n, a.seed),
        };
        spec.resources = a.k;
        info!("generating {}", spec.label());
        let inst = instances::generate(&spec)?;
        instances::check_assumptions(&inst)?;
        inst
    };
    let mut body = inst.to_json_string()?;
    body.push('\n');
    write_output(a.out.as_deref(), &body)?;
    Ok(0)
}

fn solve(a: SolveArgs) -> Result<u8, Failure> {
    let mut cfg = match &a.config {
        Some(p) => serde_json::from_str::<DriverConfig>(&read_file(p)?).map_err(|e| Failure::usage(format!("config {}: {e}", p.display())))?,
        None => DriverConfig::default(),
    };
    if let Some(v) = a.cuts {
        cfg.cuts = v;
    }
    if let Some(v) = a.gap {
        cfg.gap = v;
    }
    if a.time_limit.is_some() {
        cfg.time_limit = a.time_limit;
    }
    if let Some(v) = a.iteration_limit {
        cfg.iteration_limit = v;
    }
    if let Some(v) = a.agg {
        cfg.aggregation = v;
    }
    if let Some(v) = a.strategy {
        cfg.strategy = v;
    }
    if let Some(v) = a.objective_cuts {
        cfg.objective_cuts = v;
    }
    if let Some(v) = a.warm_start {
        cfg.warm_start = v;
    }
    if a.jobs.is_some() {
        cfg.jobs = a.jobs;
    }
    if let Some(v) = a.seed {
        cfg.seed = v;
    }
    cfg.timing |= a.timing;
    cfg.validate()?;
    let inst = load_instance(&a.instance)?;
    info!("solving {} with cuts {}", a.instance, cfg.cuts);
    let report = driver::solve_general(&inst, &cfg)?;
    info!("{:?}: lb {} ub {} after {} iterations", report.status, report.lower_bound, report.upper_bound, report.iterations);
    write_output(a.out.as_deref(), &to_json(&report)?)?;
    Ok(match report.status {
        SolveStatus::Optimal | SolveStatus::GapReached => 0,
        SolveStatus::IterationLimit | SolveStatus::TimeLimit | SolveStatus::Stalled => EXIT_LIMIT,
    })
}

fn verify(a: VerifyArgs) -> Result<u8, Failure> {
    let report = match (&a.fixture, &a.instance) {
        (Some(name), _) => SuiteReport::new(name, checks::fixture_suite(name)?),
        (None, Some(path)) => {
            let inst = load_instance(&path.to_string_lossy())?;
            SuiteReport::new(&path.display().to_string(), checks::instance_suite(&inst)?)
        }
        (None, None) => return Err(Failure::usage("verify needs --fixture NAME or an instance file")),
    };
    write_output(a.out.as_deref(), &to_json(&report)?)?;
    Ok(if report.passed { 0 } else { EXIT_VERIFY })
}

fn bench(a: BenchArgs) -> Result<u8, Failure> {
    let spec = BenchSpec::from_json_str(&read_file(&a.spec)?)?;
    let rows = driver::run_benchmark(&spec);
    let json = a.out.as_ref().is_some_and(|p| p.extension().is_some_and(|e| e == "json"));
    let body = if json {
        to_json(&rows)?
    } else {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &rows {
            w.serialize(r).map_err(|e| Failure {
                code: EXIT_INTERNAL,
                kind: "internal",
                message: format!("csv: {e}"),
            })?;
        }
        let bytes = w.into_inner().map_err(|e| Failure {
            code: EXIT_INTERNAL,
            kind: "internal",
            message: format!("csv: {e}"),
        })?;
        String::from_utf8(bytes).expect("csv output is utf-8")
    };
    write_output(a.out.as_deref(), &body)?;
    Ok(0)
}

fn run(cli: Cli) -> Result<u8, Failure> {
    milp::backend_from_env().map_err(Failure::usage)?;
    match cli.command {
        Command::Generate(a) => generate(a),
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Bench(a) => bench(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        2 => log::LevelFilter::Debug,
        _ => log::LevelFilter::Trace,
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            let body = ErrorBody {
                error: ErrorDetail {
                    kind: f.kind,
                    message: &f.message,
                },
            };
            eprintln!("{}", serde_json::to_string(&body).unwrap_or_else(|_| f.message.clone()));
            ExitCode::from(f.code)
        }
    }
}
