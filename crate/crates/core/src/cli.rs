//! Command-line front end.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::config::{parse_config_overrides, ConfigOverrides, CONFIG_ENV_VAR};
use crate::engine::{run_analysis, AnalysisOptions, AnalysisRequest, Dataset};
use crate::error::{Error, Result};
use crate::io::{load_plan_file, PlanFile, ReportKind};

/// Prefix on every error line written to standard error.
pub const ERROR_PREFIX: &str = "STRATEGIZER_ERROR:";

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "strategizer", version, about = "Utility-based plan ranking, go/no-go and preference simulation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rank plans by expected utility.
    Rank(AnalysisArgs),
    /// Compare a plan with its status-quo twin.
    Gonogo(AnalysisArgs),
    /// Sweep scenario probabilities and apply every decision criterion.
    Sweep(AnalysisArgs),
    /// Simulate household preference between two plans.
    Montecarlo(AnalysisArgs),
    /// Cost versus risk-mitigation tolerance for infrastructure.
    Infra(AnalysisArgs),
    /// Required survey sample sizes, with a coverage check when data is given.
    Samplesize(AnalysisArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct AnalysisArgs {
    /// Survey responses CSV.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Plan specification JSON.
    #[arg(long)]
    plans: Option<PathBuf>,
    /// Config overrides JSON.
    #[arg(long, env = CONFIG_ENV_VAR)]
    config: Option<PathBuf>,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    draws: Option<u64>,
    /// Sweep increment.
    #[arg(long)]
    increment: Option<f64>,
    /// Cost scaling factor.
    #[arg(long)]
    wc: Option<f64>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Plan for go/no-go, or plan A for Monte Carlo.
    #[arg(long)]
    plan: Option<String>,
    /// Plan B for Monte Carlo.
    #[arg(long)]
    plan_b: Option<String>,
    /// Simulate against plan A's status-quo twin.
    #[arg(long)]
    status_quo: bool,
    /// Worker threads for simulation.
    #[arg(long)]
    threads: Option<usize>,
}

#[derive(Debug, Args)]
struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    bind: String,
    #[arg(long, env = CONFIG_ENV_VAR)]
    config: Option<PathBuf>,
}

pub fn load_config_file(path: Option<&PathBuf>) -> Result<ConfigOverrides> {
    match path {
        None => Ok(ConfigOverrides::default()),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Io(format!("{}: {e}", p.display())))?;
            parse_config_overrides(&text)
        }
    }
}

fn run_command(kind: ReportKind, args: &AnalysisArgs) -> Result<String> {
    let needs_inputs = kind != ReportKind::SampleSize;
    let dataset = match &args.data {
        Some(p) => Some(Dataset::load(p)?),
        None if needs_inputs => return Err(Error::validation("missing --data")),
        None => None,
    };
    let plans = match &args.plans {
        Some(p) => load_plan_file(p)?,
        None if needs_inputs => return Err(Error::validation("missing --plans")),
        None => PlanFile::default(),
    };
    let request = AnalysisRequest {
        plans,
        base: load_config_file(args.config.as_ref())?,
        overrides: ConfigOverrides {
            seed: args.seed,
            sweep_increment: args.increment,
            w_c: args.wc,
            ..Default::default()
        },
        options: AnalysisOptions {
            plan_id: args.plan.clone(),
            plan_b: args.plan_b.clone(),
            against_status_quo: args.status_quo,
            draws: args.draws,
            threads: args.threads,
        },
    };
    let report = run_analysis(kind, dataset.as_ref(), &request)?;
    match args.format {
        Format::Json => report.to_json().map(|mut s| {
            s.push('\n');
            s
        }),
        Format::Text => Ok(report.human_log),
    }
}

fn emit(text: &str, out: Option<&PathBuf>, stdout: &mut dyn Write) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => stdout.write_all(text.as_bytes()).map_err(Error::from),
    }
}

fn report_error(e: &Error, stderr: &mut dyn Write) -> i32 {
    let _ = writeln!(stderr, "{ERROR_PREFIX} {}: {e}", e.code());
    if e.is_validation() {
        EXIT_VALIDATION
    } else {
        EXIT_INTERNAL
    }
}

/// Parses `args` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = write!(stdout, "{}", e.render());
                return EXIT_OK;
            }
            if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand {
                let _ = writeln!(stderr, "{ERROR_PREFIX} usage_error: missing subcommand");
                let _ = write!(stderr, "{}", e.render());
                return EXIT_VALIDATION;
            }
            let msg = e.render().to_string();
            let first = msg.lines().next().unwrap_or("invalid arguments");
            let _ = writeln!(stderr, "{ERROR_PREFIX} usage_error: {}", first.trim_start_matches("error: "));
            return EXIT_VALIDATION;
        }
    };
    let (kind, args) = match &cli.command {
        Command::Rank(a) => (ReportKind::Rank, a),
        Command::Gonogo(a) => (ReportKind::GoNoGo, a),
        Command::Sweep(a) => (ReportKind::Sweep, a),
        Command::Montecarlo(a) => (ReportKind::MonteCarlo, a),
        Command::Infra(a) => (ReportKind::Infra, a),
        Command::Samplesize(a) => (ReportKind::SampleSize, a),
        Command::Serve(s) => {
            return match serve(s) {
                Ok(()) => EXIT_OK,
                Err(e) => report_error(&e, stderr),
            }
        }
    };
    match run_command(kind, args).and_then(|text| emit(&text, args.out.as_ref(), stdout)) {
        Ok(()) => EXIT_OK,
        Err(e) => report_error(&e, stderr),
    }
}

fn serve(args: &ServeArgs) -> Result<()> {
    let base = load_config_file(args.config.as_ref())?;
    crate::config::AnalysisConfig::resolve(&[&base])?;
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Error::Internal(format!("runtime: {e}")))?;
    runtime.block_on(crate::api::serve(&args.bind, base))
}
