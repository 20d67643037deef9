use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use restool_cli::{Overrides, Pipeline, PipelineConfig, Resolved, Stage};
use restool_core::{Error, ErrorKind};
use serde::Serialize;

/// Composite resilience index, ellipse, density and geodetector pipeline.
#[derive(Parser)]
#[command(name = "restool", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and gap-fill the panel, check every referenced input.
    Validate(RunArgs),
    /// Normalize, weight and aggregate scores.
    Index(RunArgs),
    /// Natural-breaks levels per year.
    Classify(RunArgs),
    /// Weighted centre and standard-deviational ellipse per year.
    Ellipse(RunArgs),
    /// Joint and conditional score densities.
    Density(RunArgs),
    /// Factor, interaction, risk and ecological detectors.
    Detect(RunArgs),
    /// Every stage in order.
    All(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Pipeline config (JSON).
    #[arg(long)]
    config: PathBuf,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Master seed for the permutation tests.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Replaces normalization.base_year (fixed_base only).
    #[arg(long)]
    base_year: Option<i32>,
    /// Replaces density.delta.
    #[arg(long)]
    delta: Option<usize>,
    /// Replaces detector.permutations.
    #[arg(long)]
    permutations: Option<usize>,
}

#[derive(Serialize)]
struct ErrorReport<'a> {
    error: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    stage: Option<&'a str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    field: Option<&'a str>,
    message: String,
    exit_code: u8,
}

fn exit_code(kind: ErrorKind) -> u8 {
    match kind {
        ErrorKind::Config => 2,
        ErrorKind::Data => 3,
        ErrorKind::Numerical => 4,
    }
}

fn report(err: &Error, stage: Option<Stage>) -> ExitCode {
    let kind = err.kind();
    let code = exit_code(kind);
    let field = match err {
        Error::Config { field, .. } => Some(field.as_str()),
        _ => None,
    };
    let rep = ErrorReport {
        error: match kind {
            ErrorKind::Config => "config",
            ErrorKind::Data => "data",
            ErrorKind::Numerical => "numerical",
        },
        stage: stage.map(Stage::name),
        field,
        message: err.to_string(),
        exit_code: code,
    };
    eprintln!("{}", serde_json::to_string(&rep).expect("report serializes"));
    ExitCode::from(code)
}

fn setup(args: &RunArgs) -> Result<Pipeline, Error> {
    if let Some(n) = args.threads {
        if n == 0 {
            return Err(Error::config("--threads", "must be at least 1"));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::config("--threads", e.to_string()))?;
    }
    let mut config = PipelineConfig::load(&args.config)?;
    config.apply(&Overrides {
        seed: args.seed,
        output_dir: args.output_dir.clone(),
        base_year: args.base_year,
        delta: args.delta,
        permutations: args.permutations,
    })?;
    let base = args.config.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    Ok(Pipeline::new(Resolved::new(config, base)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mut args, stages): (RunArgs, Vec<Stage>) = match cli.command {
        Command::Validate(a) => (a, vec![Stage::Validate]),
        Command::Index(a) => (a, vec![Stage::Index]),
        Command::Classify(a) => (a, vec![Stage::Classify]),
        Command::Ellipse(a) => (a, vec![Stage::Ellipse]),
        Command::Density(a) => (a, vec![Stage::Density]),
        Command::Detect(a) => (a, vec![Stage::Detect]),
        Command::All(a) => (a, Stage::ALL.to_vec()),
    };
    // --output-dir on the command line is taken as given, not relative to
    // the config file.
    args.output_dir = args.output_dir.map(|p| std::path::absolute(&p).unwrap_or(p));
    let pipeline = match setup(&args) {
        Ok(p) => p,
        Err(e) => return report(&e, None),
    };
    match pipeline.run(&stages) {
        Ok(m) => {
            for s in &stages {
                let rec = &m.stages[s.name()];
                eprintln!("{:<9} {:>4} files  {:.0} ms", s.name(), rec.outputs.len(), rec.wall_clock_ms);
            }
            eprintln!("outputs in {}", pipeline.output_dir().display());
            ExitCode::SUCCESS
        }
        Err(e) => report(&e.source, Some(e.stage)),
    }
}
