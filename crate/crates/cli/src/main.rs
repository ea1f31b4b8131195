use std::path::PathBuf;
use std::process::ExitCode;

use cheeger_cli::{plan, run_batch, BatchOptions, Failure, Stage, OUT_ENV};
use clap::{Parser, Subcommand};

/// Solve and verify discrete weighted Cheeger problems from scenario files.
#[derive(Debug, Parser)]
#[command(name = "cheeger-lab", version)]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Scenario file; repeat to run a batch concurrently.
    #[arg(long, global = true)]
    scenario: Vec<PathBuf>,

    /// Output directory (overrides the CHEEGER_OUT variable and `[output] dir`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for sampled checks (overrides `[verify] seed`).
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Stage to run when no subcommand is given.
    #[arg(long, global = true, value_enum)]
    stage: Option<Stage>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Minimize the ratio and write the minimizer and trace.
    Solve,
    /// Solve, then run the inequality checks on the minimizer.
    Verify,
    /// Build the Cantor domain and its gap report.
    Cantor,
    /// Compare the cut solver with exhaustive enumeration.
    Oracle,
    /// Every stage the scenario has sections for.
    All,
    /// Run the stage named by `--stage` (default: all).
    Run,
}

impl Command {
    fn stage(&self) -> Option<Stage> {
        match self {
            Command::Solve => Some(Stage::Solve),
            Command::Verify => Some(Stage::Verify),
            Command::Cantor => Some(Stage::Cantor),
            Command::Oracle => Some(Stage::Oracle),
            Command::All => Some(Stage::All),
            Command::Run => None,
        }
    }
}

fn stage_of(cli: &Cli) -> Result<Stage, Failure> {
    match (cli.command.as_ref().and_then(Command::stage), cli.stage) {
        (Some(a), Some(b)) if a != b => Err(Failure::Config(format!("subcommand {a} conflicts with --stage {b}"))),
        (Some(a), _) => Ok(a),
        (None, b) => Ok(b.unwrap_or_default()),
    }
}

/// Setup errors come back as `Err`; scenario failures are printed here and
/// the first one is returned for the exit code.
fn run(cli: &Cli) -> Result<Option<Failure>, Failure> {
    let stage = stage_of(cli)?;
    let opts = BatchOptions {
        out: cli.out.clone(),
        env_out: std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
        seed: cli.seed,
        stage,
    };
    let jobs = plan(&cli.scenario, &opts)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure::Config(format!("--threads: {e}")))?;
    let results = pool.install(|| run_batch(&jobs, stage));
    let mut first = None;
    for (job, r) in jobs.iter().zip(results) {
        match r {
            Ok(()) => log::info!("{}: ok", job.path.display()),
            Err(e) => {
                eprintln!("{}: {e}", job.path.display());
                first.get_or_insert(e);
            }
        }
    }
    Ok(first)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(None) => ExitCode::SUCCESS,
        Ok(Some(e)) => ExitCode::from(e.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
