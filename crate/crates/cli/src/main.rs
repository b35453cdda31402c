use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gapcert::par::Execution;
use gapcert_cli::emit::{emit, emit_battery, to_json, Format};
use gapcert_cli::{run, verify_all, CheckId, Outcome, RunConfig};

#[derive(Parser)]
#[command(
    name = "gapcert",
    version,
    about = "Numerical verification of sharp eigenvalue and log-concavity bounds"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file (TOML, or a JSON report whose echoed config is re-run).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; without it the JSON report goes to stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Comma-separated subset of report-json, table-csv, field-csv.
    #[arg(long, global = true, value_delimiter = ',')]
    formats: Option<Vec<String>>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Overrides the pair-sampling seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Run the checks of one config.
    Run { config: Option<PathBuf> },
    /// Run the built-in benchmark battery.
    VerifyAll,
    /// List the available check ids.
    ListChecks,
}

fn fail(msg: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {msg}");
    ExitCode::from(2)
}

fn formats(cli: &Cli) -> Result<Vec<Format>, String> {
    match &cli.formats {
        None => Ok(Format::ALL.to_vec()),
        Some(list) => list.iter().map(|s| s.trim().parse()).collect(),
    }
}

fn set_threads(threads: Option<usize>) -> Result<(), String> {
    let Some(k) = threads else { return Ok(()) };
    if k == 0 {
        return Err("--threads must be positive".into());
    }
    #[cfg(feature = "parallel")]
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| e.to_string())?;
    Ok(())
}

fn finish(
    outcome: Outcome,
    json: String,
    written: std::io::Result<Vec<PathBuf>>,
    to_stdout: bool,
) -> ExitCode {
    if to_stdout {
        let mut out = std::io::stdout().lock();
        if out.write_all(json.as_bytes()).is_err() {
            return ExitCode::from(2);
        }
    }
    match written {
        Ok(paths) => paths
            .iter()
            .for_each(|p| log::info!("wrote {}", p.display())),
        Err(e) => return fail(e),
    }
    ExitCode::from(outcome.exit_code() as u8)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    if let Err(e) = set_threads(cli.threads) {
        return fail(e);
    }
    let formats = match formats(&cli) {
        Ok(f) => f,
        Err(e) => return fail(e),
    };
    match &cli.command {
        Command::ListChecks => {
            for c in CheckId::ALL {
                println!("{:<18}{}", c.as_str(), c.description());
            }
            ExitCode::SUCCESS
        }
        Command::Run { config } => {
            let Some(path) = config.as_ref().or(cli.config.as_ref()) else {
                return fail("`run` needs a config file");
            };
            let mut cfg = match RunConfig::load(path) {
                Ok(c) => c,
                Err(e) => return fail(e),
            };
            if let Some(seed) = cli.seed {
                cfg.seed = seed;
            }
            let report = run(&cfg, Execution::default());
            let written = cli
                .out
                .as_ref()
                .map_or(Ok(Vec::new()), |dir| emit(&report, &formats, dir));
            finish(report.outcome, to_json(&report), written, cli.out.is_none())
        }
        Command::VerifyAll => {
            let report = verify_all(cli.seed.unwrap_or(0), Execution::default());
            let written = cli
                .out
                .as_ref()
                .map_or(Ok(Vec::new()), |dir| emit_battery(&report, &formats, dir));
            finish(report.outcome, to_json(&report), written, cli.out.is_none())
        }
    }
}
