use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dselab::experiments::{run, ExperimentConfig, Mode, RunOptions, Table};
use dselab::Error;

/// Exact and sampled experiments on two-terminal source encryption with
/// correlated keys.
///
/// Exit status: 0 when every check passes, 1 when an inequality is violated,
/// 2 on configuration or input errors.
#[derive(Parser)]
#[command(name = "dselab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Constraint rows of the Slepian-Wolf and key regions and their intersection test.
    Region(Common),
    /// Error probability and leakage of seeded systems.
    Simulate(Common),
    /// Preimage-disjointness sums on seeded systems.
    #[command(name = "verify-lemma1")]
    VerifyLemma1(Common),
    /// Every inequality of the converse chain, with slacks.
    Converse(Common),
    /// Best systems along the sum-rate line.
    Sweep(Common),
    /// Error probability versus blocklength at fixed rates.
    #[command(name = "strong-converse")]
    StrongConverse(Common),
}

#[derive(Args)]
struct Common {
    /// JSON experiment config.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    /// CSV output path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
    /// Replaces the configured seeds by N, N+1, ... (same count).
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Worker threads; all cores when absent.
    #[arg(long, value_name = "N")]
    workers: Option<usize>,
    /// Largest number of states an exact computation may enumerate.
    #[arg(long, value_name = "STATES")]
    budget: Option<u64>,
}

impl Command {
    fn split(self) -> (Mode, Common) {
        match self {
            Command::Region(c) => (Mode::Region, c),
            Command::Simulate(c) => (Mode::Simulate, c),
            Command::VerifyLemma1(c) => (Mode::VerifyLemma1, c),
            Command::Converse(c) => (Mode::Converse, c),
            Command::Sweep(c) => (Mode::Sweep, c),
            Command::StrongConverse(c) => (Mode::StrongConverse, c),
        }
    }
}

fn attachment_path(out: &Path, name: &str) -> PathBuf {
    let stem = out
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    out.with_file_name(format!("{stem}.{name}.csv"))
}

fn execute(mode: Mode, args: &Common) -> Result<Table, Error> {
    let config = ExperimentConfig::from_path(&args.config)?;
    let opts = RunOptions {
        seed: args.seed,
        budget: args.budget,
    };
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(w) = args.workers {
        if w == 0 {
            return Err(Error::Config("--workers must be positive".into()));
        }
        pool = pool.num_threads(w);
    }
    let pool = pool
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    let table = pool.install(|| run(&config, mode, &opts))?;

    match &args.out {
        Some(path) => {
            table.write_csv(BufWriter::new(File::create(path)?))?;
            for (name, extra) in &table.attachments {
                extra.write_csv(BufWriter::new(File::create(attachment_path(path, name))?))?;
            }
        }
        None => table.write_csv(io::stdout().lock())?,
    }
    Ok(table)
}

fn main() -> ExitCode {
    let (mode, args) = Cli::parse().command.split();
    match execute(mode, &args) {
        Ok(table) => {
            let mut err = io::stderr().lock();
            for w in &table.warnings {
                let _ = writeln!(err, "warning: {w}");
            }
            for (k, v) in &table.summary {
                let _ = writeln!(err, "{k}={v}");
            }
            if table.violations > 0 {
                let _ = writeln!(err, "{mode}: {} check(s) failed", table.violations);
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
