use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use kamforge_cli::{execute, parse_config, Command, Exit};

/// Runs the KAM engine, the measure estimator, the lattice integrator, the
/// counterexample or the self-test from a TOML configuration.
#[derive(Parser, Debug)]
#[command(name = "kamforge", version)]
struct Cli {
    /// run, measure, lattice, counterexample or selftest; overrides the config.
    command: Option<String>,
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Random seed; overrides the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Maximum number of KAM steps; overrides `nu_max`.
    #[arg(long)]
    max_steps: Option<usize>,
    /// Do not print the summary.
    #[arg(long)]
    quiet: bool,
}

fn exit(e: Exit) -> ExitCode {
    ExitCode::from(e.code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { exit(Exit::Config) } else { exit(Exit::Ok) };
        }
    };
    if let Some(n) = std::env::var("KAMFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
    let mut cfg = match parse_config(&cli.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("kamforge: {e}");
            return exit(Exit::Config);
        }
    };
    if let Some(name) = &cli.command {
        match Command::parse(name) {
            Some(c) => cfg.command = c,
            None => {
                eprintln!("kamforge: unknown command `{name}`");
                return exit(Exit::Config);
            }
        }
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(n) = cli.max_steps {
        cfg.nu_max = n;
    }
    let outcome = execute(&cfg);
    if outcome.exit == Exit::Ok {
        if !cli.quiet {
            print!("{}", outcome.summary);
        }
    } else {
        eprint!("{}", outcome.summary);
        if !outcome.summary.ends_with('\n') {
            eprintln!();
        }
    }
    exit(outcome.exit)
}
