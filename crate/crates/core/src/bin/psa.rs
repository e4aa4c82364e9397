use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use psa_core::harness::{self, ExperimentKind};

#[derive(Parser)]
#[command(name = "psa", version, about = "Kinetic scheme and exact Riemann solver for the PSA adsorption system")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// March the kinetic scheme and write column diagnostics.
    Simulate(RunArgs),
    /// Write the exact Riemann solution at the probe time.
    Exact(RunArgs),
    /// Compare scheme and exact solution at the probe time.
    Compare(RunArgs),
    /// Convergence table over the configured cell counts.
    Sweep(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// TOML run description.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output.dir`.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let level = match harness::log_level(std::env::var("PSA_LOG").ok().as_deref()) {
        Ok(level) => level,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(1);
        }
    };
    env_logger::Builder::new().filter_level(level).format_timestamp(None).init();

    let (kind, args) = match cli.command {
        Command::Simulate(a) => (ExperimentKind::Simulate, a),
        Command::Exact(a) => (ExperimentKind::Exact, a),
        Command::Compare(a) => (ExperimentKind::Compare, a),
        Command::Sweep(a) => (ExperimentKind::Sweep, a),
    };
    let result = harness::load_config(&args.config).and_then(|cfg| {
        if let Some(k) = cfg.kind.filter(|&k| k != kind) {
            log::info!("config declares kind {k:?}; running {kind:?} as requested");
        }
        let out = args.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
        harness::run(kind, &cfg, &out)
    });
    match result {
        Ok(written) => {
            for f in written.files {
                println!("{}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
