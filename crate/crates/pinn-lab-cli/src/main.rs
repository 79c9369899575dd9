//! Command-line entry point: `pinn-lab <train|sweep|landscape|oracle>
//! <manifest.json>`.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "pinn-lab", about = "PINN training, sweeps, oracles and loss landscapes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Override the manifest's global seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and grids; 1 guarantees bitwise
    /// reproducibility of all artifacts.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Progress on standard error.
    #[arg(short, long, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run the manifest's training configuration(s) and write run traces.
    Train { manifest: PathBuf },
    /// Run a success-rate sweep and write per-run and aggregated tables.
    Sweep { manifest: PathBuf },
    /// Project the physics loss onto recorded checkpoint directions.
    Landscape { manifest: PathBuf },
    /// Write a reference solution.
    Oracle { manifest: PathBuf },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
        {
            eprintln!("pinn-lab: cannot configure {n} threads: {e}");
            return ExitCode::from(commands::EXIT_CONFIG as u8);
        }
    }

    let (path, run): (&PathBuf, fn(&manifest::ExperimentManifest, bool) -> anyhow::Result<i32>) =
        match &cli.command {
            Command::Train { manifest } => (manifest, commands::cmd_train),
            Command::Sweep { manifest } => (manifest, commands::cmd_sweep),
            Command::Landscape { manifest } => (manifest, commands::cmd_landscape),
            Command::Oracle { manifest } => (manifest, commands::cmd_oracle),
        };

    let manifest = match commands::load_manifest(path, cli.seed) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("pinn-lab: {e:#}");
            return ExitCode::from(commands::EXIT_CONFIG as u8);
        }
    };
    match run(&manifest, cli.verbose) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("pinn-lab: {e:#}");
            ExitCode::from(commands::EXIT_CONFIG as u8)
        }
    }
}
