use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use adm_core::io::config::{parse_config, Experiment};
use adm_core::io::run::{report_error, run};
use adm_core::AdmError;

#[derive(Parser)]
#[command(name = "adm", version, about = "Mean Boussinesq deconvolution simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Paths {
    /// Key = value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate one trajectory and record diagnostics.
    Simulate(Paths),
    /// Report the spectral gap and cone constants.
    Gap(Paths),
    /// Run the squeezing ensemble.
    Squeeze(Paths),
    /// Run the operator verification suite.
    VerifyOps(Paths),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (experiment, paths) = match cli.command {
        Command::Simulate(p) => (Experiment::Simulate, p),
        Command::Gap(p) => (Experiment::Gap, p),
        Command::Squeeze(p) => (Experiment::Squeeze, p),
        Command::VerifyOps(p) => (Experiment::VerifyOps, p),
    };
    let result = std::fs::read_to_string(&paths.config)
        .map_err(AdmError::from)
        .and_then(|text| parse_config(&text))
        .and_then(|cfg| run(&cfg, Some(experiment), &paths.out));
    match result {
        Ok(outcome) => {
            for a in &outcome.artifacts {
                println!("{}", a.display());
            }
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => ExitCode::from(report_error(&e, Some(&paths.out)) as u8),
    }
}
