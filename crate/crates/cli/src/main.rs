use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rpurity::commands::{
    dephase_cmd, limits, purity, rdm, reconstruct, simulate, DephaseArgs, LimitsArgs, PurityArgs,
    RdmArgs, ReconstructArgs, SimulateArgs,
};
use rpurity::CliResult;

/// Reduced purities of many-electron density matrices and SSH decoherence experiments.
#[derive(Parser, Debug)]
#[command(name = "rpurity", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Purity reports for a density-matrix file.
    Purity(PurityArgs),
    /// Reduced density matrix of a density-matrix file, as JSON or dense CSV.
    Rdm(RdmArgs),
    /// Remove selected coherences from a density-matrix file.
    Dephase(DephaseArgs),
    /// Limiting purity values for given populations.
    Limits(LimitsArgs),
    /// Discard coherence models that cannot explain a time series.
    Reconstruct(ReconstructArgs),
    /// Run an Ehrenfest ensemble experiment.
    Simulate(Box<SimulateArgs>),
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Purity(a) => purity(&a).map(drop).map_err(|e| e.context("purity")),
        Command::Rdm(a) => rdm(&a).map_err(|e| e.context("rdm")),
        Command::Dephase(a) => dephase_cmd(&a).map(drop).map_err(|e| e.context("dephase")),
        Command::Limits(a) => limits(&a).map(drop).map_err(|e| e.context("limits")),
        Command::Reconstruct(a) => reconstruct(&a)
            .map(drop)
            .map_err(|e| e.context("reconstruct")),
        Command::Simulate(a) => simulate(&a).map(drop).map_err(|e| e.context("simulate")),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
