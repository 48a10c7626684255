//! `qmask`: run diffraction scenarios from JSON configs and write plot-ready
//! CSV files. Exit codes: 0 success, 2 invalid config, 3 numerical or I/O
//! failure (with a diagnostic file next to the outputs).

mod config;
mod errors;
mod run;
mod table;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use errors::CliError;

#[derive(Parser)]
#[command(
    name = "qmask",
    version,
    about = "Multimode quantum optics of beams diffracted through spatial masks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample mode profiles (field, intensity, phase) on a square grid
    RenderModes(RunArgs),
    /// Mode-coupling matrix of the mask over the signal basis
    Coeffs(RunArgs),
    /// Unitary completion of the coupling matrix over signal + absorption modes
    Dilate(RunArgs),
    /// Propagate classical mode amplitudes through the mask
    Classical(RunArgs),
    /// Minimum homodyne noise vs iris position for two squeezed inputs
    NoiseScan(RunArgs),
    /// Wigner function of one mode: input plus irises at -z_R, 0, +z_R
    WignerPanels(RunArgs),
    /// Squeeze/antisqueeze levels of every signal mode vs iris position
    SqueezeScan(RunArgs),
    /// Joint photon-number distribution of two modes behind the mask
    JointProb(RunArgs),
    /// Pair-creation probabilities P(1,1) and P(3,3) vs iris radius
    ProbVsRadius(RunArgs),
    /// Photon-number covariance of two modes vs iris radius, with peak refinement
    CovVsRadius(RunArgs),
    /// Minimized CH quantity vs iris position for a single injected photon
    ChScan(RunArgs),
    /// Two-photon coincidence (distinguishable vs not) vs iris radius
    HomScan(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's `output` field, else `.`
    #[arg(long)]
    out: Option<PathBuf>,
    /// Re-read every written CSV and check the values round-trip
    #[arg(long)]
    verify: bool,
}

impl Command {
    fn parts(&self) -> (&'static str, &RunArgs) {
        match self {
            Self::RenderModes(a) => ("render-modes", a),
            Self::Coeffs(a) => ("coeffs", a),
            Self::Dilate(a) => ("dilate", a),
            Self::Classical(a) => ("classical", a),
            Self::NoiseScan(a) => ("noise-scan", a),
            Self::WignerPanels(a) => ("wigner-panels", a),
            Self::SqueezeScan(a) => ("squeeze-scan", a),
            Self::JointProb(a) => ("joint-prob", a),
            Self::ProbVsRadius(a) => ("prob-vs-radius", a),
            Self::CovVsRadius(a) => ("cov-vs-radius", a),
            Self::ChScan(a) => ("ch-scan", a),
            Self::HomScan(a) => ("hom-scan", a),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = cli.command.parts();
    let resolved = run::RunArgsResolved {
        command,
        config_path: &args.config,
        out: args.out.as_deref(),
        verify: args.verify,
    };
    match run::run(&resolved) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("invalid config: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Numerical(msg)) => {
            eprintln!("numerical failure: {msg}");
            ExitCode::from(3)
        }
    }
}
