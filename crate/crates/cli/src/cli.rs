use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "nifb", version, about = "Negative-imaginary analysis with free body dynamics")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Relative threshold below which a Laurent coefficient counts as zero.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Emit a JSON report.
    #[arg(long, global = true, conflicts_with = "csv")]
    pub json: bool,
    /// Emit a CSV table.
    #[arg(long, global = true)]
    pub csv: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// NI (or SNI) classification of one model.
    Classify {
        model: PathBuf,
        /// Test the strict (SNI) property instead.
        #[arg(long)]
        sni: bool,
    },
    /// Laurent coefficients at the origin by realization and by contour limit.
    Laurent { model: PathBuf },
    /// Stability verdict for a plant/controller pair.
    Stability { plant: PathBuf, controller: PathBuf },
    /// Compare verdicts against closed-loop eigenvalues on random pairs.
    Verify {
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
    /// Slewing-beam model.
    Beam {
        /// Beam parameter JSON; defaults to the robotic arm.
        #[arg(long, global = true)]
        params: Option<PathBuf>,
        #[command(subcommand)]
        command: BeamCommand,
    },
    /// Closed-loop step response.
    Simulate {
        plant: PathBuf,
        controller: PathBuf,
        #[arg(long, default_value_t = 10.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1e-3)]
        dt: f64,
        #[arg(long, value_enum, default_value_t = WiringArg::Reference)]
        wiring: WiringArg,
        #[arg(long, default_value_t = 1.0)]
        amplitude: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum BeamCommand {
    /// Modal roots and residues.
    Modes {
        #[arg(long, default_value_t = 5)]
        count: usize,
    },
    /// Truncated modal model.
    Approx {
        #[arg(long, default_value_t = 1)]
        modes: usize,
    },
    /// Residue scan table (omega, value).
    Scan {
        #[arg(long, default_value_t = 1.0)]
        gamma: f64,
        #[arg(long, default_value_t = 0.1)]
        w_min: f64,
        #[arg(long, default_value_t = 260.0)]
        w_max: f64,
        #[arg(long, default_value_t = 2000)]
        points: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum WiringArg {
    /// Controller sees `y - r e1`.
    Reference,
    /// Step added to the first plant input.
    InputDisturbance,
}
