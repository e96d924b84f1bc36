use clap::{Parser, Subcommand};

use spinbus::protocols::ExperimentKind;
use spinbus_cli::{execute, key_help};

#[derive(Parser)]
#[command(
    name = "spinbus",
    version,
    about = "Spin-chain quantum bus experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Settings {
    /// `--config FILE` and `--key value` pairs; see `spinbus keys`.
    #[arg(
        trailing_var_arg = true,
        allow_hyphen_values = true,
        value_name = "SETTINGS"
    )]
    settings: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Single-particle modes of the chain.
    Modes(Settings),
    /// Qubit state transfer fidelity over time.
    Transfer(Settings),
    /// Ancilla to far-register entanglement over time.
    Entangle(Settings),
    /// Classical threshold: the rate at which no entanglement arrives.
    Threshold(Settings),
    /// Coherence time needed to reach a transfer fidelity target.
    FtThreshold(Settings),
    /// Maximum entanglement over a coupling by coherence-time grid.
    Surface(Settings),
    /// Spacing-disorder Monte Carlo.
    Disorder(Settings),
    /// First-maximum time and entanglement for long chains.
    LongChain(Settings),
    /// Rotating-wave approximation check on two driven spins.
    RwaCheck(Settings),
    /// Grid of runs of one experiment (`experiment = ...`); takes
    /// `--workers K`, `--restart` and `--limit K`.
    Sweep(Settings),
    /// List configuration keys.
    Keys,
}

fn main() {
    let cli = Cli::parse();
    let (kind, settings) = match cli.command {
        Command::Modes(s) => (Some(ExperimentKind::Modes), s),
        Command::Transfer(s) => (Some(ExperimentKind::Transfer), s),
        Command::Entangle(s) => (Some(ExperimentKind::Entangle), s),
        Command::Threshold(s) => (Some(ExperimentKind::Threshold), s),
        Command::FtThreshold(s) => (Some(ExperimentKind::FtThreshold), s),
        Command::Surface(s) => (Some(ExperimentKind::Surface), s),
        Command::Disorder(s) => (Some(ExperimentKind::Disorder), s),
        Command::LongChain(s) => (Some(ExperimentKind::LongChain), s),
        Command::RwaCheck(s) => (Some(ExperimentKind::RwaCheck), s),
        Command::Sweep(s) => (None, s),
        Command::Keys => {
            print!("{}", key_help());
            return;
        }
    };
    let mut log = |m: &str| eprintln!("{m}");
    if let Err(e) = execute(kind, &settings.settings, &mut log) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
