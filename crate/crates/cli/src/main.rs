use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use dicke_cli::{Command, Overrides, Source};

#[derive(Parser)]
#[command(name = "dicke", version, about = "Parametric two-photon exchange in the Dicke model")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Exact, perturbative and shifted dressed spectra
    Spectrum(Common),
    /// Two-photon rates of the driven subspace
    Rates(Common),
    /// Unitary evolution
    Evolve(Common),
    /// Lindblad evolution with the configured losses
    Lindblad(Common),
    /// Resonance sweep over the modulation frequency
    Sweep(Common),
    /// Fig. 1: N = 2 Fock state, analytic vs exact with and without CRT
    Figure1(Common),
    /// Fig. 2: N = 6 coherent state, g and g+Omega modulation
    Figure2(Common),
    /// Fig. 3: photon and atomic probabilities
    Figure3(Common),
    /// Fig. 4: ideal and realistic two-qubit circuit
    Figure4(Common),
}

#[derive(Args)]
struct Common {
    /// Scenario file (TOML)
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in preset, e.g. figure1 or figure4-realistic
    #[arg(long)]
    preset: Option<String>,
    /// Output directory
    #[arg(long, default_value = ".")]
    out: PathBuf,
    /// Modulation frequency in units of 2 |Delta_-|
    #[arg(long)]
    eta_factor: Option<f64>,
    /// Drop the counter-rotating terms
    #[arg(long)]
    no_crt: bool,
    /// Also write SVG plots
    #[arg(long)]
    svg: bool,
    /// Run length in the scenario's time unit
    #[arg(long)]
    t_span: Option<f64>,
    /// Number of output samples
    #[arg(long)]
    samples: Option<usize>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, c) = match cli.command {
        Cmd::Spectrum(c) => (Command::Spectrum, c),
        Cmd::Rates(c) => (Command::Rates, c),
        Cmd::Evolve(c) => (Command::Evolve, c),
        Cmd::Lindblad(c) => (Command::Lindblad, c),
        Cmd::Sweep(c) => (Command::Sweep, c),
        Cmd::Figure1(c) => (Command::Figure(1), c),
        Cmd::Figure2(c) => (Command::Figure(2), c),
        Cmd::Figure3(c) => (Command::Figure(3), c),
        Cmd::Figure4(c) => (Command::Figure(4), c),
    };
    let source = match (c.config, c.preset) {
        (Some(path), _) => Some(Source::Config(path)),
        (None, Some(name)) => Some(Source::Preset(name)),
        (None, None) => None,
    };
    let overrides = Overrides {
        eta_factor: c.eta_factor,
        no_crt: c.no_crt,
        t_span: c.t_span,
        samples: c.samples,
        svg: c.svg,
    };
    match dicke_cli::run(command, source.as_ref(), &c.out, &overrides) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error[{}]: {e}", dicke_cli::category_name(&e));
            ExitCode::from(dicke_cli::exit_code(&e) as u8)
        }
    }
}
