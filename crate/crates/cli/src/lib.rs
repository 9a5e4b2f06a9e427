//! Command-line front end: scenario files, subcommands and figure presets.

pub mod commands;
pub mod config;
pub mod figures;
pub mod output;

use std::path::{Path, PathBuf};

use dicke_core::{Error, ErrorCategory, Result};

pub use commands::{Overrides, Summary};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    Spectrum,
    Rates,
    Evolve,
    Lindblad,
    Sweep,
    Figure(u8),
}

/// Where a non-figure command takes its scenario from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Source {
    Config(PathBuf),
    Preset(String),
}

pub fn run(command: Command, source: Option<&Source>, out: &Path, overrides: &Overrides) -> Result<Summary> {
    std::fs::create_dir_all(out).map_err(|e| Error::Config(format!("cannot create {}: {e}", out.display())))?;
    if let Command::Figure(n) = command {
        if source.is_some() {
            return Err(Error::Config("figure commands run built-in presets; drop --config/--preset".into()));
        }
        return figures::run(n, overrides, out);
    }
    let job = match source {
        Some(Source::Config(path)) => {
            let config = config::ScenarioConfig::load(path)?;
            commands::Job::from_config(&config, path)?
        }
        Some(Source::Preset(name)) => commands::Job::from_preset(name)?,
        None => return Err(Error::Config("give --config <file> or --preset <name>".into())),
    }
    .with_overrides(overrides)?;
    match command {
        Command::Spectrum => commands::spectrum(&job, out),
        Command::Rates => commands::rates(&job, out),
        Command::Evolve => commands::evolve(&job, out),
        Command::Lindblad => commands::lindblad_command(&job, out),
        Command::Sweep => commands::sweep(&job, out),
        Command::Figure(_) => unreachable!(),
    }
}

pub fn exit_code(error: &Error) -> i32 {
    match error.category() {
        ErrorCategory::Config => 2,
        ErrorCategory::PhysicsGuard => 3,
        ErrorCategory::Numeric => 4,
        ErrorCategory::NoResonance => 5,
    }
}

pub fn category_name(error: &Error) -> &'static str {
    match error.category() {
        ErrorCategory::Config => "config",
        ErrorCategory::PhysicsGuard => "physics-guard",
        ErrorCategory::Numeric => "numeric",
        ErrorCategory::NoResonance => "no-resonance",
    }
}
