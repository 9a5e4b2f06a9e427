//! Scenario files.
//!
//! A scenario is a TOML document with one table per section:
//!
//! ```toml
//! [system]
//! n_qubits = 2
//! coupling = 0.0566
//! detuning = -1.018
//!
//! [[schedules]]
//! target = "coupling"
//! epsilon = 0.00566
//! eta_factor = 1.0678
//!
//! [initial_state]
//! kind = "dicke_fock"
//! k = 0
//! n = 5
//!
//! [run]
//! t_span = 2.0
//! time_unit = "rate"
//! ```

use std::path::Path;

use dicke_core::hilbert::BasisKind;
use dicke_core::model::{DissipationRates, ModulationTarget, QubitParams, RealisticParams, SystemParams, Units};
use dicke_core::presets::{Drive, InitialState, Preset, TimeSpan};
use dicke_core::scan::HamiltonianSpec;
use dicke_core::{Error, Result};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub system: SystemConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub schedules: Vec<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dissipation: Option<DissipationConfig>,
    pub initial_state: InitialStateConfig,
    #[serde(default)]
    pub run: RunConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transition: Option<TransitionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub outputs: OutputConfig,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    #[default]
    Collective,
    Distinguishable,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemConfig {
    pub n_qubits: usize,
    #[serde(default = "one")]
    pub omega: f64,
    /// Coupling of identical qubits; ignored when `qubits` is given.
    #[serde(default)]
    pub coupling: f64,
    /// `omega - Omega` of identical qubits; ignored when `qubits` is given.
    #[serde(default)]
    pub detuning: f64,
    #[serde(default = "yes")]
    pub with_crt: bool,
    #[serde(default)]
    pub basis: Basis,
    /// Per-qubit parameters; selects the distinguishable model.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub qubits: Vec<QubitConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cutoff: Option<usize>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QubitConfig {
    pub coupling: f64,
    pub detuning: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetConfig {
    Coupling,
    AtomFreq,
    CavityFreq,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub target: TargetConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit: Option<usize>,
    pub epsilon: f64,
    /// Modulation frequency; give this or `eta_factor`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    /// Modulation frequency in units of `2 |Delta_-|`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_factor: Option<f64>,
    #[serde(default)]
    pub phi: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct DissipationConfig {
    #[serde(default)]
    pub kappa: f64,
    #[serde(default)]
    pub gamma: Vec<f64>,
    #[serde(default)]
    pub gamma_phi: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialStateConfig {
    DickeFock {
        k: usize,
        n: usize,
    },
    Coherent {
        alpha_squared: f64,
        #[serde(default)]
        k: usize,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    /// `1 / omega0`.
    Omega,
    /// `pi / q`, `q` the closed-form rate of the transition.
    #[default]
    Rate,
    Microseconds,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default = "one")]
    pub t_span: f64,
    #[serde(default)]
    pub time_unit: TimeUnit,
    #[serde(default = "default_samples")]
    pub sample_count: usize,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            t_span: 1.0,
            time_unit: TimeUnit::Rate,
            sample_count: default_samples(),
            tol: default_tol(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransitionConfig {
    pub n: usize,
    #[serde(default)]
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub factor_min: f64,
    pub factor_max: f64,
    #[serde(default = "default_grid")]
    pub grid_points: usize,
    #[serde(default = "yes")]
    pub zoom: bool,
    /// Evolution time per point; defaults to 1.2 pi over the closed-form rate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    /// Follow the sweep by a golden-section search for the exact maximum.
    #[serde(default)]
    pub refine: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_observables")]
    pub observables: Vec<String>,
    #[serde(default)]
    pub svg: bool,
    #[serde(default = "default_frequency")]
    pub cavity_frequency_hz: f64,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            observables: default_observables(),
            svg: false,
            cavity_frequency_hz: default_frequency(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn yes() -> bool {
    true
}

fn default_samples() -> usize {
    401
}

fn default_tol() -> f64 {
    1e-10
}

fn default_grid() -> usize {
    21
}

fn default_observables() -> Vec<String> {
    vec!["n_ph".into(), "n_at".into()]
}

fn default_frequency() -> f64 {
    10e9
}

impl ScenarioConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(format_toml_error(text, &e)))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario configs always serialize")
    }

    /// Re-runs the physics guards of every referenced type.
    pub fn validate(&self) -> Result<()> {
        let preset = self.to_preset()?;
        preset.hamiltonian()?;
        preset.initial_state()?;
        if let Some(d) = &self.dissipation {
            self.dissipation_rates(d).validate()?;
        }
        let run = &self.run;
        if !(run.t_span > 0.0) {
            return Err(Error::Config("run.t_span must be positive".into()));
        }
        if run.sample_count < 2 {
            return Err(Error::Config("run.sample_count must be at least 2".into()));
        }
        if let Some(s) = &self.sweep {
            if !(s.factor_min > 0.0 && s.factor_max > s.factor_min) {
                return Err(Error::Config("sweep.factor_min < sweep.factor_max > 0 required".into()));
            }
        }
        for o in &self.outputs.observables {
            crate::commands::parse_observable(o)?;
        }
        Ok(())
    }

    fn dissipation_rates(&self, d: &DissipationConfig) -> DissipationRates {
        DissipationRates {
            kappa: d.kappa,
            gamma: d.gamma.clone(),
            gamma_phi: d.gamma_phi.clone(),
        }
    }

    pub fn units(&self) -> Units {
        Units {
            cavity_frequency_hz: self.outputs.cavity_frequency_hz,
        }
    }

    /// Transition used for rates, sweeps and the `rate` time unit.
    pub fn transition(&self) -> Option<(usize, usize)> {
        match (self.transition, self.initial_state) {
            (Some(t), _) => Some((t.n, t.k)),
            (None, InitialStateConfig::DickeFock { k, n }) => Some((k + n, k)),
            _ => None,
        }
    }

    /// The scenario in the form shared with the built-in presets.
    pub fn to_preset(&self) -> Result<Preset> {
        let s = &self.system;
        let (hamiltonian, basis) = if s.qubits.is_empty() {
            let p = SystemParams::from_detuning(s.omega, s.coupling, s.detuning, s.n_qubits, s.with_crt);
            p.validate()?;
            match s.basis {
                Basis::Collective => (HamiltonianSpec::Collective(p), BasisKind::Collective),
                Basis::Distinguishable => (
                    HamiltonianSpec::Realistic(RealisticParams::identical(&p)),
                    BasisKind::Distinguishable,
                ),
            }
        } else {
            if s.qubits.len() != s.n_qubits {
                return Err(Error::Config(format!(
                    "system.qubits lists {} qubits but n_qubits = {}",
                    s.qubits.len(),
                    s.n_qubits
                )));
            }
            if s.basis == Basis::Collective {
                return Err(Error::Config("per-qubit parameters need basis = \"distinguishable\"".into()));
            }
            let qubits = s
                .qubits
                .iter()
                .map(|q| QubitParams {
                    atom_freq: s.omega - q.detuning,
                    coupling: q.coupling,
                })
                .collect();
            (
                HamiltonianSpec::Realistic(RealisticParams {
                    omega: s.omega,
                    qubits,
                    with_crt: s.with_crt,
                }),
                BasisKind::Distinguishable,
            )
        };
        let reference = match &hamiltonian {
            HamiltonianSpec::Collective(p) => p.detuning(),
            HamiltonianSpec::Realistic(p) => p.detuning(0),
        };
        let mut factor: Option<f64> = None;
        let mut drives = Vec::new();
        for (i, sc) in self.schedules.iter().enumerate() {
            let f = match (sc.eta, sc.eta_factor) {
                (Some(eta), None) => eta / (2.0 * reference.abs()),
                (None, Some(f)) => f,
                _ => {
                    return Err(Error::Config(format!(
                        "schedules[{i}]: give exactly one of eta and eta_factor"
                    )))
                }
            };
            if let Some(prev) = factor {
                if (f - prev).abs() > 1e-12 * f.abs() {
                    return Err(Error::Config(
                        "all schedules must share one modulation frequency".into(),
                    ));
                }
            }
            factor = Some(f);
            let target = match sc.target {
                TargetConfig::Coupling => ModulationTarget::Coupling(sc.qubit),
                TargetConfig::AtomFreq => ModulationTarget::AtomFreq(sc.qubit),
                TargetConfig::CavityFreq => {
                    if sc.qubit.is_some() {
                        return Err(Error::Config(format!("schedules[{i}]: the cavity has no qubit index")));
                    }
                    ModulationTarget::CavityFreq
                }
            };
            drives.push(Drive {
                target,
                epsilon: sc.epsilon,
                phi: sc.phi,
            });
        }
        let initial = match self.initial_state {
            InitialStateConfig::DickeFock { k, n } => InitialState::DickeFock { k, n },
            InitialStateConfig::Coherent { alpha_squared, k } => InitialState::Coherent {
                alpha_sqr: alpha_squared,
                k,
            },
        };
        let run = &self.run;
        let t_span = match run.time_unit {
            TimeUnit::Rate => TimeSpan::RateUnits(run.t_span),
            TimeUnit::Microseconds => TimeSpan::Microseconds(run.t_span),
            TimeUnit::Omega => TimeSpan::Dimensionless(run.t_span),
        };
        Ok(Preset {
            name: "scenario",
            provenance: vec!["user scenario file".into()],
            hamiltonian,
            basis,
            drives,
            eta_factor: factor.unwrap_or(1.0),
            initial,
            n_max: s.cutoff.unwrap_or_else(|| initial.default_cutoff()),
            transition: self.transition().unwrap_or((0, 0)),
            dissipation: self.dissipation.as_ref().map(|d| self.dissipation_rates(d)),
            units: self.units(),
            t_span,
        })
    }
}

/// Parse errors with line and column.
fn format_toml_error(text: &str, e: &toml::de::Error) -> String {
    let msg = e.message().trim().to_string();
    match e.span() {
        Some(span) => {
            let before = &text[..span.start.min(text.len())];
            let line = before.matches('\n').count() + 1;
            let col = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
            format!("line {line}, column {col}: {msg}")
        }
        None => msg,
    }
}
