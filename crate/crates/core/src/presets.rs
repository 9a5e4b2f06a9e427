//! Parameter sets of the reference scenarios.
//!
//! Frequencies are in units of the bare cavity frequency. The modulation
//! frequency is stored as a factor of `2 |Delta_-|`, with `Delta_-` taken from
//! the first qubit.

use num_complex::Complex64 as C64;

use crate::dispersive::{eta_resonant, two_photon_rate_closed_form};
use crate::error::{Error, Result};
use crate::hilbert::{coherent_state, default_cutoff, dicke_fock_state, BasisKind, SpaceSpec, StateVector};
use crate::model::{
    DissipationRates, ModulatedHamiltonian, ModulationSchedule, ModulationTarget, QubitParams, RealisticParams,
    SystemParams, Units,
};
use crate::scan::{default_horizon, HamiltonianSpec, Scenario, SweepOptions, TransferMetric};

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum InitialState {
    /// `|k> (x) |n>`.
    DickeFock { k: usize, n: usize },
    /// `|k> (x) |alpha>` with real `alpha = sqrt(alpha_sqr)`.
    Coherent { alpha_sqr: f64, k: usize },
}

impl InitialState {
    pub fn build(&self, space: &SpaceSpec) -> Result<StateVector> {
        match *self {
            InitialState::DickeFock { k, n } => dicke_fock_state(space, k, n),
            InitialState::Coherent { alpha_sqr, k } => coherent_state(space, C64::new(alpha_sqr.sqrt(), 0.0), k),
        }
    }

    pub fn default_cutoff(&self) -> usize {
        match *self {
            InitialState::DickeFock { k: _, n } => n + 7,
            InitialState::Coherent { alpha_sqr, .. } => default_cutoff(alpha_sqr),
        }
    }
}

/// Modulated parameter of a preset, expanded per qubit for distinguishable
/// models.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    pub target: ModulationTarget,
    pub epsilon: f64,
    pub phi: f64,
}

#[derive(Clone, Debug)]
pub struct Preset {
    pub name: &'static str,
    /// Parameter provenance, one line each.
    pub provenance: Vec<String>,
    pub hamiltonian: HamiltonianSpec,
    pub basis: BasisKind,
    pub drives: Vec<Drive>,
    pub eta_factor: f64,
    pub initial: InitialState,
    pub n_max: usize,
    /// Photon-plus-atom excitation number `n` and lower Dicke index `k` of
    /// the driven transition `|k, n-k> <-> |k+2, n-k-2>`.
    pub transition: (usize, usize),
    pub dissipation: Option<DissipationRates>,
    pub units: Units,
    pub t_span: TimeSpan,
}

/// Length of a preset run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TimeSpan {
    /// In units of `pi / q`, `q` the closed-form rate of the coupling drive.
    RateUnits(f64),
    Microseconds(f64),
    /// In units of `1 / omega0`.
    Dimensionless(f64),
}

impl Preset {
    pub fn n_qubits(&self) -> usize {
        match &self.hamiltonian {
            HamiltonianSpec::Collective(p) => p.n_qubits,
            HamiltonianSpec::Realistic(p) => p.qubits.len(),
        }
    }

    pub fn reference_detuning(&self) -> f64 {
        match &self.hamiltonian {
            HamiltonianSpec::Collective(p) => p.detuning(),
            HamiltonianSpec::Realistic(p) => p.detuning(0),
        }
    }

    pub fn with_crt(&self) -> bool {
        match &self.hamiltonian {
            HamiltonianSpec::Collective(p) => p.with_crt,
            HamiltonianSpec::Realistic(p) => p.with_crt,
        }
    }

    pub fn set_crt(&mut self, with_crt: bool) {
        match &mut self.hamiltonian {
            HamiltonianSpec::Collective(p) => p.with_crt = with_crt,
            HamiltonianSpec::Realistic(p) => p.with_crt = with_crt,
        }
    }

    pub fn eta(&self) -> f64 {
        self.eta_factor * 2.0 * self.reference_detuning().abs()
    }

    pub fn space(&self) -> Result<SpaceSpec> {
        SpaceSpec::new(self.n_qubits(), self.n_max, self.basis)
    }

    /// Schedules at modulation frequency `eta`.
    pub fn schedules_at(&self, eta: f64) -> Result<Vec<ModulationSchedule>> {
        let mut out = Vec::new();
        for d in &self.drives {
            match (&self.hamiltonian, d.target) {
                (HamiltonianSpec::Realistic(p), ModulationTarget::Coupling(None)) => {
                    // per-qubit depth proportional to the qubit's own coupling
                    let scale = d.epsilon / p.qubits[0].coupling;
                    for (l, q) in p.qubits.iter().enumerate() {
                        out.push(ModulationSchedule::new(
                            ModulationTarget::Coupling(Some(l)),
                            scale * q.coupling,
                            eta,
                            d.phi,
                        )?);
                    }
                }
                _ => out.push(ModulationSchedule::new(d.target, d.epsilon, eta, d.phi)?),
            }
        }
        Ok(out)
    }

    pub fn schedules(&self) -> Result<Vec<ModulationSchedule>> {
        self.schedules_at(self.eta())
    }

    pub fn hamiltonian(&self) -> Result<ModulatedHamiltonian> {
        self.hamiltonian.build(&self.space()?, &self.schedules()?)
    }

    pub fn initial_state(&self) -> Result<StateVector> {
        self.initial.build(&self.space()?)
    }

    /// Identical-qubit parameters used for the analytic estimates; the first
    /// qubit stands in for all of them in a distinguishable model.
    pub fn collective_params(&self) -> SystemParams {
        match &self.hamiltonian {
            HamiltonianSpec::Collective(p) => *p,
            HamiltonianSpec::Realistic(p) => SystemParams {
                omega: p.omega,
                atom_freq: p.qubits[0].atom_freq,
                coupling: p.qubits[0].coupling,
                n_qubits: p.qubits.len(),
                with_crt: p.with_crt,
            },
        }
    }

    fn collective_schedules(&self) -> Result<Vec<ModulationSchedule>> {
        self.drives
            .iter()
            .map(|d| ModulationSchedule::new(d.target, d.epsilon, self.eta(), d.phi))
            .collect()
    }

    /// Closed-form `|Xi|` of the driven transition.
    pub fn closed_form_rate(&self) -> Result<f64> {
        let (n, k) = self.transition;
        let rate = two_photon_rate_closed_form(n, k, &self.collective_params(), &self.collective_schedules()?)?;
        Ok(rate.magnitude())
    }

    /// Closed-form rate of the g-only part of the drive, the time unit of the
    /// figure axes.
    pub fn time_unit_rate(&self) -> Result<f64> {
        let (n, k) = self.transition;
        let g_only: Vec<ModulationSchedule> = self
            .collective_schedules()?
            .into_iter()
            .filter(|s| matches!(s.target, ModulationTarget::Coupling(_)))
            .collect();
        let rate = two_photon_rate_closed_form(n, k, &self.collective_params(), &g_only)?.magnitude();
        if rate > 0.0 {
            Ok(rate)
        } else {
            self.closed_form_rate()
        }
    }

    pub fn analytic_eta(&self) -> f64 {
        let (n, k) = self.transition;
        eta_resonant(n, k, &self.collective_params())
    }

    /// Cutoff for Fock-state sweeps of the driven transition.
    pub fn sweep_cutoff(&self) -> usize {
        self.transition.0 + 7
    }

    pub fn t_end(&self) -> Result<f64> {
        match self.t_span {
            TimeSpan::RateUnits(x) => Ok(x * std::f64::consts::PI / self.time_unit_rate()?),
            TimeSpan::Microseconds(us) => Ok(self.units.from_microseconds(us)),
            TimeSpan::Dimensionless(t) => Ok(t),
        }
    }

    /// Unitary sweep scenario: Fock initial state `|k, n-k>` and the dressed
    /// partner of `|k+2, n-k-2>` as target.
    pub fn sweep_scenario(&self, n_max: usize) -> Result<Scenario> {
        let (n, k) = self.transition;
        let space = SpaceSpec::new(self.n_qubits(), n_max, self.basis)?;
        Ok(Scenario {
            space,
            hamiltonian: self.hamiltonian.clone(),
            schedules: self.schedules()?,
            initial: dicke_fock_state(&space, k, n - k)?,
            target: dicke_fock_state(&space, k + 2, n - k - 2)?,
            metric: TransferMetric::Dressed,
        })
    }

    /// Sweep over `[lo, hi]` in factor units with the default horizon. A
    /// zero closed-form rate leaves the horizon infinite; set it before
    /// sweeping.
    pub fn sweep_options(&self, lo: f64, hi: f64, grid_points: usize) -> Result<SweepOptions> {
        let scale = 2.0 * self.reference_detuning().abs();
        let rate = self.closed_form_rate()?;
        let opts = SweepOptions::new(lo * scale, hi * scale, grid_points, default_horizon(rate));
        Ok(if rate > 0.0 { opts.expected_rate(rate) } else { opts })
    }
}

fn figure1_2_params(n_qubits: usize, with_crt: bool) -> SystemParams {
    let g = 0.08 / (n_qubits as f64).sqrt();
    SystemParams::from_detuning(1.0, g, -9.0 * g * (n_qubits as f64).sqrt(), n_qubits, with_crt)
}

/// Two qubits, `|0> (x) |5>`, coupling modulation.
pub fn figure1(with_crt: bool) -> Preset {
    let p = figure1_2_params(2, with_crt);
    Preset {
        name: if with_crt { "figure1" } else { "figure1-tc" },
        provenance: vec![
            "N = 2, g0 sqrt(N) / omega0 = 8e-2, Delta_- = -9 g0 sqrt(N)".into(),
            "eps_g / g0 = 0.1, phi_g = 0, eps_Omega = eps_omega = 0".into(),
            "initial state |0> (x) |5>".into(),
            "eta_r = 2 |Delta_-| x 1.0678 with CRT, x 1.0540 without".into(),
        ],
        hamiltonian: HamiltonianSpec::Collective(p),
        basis: BasisKind::Collective,
        drives: vec![Drive {
            target: ModulationTarget::Coupling(None),
            epsilon: 0.1 * p.coupling,
            phi: 0.0,
        }],
        eta_factor: if with_crt { 1.0678 } else { 1.0540 },
        initial: InitialState::DickeFock { k: 0, n: 5 },
        n_max: 12,
        transition: (5, 0),
        dissipation: None,
        units: Units::default(),
        t_span: TimeSpan::RateUnits(2.0),
    }
}

/// Six qubits, `|0> (x) |alpha>` with `alpha^2 = 5.5`; coupling modulation,
/// optionally together with the atomic frequency (`phi_Omega = pi`).
pub fn figure2(with_atom_modulation: bool) -> Preset {
    let p = figure1_2_params(6, true);
    let mut drives = vec![Drive {
        target: ModulationTarget::Coupling(None),
        epsilon: 0.1 * p.coupling,
        phi: 0.0,
    }];
    let mut provenance = vec![
        "N = 6, g0 sqrt(N) / omega0 = 8e-2, Delta_- = -9 g0 sqrt(N), with CRT".into(),
        "eps_g / g0 = 0.1, phi_g = 0".into(),
        "initial state |0> (x) |alpha>, alpha = sqrt(5.5)".into(),
    ];
    if with_atom_modulation {
        drives.push(Drive {
            target: ModulationTarget::AtomFreq(None),
            epsilon: 0.1 * p.detuning().abs(),
            phi: std::f64::consts::PI,
        });
        provenance.push("eps_Omega / |Delta_-| = 0.1, phi_Omega = pi".into());
        provenance.push("eta_r = 2 |Delta_-| x 1.0388".into());
    } else {
        provenance.push("eta_r = 2 |Delta_-| x 1.0389".into());
    }
    let alpha_sqr = 5.5;
    Preset {
        name: if with_atom_modulation { "figure2-g-omega" } else { "figure2-g" },
        provenance,
        hamiltonian: HamiltonianSpec::Collective(p),
        basis: BasisKind::Collective,
        drives,
        eta_factor: if with_atom_modulation { 1.0388 } else { 1.0389 },
        initial: InitialState::Coherent { alpha_sqr, k: 0 },
        n_max: default_cutoff(alpha_sqr),
        transition: (5, 0),
        dissipation: None,
        units: Units::default(),
        t_span: TimeSpan::RateUnits(2.0),
    }
}

/// Photon and atomic probabilities under the combined modulation of
/// [`figure2`].
pub fn figure3() -> Preset {
    Preset {
        name: "figure3",
        ..figure2(true)
    }
}

const FIG4_G: f64 = 5.66e-2;
const FIG4_DELTA: f64 = -0.72;
const FIG4_LOSS: f64 = 5e-5;

/// Two qubits, `|g, g> (x) |alpha>` with `alpha^2 = 3`; the ideal case uses
/// identical lossless qubits, the realistic case two slightly different
/// qubits with cavity and qubit losses.
pub fn figure4(realistic: bool) -> Preset {
    let alpha_sqr = 3.0;
    let (hamiltonian, dissipation, eta_factor, provenance) = if realistic {
        let q1 = QubitParams {
            atom_freq: 1.0 - FIG4_DELTA,
            coupling: FIG4_G,
        };
        let q2 = QubitParams {
            atom_freq: 1.0 - 1.02 * FIG4_DELTA,
            coupling: 1.01 * FIG4_G,
        };
        let rates = DissipationRates {
            kappa: FIG4_LOSS * q1.coupling,
            gamma: vec![FIG4_LOSS * q1.coupling, FIG4_LOSS * q2.coupling],
            gamma_phi: vec![FIG4_LOSS * q1.coupling, FIG4_LOSS * q2.coupling],
        };
        (
            HamiltonianSpec::Realistic(RealisticParams {
                omega: 1.0,
                qubits: vec![q1, q2],
                with_crt: true,
            }),
            Some(rates),
            1.0632,
            vec![
                "two distinguishable qubits, omega0 / 2 pi = 10 GHz".into(),
                "g0(1) / omega0 = 5.66e-2, g0(2) = 1.01 g0(1), eps_g(l) / g0(l) = 0.1".into(),
                "Delta_-(1) = -0.72 omega0, Delta_-(2) = 1.02 Delta_-(1)".into(),
                "kappa / g0(1) = gamma(l) / g0(l) = 5e-5, gamma_phi(l) = gamma(l)".into(),
                "initial state |g, g> (x) |alpha>, alpha = sqrt(3)".into(),
                "eta_r = 2 |Delta_-(1)| x 1.0632".into(),
            ],
        )
    } else {
        let p = SystemParams::from_detuning(1.0, FIG4_G, FIG4_DELTA, 2, true);
        (
            HamiltonianSpec::Collective(p),
            None,
            1.0531,
            vec![
                "two identical qubits, omega0 / 2 pi = 10 GHz, no losses".into(),
                "g0 / omega0 = 5.66e-2, eps_g / g0 = 0.1, Delta_- = -0.72 omega0".into(),
                "initial state |g, g> (x) |alpha>, alpha = sqrt(3)".into(),
                "eta_r = 2 |Delta_-| x 1.0531".into(),
            ],
        )
    };
    Preset {
        name: if realistic { "figure4-realistic" } else { "figure4-ideal" },
        provenance,
        basis: if realistic {
            BasisKind::Distinguishable
        } else {
            BasisKind::Collective
        },
        drives: vec![Drive {
            target: ModulationTarget::Coupling(None),
            epsilon: 0.1 * FIG4_G,
            phi: 0.0,
        }],
        hamiltonian,
        eta_factor,
        initial: InitialState::Coherent { alpha_sqr, k: 0 },
        // Poisson weight above 16 photons is below 1e-7 for alpha^2 = 3
        n_max: 16,
        transition: (4, 0),
        dissipation,
        units: Units::default(),
        t_span: TimeSpan::Microseconds(2.0),
    }
}

/// Preset by name.
pub fn by_name(name: &str) -> Result<Preset> {
    Ok(match name {
        "figure1" => figure1(true),
        "figure1-tc" => figure1(false),
        "figure2-g" => figure2(false),
        "figure2-g-omega" => figure2(true),
        "figure3" => figure3(),
        "figure4-ideal" => figure4(false),
        "figure4-realistic" => figure4(true),
        _ => return Err(Error::Config(format!("unknown preset '{name}'"))),
    })
}
