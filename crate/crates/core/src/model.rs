//! Static and modulated Hamiltonians.
//!
//! Frequencies are usually in units of the bare cavity frequency (omega0 = 1 in
//! the presets, although nothing here assumes it). Every
//! Hamiltonian is affine in its modulated parameters, so it is stored as a
//! list of fixed sparse terms with scalar, possibly time-dependent,
//! coefficients: `H(t) = sum_j c_j(t) O_j` with `c_j(t) = X_j + eps sin(eta t + phi)`.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{build_operators, f_unchecked, BasisKind, SpaceSpec};
use crate::sparse::SparseOp;

/// Ratio above which a modulation depth is reported as non-perturbative.
pub const PERTURBATIVE_WARN_RATIO: f64 = 0.3;

/// Identical-qubit system parameters (collective description).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    /// Bare cavity frequency.
    pub omega: f64,
    /// Bare atomic transition frequency.
    pub atom_freq: f64,
    /// Bare atom-field coupling.
    pub coupling: f64,
    pub n_qubits: usize,
    pub with_crt: bool,
}

impl SystemParams {
    /// Builds parameters from the coupling and the detuning
    /// `Delta_- = omega - Omega`.
    pub fn from_detuning(
        omega: f64,
        coupling: f64,
        detuning: f64,
        n_qubits: usize,
        with_crt: bool,
    ) -> Self {
        Self {
            omega,
            atom_freq: omega - detuning,
            coupling,
            n_qubits,
            with_crt,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 {
            return Err(Error::Config("n_qubits must be at least 1".into()));
        }
        for (name, v) in [
            ("omega", self.omega),
            ("atom_freq", self.atom_freq),
            ("coupling", self.coupling),
        ] {
            if !v.is_finite() {
                return Err(Error::Config(format!("{name} must be finite")));
            }
        }
        if self.coupling < 0.0 {
            return Err(Error::PhysicsGuard("coupling must be non-negative".into()));
        }
        Ok(())
    }

    /// `Delta_- = omega0 - Omega0`.
    pub fn detuning(&self) -> f64 {
        self.omega - self.atom_freq
    }

    /// `delta_- = g0^2 / Delta_-`.
    pub fn dispersive_shift(&self) -> f64 {
        self.coupling * self.coupling / self.detuning()
    }

    /// `max_k g0 f_k sqrt(n) / |Delta_-|` for `n` excitations; the dispersive
    /// regime needs this well below one.
    pub fn dispersive_ratio(&self, n_excitations: usize) -> f64 {
        let fmax = (0..=self.n_qubits)
            .map(|k| f_unchecked(k, self.n_qubits))
            .fold(0.0, f64::max);
        self.coupling * fmax * (n_excitations as f64).sqrt() / self.detuning().abs()
    }

    pub fn with_crt(mut self, with_crt: bool) -> Self {
        self.with_crt = with_crt;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QubitParams {
    pub atom_freq: f64,
    pub coupling: f64,
}

/// Distinguishable-qubit parameters for the realistic variant.
#[derive(Clone, Debug, PartialEq)]
pub struct RealisticParams {
    pub omega: f64,
    pub qubits: Vec<QubitParams>,
    pub with_crt: bool,
}

impl RealisticParams {
    /// Two copies of the same qubit; the distinguishable counterpart of a
    /// collective model.
    pub fn identical(params: &SystemParams) -> Self {
        Self {
            omega: params.omega,
            qubits: vec![
                QubitParams {
                    atom_freq: params.atom_freq,
                    coupling: params.coupling,
                };
                params.n_qubits
            ],
            with_crt: params.with_crt,
        }
    }

    pub fn detuning(&self, qubit: usize) -> f64 {
        self.omega - self.qubits[qubit].atom_freq
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ModulationTarget {
    /// Cavity frequency.
    CavityFreq,
    /// Atomic frequency; `None` addresses every qubit.
    AtomFreq(Option<usize>),
    /// Coupling strength; `None` addresses every qubit.
    Coupling(Option<usize>),
}

/// `X(t) = X0 + epsilon sin(eta t + phi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModulationSchedule {
    pub target: ModulationTarget,
    pub epsilon: f64,
    pub eta: f64,
    pub phi: f64,
}

impl ModulationSchedule {
    pub fn new(target: ModulationTarget, epsilon: f64, eta: f64, phi: f64) -> Result<Self> {
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::Config(format!(
                "modulation depth must be finite and >= 0, got {epsilon}"
            )));
        }
        if !eta.is_finite() || !phi.is_finite() {
            return Err(Error::Config("modulation frequency and phase must be finite".into()));
        }
        Ok(Self {
            target,
            epsilon,
            eta,
            phi,
        })
    }

    pub fn value_at(&self, base: f64, t: f64) -> f64 {
        base + self.epsilon * (self.eta * t + self.phi).sin()
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub(crate) fn drive(&self) -> Drive {
        Drive {
            epsilon: self.epsilon,
            eta: self.eta,
            phi: self.phi,
        }
    }
}

/// Warnings for modulation depths outside the perturbative regime
/// (`eps_g << g0`, `eps_omega, eps_Omega << |Delta_-|`).
pub fn modulation_warnings(params: &SystemParams, schedules: &[ModulationSchedule]) -> Vec<String> {
    let delta = params.detuning().abs();
    schedules
        .iter()
        .filter_map(|s| {
            let (scale, name) = match s.target {
                ModulationTarget::Coupling(_) => (params.coupling, "eps_g / g0"),
                ModulationTarget::CavityFreq => (delta, "eps_omega / |Delta|"),
                ModulationTarget::AtomFreq(_) => (delta, "eps_Omega / |Delta|"),
            };
            let ratio = s.epsilon / scale;
            (ratio > PERTURBATIVE_WARN_RATIO)
                .then(|| format!("{name} = {ratio:.3} exceeds {PERTURBATIVE_WARN_RATIO}"))
        })
        .collect()
}

/// Cavity and qubit loss rates.
#[derive(Clone, Debug, PartialEq, Default)]
pub struct DissipationRates {
    pub kappa: f64,
    pub gamma: Vec<f64>,
    pub gamma_phi: Vec<f64>,
}

impl DissipationRates {
    pub fn validate(&self) -> Result<()> {
        if self
            .gamma
            .iter()
            .chain(&self.gamma_phi)
            .chain(std::iter::once(&self.kappa))
            .any(|r| !(*r >= 0.0) || !r.is_finite())
        {
            return Err(Error::Config("dissipation rates must be finite and >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Drive {
    pub epsilon: f64,
    pub eta: f64,
    pub phi: f64,
}

#[derive(Clone, Debug)]
pub struct HamiltonianTerm {
    pub op: SparseOp,
    pub base: f64,
    pub drive: Option<Drive>,
    pub diagonal: bool,
}

impl HamiltonianTerm {
    fn new(op: SparseOp, base: f64) -> Self {
        let diagonal = op.is_diagonal();
        Self {
            op,
            base,
            drive: None,
            diagonal,
        }
    }

    pub fn coefficient(&self, t: f64) -> f64 {
        self.base + self.modulation(t)
    }

    /// Time-dependent part of the coefficient.
    pub fn modulation(&self, t: f64) -> f64 {
        self.drive
            .map_or(0.0, |d| d.epsilon * (d.eta * t + d.phi).sin())
    }
}

/// Static diagonal energies `E = omega0 n + A(atom)` that define the
/// interaction picture used by the integrators.
#[derive(Clone, Debug, PartialEq)]
pub struct FrameEnergies {
    pub photon: f64,
    pub atom: Vec<f64>,
}

impl FrameEnergies {
    pub fn energies(&self, space: &SpaceSpec) -> Vec<f64> {
        (0..space.dim())
            .map(|i| {
                let (atom, n) = space.decompose(i);
                self.photon * n as f64 + self.atom[atom]
            })
            .collect()
    }

    /// `exp(-i E_i t)` for every basis state.
    pub fn phases(&self, space: &SpaceSpec, t: f64, out: &mut [C64]) {
        let levels = space.photon_levels();
        let step = C64::from_polar(1.0, -self.photon * t);
        for (atom, &ea) in self.atom.iter().enumerate() {
            let mut p = C64::from_polar(1.0, -ea * t);
            for slot in &mut out[atom * levels..(atom + 1) * levels] {
                *slot = p;
                p *= step;
            }
        }
    }
}

/// `H(t) = sum_j c_j(t) O_j` over a fixed space.
#[derive(Clone, Debug)]
pub struct ModulatedHamiltonian {
    space: SpaceSpec,
    terms: Vec<HamiltonianTerm>,
    frame: FrameEnergies,
}

impl ModulatedHamiltonian {
    /// Collective Dicke (or Tavis-Cummings) Hamiltonian in the zero-point
    /// convention where the bare ground state has energy 0.
    pub fn collective(
        space: &SpaceSpec,
        params: &SystemParams,
        schedules: &[ModulationSchedule],
    ) -> Result<Self> {
        params.validate()?;
        if space.kind() != BasisKind::Collective {
            return Err(Error::domain("collective Hamiltonian needs the collective basis"));
        }
        if space.n_qubits() != params.n_qubits {
            return Err(Error::domain(format!(
                "space has {} qubits, parameters have {}",
                space.n_qubits(),
                params.n_qubits
            )));
        }
        let ops = build_operators(space);
        let lowering = &ops.collective_lowering;
        let coupling = coupling_operator(&ops.a, lowering, params.with_crt);
        let mut terms = vec![
            HamiltonianTerm::new(ops.number.clone(), params.omega),
            HamiltonianTerm::new(ops.atomic_excitation.clone(), params.atom_freq),
            HamiltonianTerm::new(coupling, params.coupling),
        ];
        let mut assigned = [false; 3];
        for s in schedules {
            let slot = match s.target {
                ModulationTarget::CavityFreq => 0,
                ModulationTarget::AtomFreq(None) => 1,
                ModulationTarget::Coupling(None) => 2,
                ModulationTarget::AtomFreq(Some(_)) | ModulationTarget::Coupling(Some(_)) => {
                    return Err(Error::Config(
                        "per-qubit modulation needs the distinguishable (realistic) model".into(),
                    ))
                }
            };
            if std::mem::replace(&mut assigned[slot], true) {
                return Err(Error::Config(format!(
                    "more than one schedule targets {:?}",
                    s.target
                )));
            }
            terms[slot].drive = Some(s.drive());
        }
        let frame = FrameEnergies {
            photon: params.omega,
            atom: (0..=params.n_qubits)
                .map(|k| params.atom_freq * k as f64)
                .collect(),
        };
        Ok(Self {
            space: *space,
            terms,
            frame,
        })
    }

    /// `omega n + sum_l [Omega_l sigma_z^(l) / 2 + g_l (a + a^dag)(sigma_+^(l) + sigma_-^(l))]`
    /// on the distinguishable basis.
    pub fn realistic(
        space: &SpaceSpec,
        params: &RealisticParams,
        schedules: &[ModulationSchedule],
    ) -> Result<Self> {
        if space.kind() != BasisKind::Distinguishable {
            return Err(Error::domain("realistic Hamiltonian needs the distinguishable basis"));
        }
        if space.n_qubits() != params.qubits.len() {
            return Err(Error::domain(format!(
                "space has {} qubits, parameters describe {}",
                space.n_qubits(),
                params.qubits.len()
            )));
        }
        if params.qubits.iter().any(|q| q.coupling < 0.0) {
            return Err(Error::PhysicsGuard("coupling must be non-negative".into()));
        }
        let nq = params.qubits.len();
        let ops = build_operators(space);
        let mut terms = vec![HamiltonianTerm::new(ops.number.clone(), params.omega)];
        for (l, q) in params.qubits.iter().enumerate() {
            terms.push(HamiltonianTerm::new(ops.sigma_z[l].scale_re(0.5), q.atom_freq));
            terms.push(HamiltonianTerm::new(
                coupling_operator(&ops.a, &ops.sigma_minus[l], params.with_crt),
                q.coupling,
            ));
        }
        let atom_slot = |l: usize| 1 + 2 * l;
        let coupling_slot = |l: usize| 2 + 2 * l;
        let mut phases = Vec::new();
        for s in schedules {
            let slots: Vec<usize> = match s.target {
                ModulationTarget::CavityFreq => vec![0],
                ModulationTarget::AtomFreq(None) => (0..nq).map(atom_slot).collect(),
                ModulationTarget::Coupling(None) => (0..nq).map(coupling_slot).collect(),
                ModulationTarget::AtomFreq(Some(l)) | ModulationTarget::Coupling(Some(l))
                    if l >= nq =>
                {
                    return Err(Error::Config(format!("qubit index {l} out of range")))
                }
                ModulationTarget::AtomFreq(Some(l)) => vec![atom_slot(l)],
                ModulationTarget::Coupling(Some(l)) => vec![coupling_slot(l)],
            };
            for slot in slots {
                if terms[slot].drive.is_some() {
                    return Err(Error::Config(format!(
                        "more than one schedule targets {:?}",
                        s.target
                    )));
                }
                terms[slot].drive = Some(s.drive());
            }
            if matches!(s.target, ModulationTarget::Coupling(_)) {
                phases.push(s.phi);
            }
        }
        if phases.windows(2).any(|w| w[0] != w[1]) {
            log::warn!("per-qubit coupling modulation phases differ; this mode is experimental");
        }
        let frame = FrameEnergies {
            photon: params.omega,
            atom: (0..space.atom_configs())
                .map(|mask| {
                    params
                        .qubits
                        .iter()
                        .enumerate()
                        .map(|(l, q)| {
                            let s = if mask & (1 << l) != 0 { 0.5 } else { -0.5 };
                            s * q.atom_freq
                        })
                        .sum()
                })
                .collect(),
        };
        Ok(Self {
            space: *space,
            terms,
            frame,
        })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn terms(&self) -> &[HamiltonianTerm] {
        &self.terms
    }

    pub fn frame(&self) -> &FrameEnergies {
        &self.frame
    }

    pub fn at(&self, t: f64) -> SparseOp {
        self.terms
            .iter()
            .fold(SparseOp::zeros(self.space.dim()), |acc, term| {
                acc.add(&term.op.scale_re(term.coefficient(t)))
            })
    }

    /// The unmodulated Hamiltonian.
    pub fn static_part(&self) -> SparseOp {
        self.terms
            .iter()
            .fold(SparseOp::zeros(self.space.dim()), |acc, term| {
                acc.add(&term.op.scale_re(term.base))
            })
    }

    pub fn drives(&self) -> impl Iterator<Item = &Drive> {
        self.terms.iter().filter_map(|t| t.drive.as_ref())
    }

    /// Largest modulation frequency among active drives.
    pub fn max_drive_frequency(&self) -> Option<f64> {
        self.drives()
            .filter(|d| d.epsilon > 0.0)
            .map(|d| d.eta.abs())
            .filter(|&e| e > 0.0)
            .reduce(f64::max)
    }

    /// Common modulation period when every active drive shares one frequency.
    pub fn common_period(&self) -> Option<f64> {
        let etas: Vec<f64> = self
            .drives()
            .filter(|d| d.epsilon > 0.0)
            .map(|d| d.eta.abs())
            .collect();
        let first = *etas.first()?;
        (first > 0.0 && etas.iter().all(|&e| e == first)).then(|| TAU / first)
    }
}

fn coupling_operator(a: &SparseOp, lowering: &SparseOp, with_crt: bool) -> SparseOp {
    let a_dag = a.adjoint();
    let raising = lowering.adjoint();
    if with_crt {
        a.add(&a_dag).mul(&raising.add(lowering))
    } else {
        a.mul(&raising).add(&a_dag.mul(lowering))
    }
}

/// Unmodulated collective Hamiltonian.
pub fn hamiltonian_static(space: &SpaceSpec, params: &SystemParams) -> Result<SparseOp> {
    Ok(ModulatedHamiltonian::collective(space, params, &[])?.static_part())
}

pub fn hamiltonian_at(
    space: &SpaceSpec,
    params: &SystemParams,
    schedules: &[ModulationSchedule],
    t: f64,
) -> Result<SparseOp> {
    Ok(ModulatedHamiltonian::collective(space, params, schedules)?.at(t))
}

/// Realistic Hamiltonian; restricted to two distinguishable qubits.
pub fn hamiltonian_realistic_at(
    space: &SpaceSpec,
    params: &RealisticParams,
    schedules: &[ModulationSchedule],
    t: f64,
) -> Result<SparseOp> {
    if space.n_qubits() != 2 {
        return Err(Error::domain(
            "the realistic variant is only supported for two qubits",
        ));
    }
    Ok(ModulatedHamiltonian::realistic(space, params, schedules)?.at(t))
}

/// Conversion between the dimensionless time `omega0 t` and laboratory
/// units.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Units {
    /// `omega0 / 2 pi` in Hz.
    pub cavity_frequency_hz: f64,
}

impl Default for Units {
    fn default() -> Self {
        Self {
            cavity_frequency_hz: 10e9,
        }
    }
}

impl Units {
    pub fn to_microseconds(&self, t: f64) -> f64 {
        t / (TAU * self.cavity_frequency_hz) * 1e6
    }

    pub fn from_microseconds(&self, us: f64) -> f64 {
        us * 1e-6 * TAU * self.cavity_frequency_hz
    }
}
