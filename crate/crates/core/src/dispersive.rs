//! Dispersive-regime analytics: dressed spectra, counter-rotating shifts,
//! modulation-induced transition rates and the effective slow dynamics.
//!
//! Dressed states are labeled `(m, S)` with `m` the total excitation number
//! and `S` the number of atomic excitations of the dominant bare component
//! `|S, m - S>`. All frequencies use the zero point where the bare ground
//! state has energy 0, so a bare level sits at `m omega0 - S Delta`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{f_coefficient, BasisKind, SpaceSpec, StateVector};
use crate::model::{hamiltonian_static, ModulationSchedule, ModulationTarget, SystemParams};
use crate::ode::{integrate, OdeSystem, StepperConfig};

/// Tolerance of the effective-equation integrator.
pub const EFFECTIVE_TOL: f64 = 1e-10;
/// Subspaces this close to the Fock cutoff are dropped from with-CRT spectra,
/// whose eigenvectors feel the truncation through the `m -> m + 2` couplings.
pub const CRT_CUTOFF_MARGIN: usize = 4;
const DEGENERACY_LIMIT: f64 = 1e-12;
const SHIFT_DENOMINATOR_LIMIT: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SpectrumSource {
    ExactDiagonalization,
    SecondOrderPerturbation,
}

#[derive(Clone, Debug)]
pub struct DressedEntry {
    pub m: usize,
    pub label: usize,
    pub lambda: f64,
    /// Counter-rotating shift; zero unless added by [`effective_spectrum`].
    pub nu: f64,
    pub state: StateVector,
}

impl DressedEntry {
    pub fn lambda_tilde(&self) -> f64 {
        self.lambda + self.nu
    }
}

#[derive(Clone, Debug)]
pub struct DressedSpectrum {
    space: SpaceSpec,
    source: SpectrumSource,
    with_crt: bool,
    entries: Vec<DressedEntry>,
}

impl DressedSpectrum {
    fn new(space: SpaceSpec, source: SpectrumSource, with_crt: bool, mut entries: Vec<DressedEntry>) -> Self {
        entries.sort_by_key(|e| (e.m, e.label));
        Self {
            space,
            source,
            with_crt,
            entries,
        }
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn source(&self) -> SpectrumSource {
        self.source
    }

    /// Whether the eigenstates include the counter-rotating terms.
    pub fn with_crt(&self) -> bool {
        self.with_crt
    }

    pub fn entries(&self) -> &[DressedEntry] {
        &self.entries
    }

    pub fn max_m(&self) -> Option<usize> {
        self.entries.last().map(|e| e.m)
    }

    pub fn entry(&self, m: usize, label: usize) -> Result<&DressedEntry> {
        self.entries
            .binary_search_by_key(&(m, label), |e| (e.m, e.label))
            .map(|i| &self.entries[i])
            .map_err(|_| Error::domain(format!("no dressed state (m = {m}, S = {label}) in the spectrum")))
    }

    pub fn subspace(&self, m: usize) -> impl Iterator<Item = &DressedEntry> + '_ {
        self.entries.iter().filter(move |e| e.m == m)
    }
}

fn require_collective(space: &SpaceSpec, params: &SystemParams) -> Result<()> {
    if space.kind() != BasisKind::Collective {
        return Err(Error::domain("dispersive analytics work in the collective basis"));
    }
    if space.n_qubits() != params.n_qubits {
        return Err(Error::domain(format!(
            "space has {} qubits, parameters have {}",
            space.n_qubits(),
            params.n_qubits
        )));
    }
    Ok(())
}

fn check_label(n: usize, k: usize, n_qubits: usize) -> Result<()> {
    if k > n.min(n_qubits) {
        return Err(Error::domain(format!(
            "label S = {k} outside 0..={} for n = {n}, N = {n_qubits}",
            n.min(n_qubits)
        )));
    }
    Ok(())
}

/// Second-order dressed frequency
/// `n omega0 - k Delta + delta [(N - k)(n - 2k) - k(n - k + 1)]`.
pub fn lambda_perturbative(n: usize, k: usize, params: &SystemParams) -> Result<f64> {
    check_label(n, k, params.n_qubits)?;
    let (nf, kf, big_n) = (n as f64, k as f64, params.n_qubits as f64);
    let bracket = (big_n - kf) * (nf - 2.0 * kf) - kf * (nf - kf + 1.0);
    Ok(nf * params.omega - kf * params.detuning() + params.dispersive_shift() * bracket)
}

/// Dressed state to second order in `g0 / Delta`, normalized, with the bare
/// component positive.
pub fn dressed_state_perturbative(space: &SpaceSpec, n: usize, k: usize, params: &SystemParams) -> Result<StateVector> {
    require_collective(space, params)?;
    check_label(n, k, params.n_qubits)?;
    let big_n = params.n_qubits;
    let top = n.min(big_n);
    let (g, d) = (params.coupling, params.detuning());
    let big_k = (n - k) as f64;
    let f = |j: usize| f_coefficient(j, big_n);
    let mut parts: Vec<(usize, f64)> = vec![(k, 1.0)];
    if k < top {
        parts.push((k + 1, g * f(k)? * big_k.sqrt() / d));
    }
    if k >= 1 {
        parts.push((k - 1, -g * f(k - 1)? * (big_k + 1.0).sqrt() / d));
    }
    if k + 2 <= top {
        parts.push((k + 2, g * g * f(k)? * f(k + 1)? * (big_k * (big_k - 1.0)).sqrt() / (2.0 * d * d)));
    }
    if k >= 2 {
        parts.push((
            k - 2,
            g * g * f(k - 1)? * f(k - 2)? * ((big_k + 1.0) * (big_k + 2.0)).sqrt() / (2.0 * d * d),
        ));
    }
    let mut amps = vec![C64::default(); space.dim()];
    for (atom, value) in parts {
        let photons = n - atom;
        if photons > space.n_max() {
            return Err(Error::Cutoff {
                required: photons,
                reason: format!("dressed state (n = {n}, k = {k}) needs {photons} photons"),
            });
        }
        amps[space.index(atom, photons)] = C64::new(value, 0.0);
    }
    StateVector::normalized(*space, amps)
}

/// Second-order spectrum for every subspace `m <= m_max`.
pub fn spectrum_perturbative(space: &SpaceSpec, params: &SystemParams, m_max: usize) -> Result<DressedSpectrum> {
    require_collective(space, params)?;
    let mut entries = Vec::new();
    for m in 0..=m_max {
        for k in 0..=m.min(params.n_qubits) {
            entries.push(DressedEntry {
                m,
                label: k,
                lambda: lambda_perturbative(m, k, params)?,
                nu: 0.0,
                state: dressed_state_perturbative(space, m, k, params)?,
            });
        }
    }
    Ok(DressedSpectrum::new(
        *space,
        SpectrumSource::SecondOrderPerturbation,
        params.with_crt,
        entries,
    ))
}

/// Largest component made real positive.
fn fix_phase(v: &mut [f64]) {
    let (_, &big) = v
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("nonempty eigenvector");
    if big < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Labels eigenvectors by their dominant bare component. `embed(i)` maps a
/// vector index to `(m, k, index in the space)`; eigenvectors whose dominant
/// `(m, k)` is not in `expected` are skipped.
fn label_eigenvectors<F>(
    space: &SpaceSpec,
    values: &[f64],
    vectors: &DMatrix<f64>,
    embed: F,
    expected: &[(usize, usize)],
) -> Result<Vec<DressedEntry>>
where
    F: Fn(usize) -> (usize, usize, usize),
{
    let mut entries: Vec<DressedEntry> = Vec::new();
    for (col, &lambda) in values.iter().enumerate() {
        let mut v: Vec<f64> = vectors.column(col).iter().copied().collect();
        fix_phase(&mut v);
        let (best, overlap) = v
            .iter()
            .enumerate()
            .map(|(i, x)| (i, x * x))
            .max_by(|a, b| a.1.total_cmp(&b.1))
            .expect("nonempty eigenvector");
        let (m, k, _) = embed(best);
        if !expected.contains(&(m, k)) {
            continue;
        }
        if overlap <= 0.5 {
            return Err(Error::Labeling { subspace: m, overlap });
        }
        if entries.iter().any(|e| e.m == m && e.label == k) {
            return Err(Error::Labeling { subspace: m, overlap });
        }
        let mut amps = vec![C64::default(); space.dim()];
        for (i, x) in v.iter().enumerate() {
            amps[embed(i).2] = C64::new(*x, 0.0);
        }
        entries.push(DressedEntry {
            m,
            label: k,
            lambda,
            nu: 0.0,
            state: StateVector::normalized(*space, amps)?,
        });
    }
    if let Some(&(m, _)) = expected
        .iter()
        .find(|&&(m, k)| !entries.iter().any(|e| e.m == m && e.label == k))
    {
        return Err(Error::Labeling { subspace: m, overlap: 0.0 });
    }
    Ok(entries)
}

/// Eigenpairs of one Tavis-Cummings excitation subspace.
fn tc_subspace(space: &SpaceSpec, params: &SystemParams, m: usize) -> Result<Vec<DressedEntry>> {
    let top = m.min(params.n_qubits);
    let d = top + 1;
    let mut h = DMatrix::<f64>::zeros(d, d);
    for k in 0..=top {
        h[(k, k)] = (m - k) as f64 * params.omega + k as f64 * params.atom_freq;
    }
    for k in 0..top {
        let v = params.coupling * f_coefficient(k, params.n_qubits)? * ((m - k) as f64).sqrt();
        h[(k + 1, k)] = v;
        h[(k, k + 1)] = v;
    }
    let eig = h.symmetric_eigen();
    let expected: Vec<(usize, usize)> = (0..=top).map(|k| (m, k)).collect();
    let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    label_eigenvectors(
        space,
        &values,
        &eig.eigenvectors,
        |k| (m, k, space.index(k, m - k)),
        &expected,
    )
}

/// Exact dressed spectrum of the unmodulated Hamiltonian for every subspace
/// the cutoff supports: `m <= n_max` without counter-rotating terms,
/// `m <= n_max - CRT_CUTOFF_MARGIN` with them.
pub fn spectrum_exact(space: &SpaceSpec, params: &SystemParams) -> Result<DressedSpectrum> {
    let top = if params.with_crt {
        space.n_max().checked_sub(CRT_CUTOFF_MARGIN).ok_or_else(|| Error::Cutoff {
            required: CRT_CUTOFF_MARGIN,
            reason: "with-CRT spectra need n_max >= 4".into(),
        })?
    } else {
        space.n_max()
    };
    spectrum_exact_to(space, params, top)
}

/// Exact dressed spectrum for subspaces `m <= m_max`.
///
/// Without counter-rotating terms each excitation subspace is diagonalized on
/// its own. With them the full truncated matrix is diagonalized and
/// eigenvectors are labeled by their dominant bare component, which needs
/// `m_max + CRT_CUTOFF_MARGIN <= n_max`.
pub fn spectrum_exact_to(space: &SpaceSpec, params: &SystemParams, m_max: usize) -> Result<DressedSpectrum> {
    require_collective(space, params)?;
    params.validate()?;
    let entries = if params.with_crt {
        if m_max + CRT_CUTOFF_MARGIN > space.n_max() {
            return Err(Error::Cutoff {
                required: m_max + CRT_CUTOFF_MARGIN,
                reason: format!("with-CRT spectrum up to m = {m_max}"),
            });
        }
        let h = hamiltonian_static(space, params)?.to_dense_real();
        let eig = h.symmetric_eigen();
        let values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        let expected: Vec<(usize, usize)> = (0..=m_max)
            .flat_map(|m| (0..=m.min(params.n_qubits)).map(move |k| (m, k)))
            .collect();
        label_eigenvectors(
            space,
            &values,
            &eig.eigenvectors,
            |i| {
                let (k, n) = space.decompose(i);
                (k + n, k, i)
            },
            &expected,
        )?
    } else {
        if m_max > space.n_max() {
            return Err(Error::Cutoff {
                required: m_max,
                reason: format!("subspace m = {m_max} is incomplete below the cutoff"),
            });
        }
        let mut all = Vec::new();
        for m in 0..=m_max {
            all.extend(tc_subspace(space, params, m)?);
        }
        all
    };
    Ok(DressedSpectrum::new(
        *space,
        SpectrumSource::ExactDiagonalization,
        params.with_crt,
        entries,
    ))
}

/// `<x| a J_- |y>` with `J_- = sum_k f_k sigma_{k,k+1}`.
fn a_lowering_element(x: &StateVector, y: &StateVector, n_qubits: usize) -> f64 {
    let space = x.space();
    let mut acc = C64::default();
    for k in 0..n_qubits {
        let f = crate::hilbert::f_unchecked(k, n_qubits);
        for n in 1..=space.n_max() {
            // a sigma_{k,k+1} |k+1, n> = sqrt(n) |k, n-1>
            acc += x.amplitude(k, n - 1).conj() * y.amplitude(k + 1, n) * (f * (n as f64).sqrt());
        }
    }
    acc.re
}

/// Counter-rotating frequency shift of the Tavis-Cummings level `(m, T)`.
pub fn crt_shift(m: usize, label: usize, spectrum: &DressedSpectrum, params: &SystemParams) -> Result<f64> {
    if spectrum.with_crt() {
        return Err(Error::domain(
            "the counter-rotating shift corrects Tavis-Cummings spectra only",
        ));
    }
    if spectrum.max_m().is_none_or(|top| m + 2 > top) {
        return Err(Error::Cutoff {
            required: m + 2,
            reason: format!("shift of subspace {m} needs subspace {}", m + 2),
        });
    }
    let target = spectrum.entry(m, label)?;
    let n_qubits = params.n_qubits;
    let g2 = params.coupling * params.coupling;
    let guard = params.omega - params.detuning().abs();
    let mut nu = 0.0;
    let mut term = |overlap: f64, denominator: f64, sign: f64| -> Result<()> {
        if overlap == 0.0 {
            return Ok(());
        }
        if denominator.abs() < SHIFT_DENOMINATOR_LIMIT {
            return Err(Error::PhysicsGuard(format!(
                "counter-rotating shift of (m = {m}, T = {label}) has a vanishing denominator {denominator:.3e}"
            )));
        }
        if params.coupling * overlap.abs() > guard {
            log::warn!(
                "counter-rotating shift of (m = {m}, T = {label}): g0 f Lambda = {:.3e} exceeds omega0 - |Delta| = {guard:.3e}",
                params.coupling * overlap.abs()
            );
        }
        nu += sign * g2 * overlap * overlap / denominator;
        Ok(())
    };
    if m >= 2 {
        for below in spectrum.subspace(m - 2) {
            let overlap = a_lowering_element(&below.state, &target.state, n_qubits);
            term(overlap, target.lambda - below.lambda, 1.0)?;
        }
    }
    for above in spectrum.subspace(m + 2) {
        let overlap = a_lowering_element(&target.state, &above.state, n_qubits);
        term(overlap, above.lambda - target.lambda, -1.0)?;
    }
    Ok(nu)
}

/// Spectrum entering the effective equations: exact Tavis-Cummings
/// eigenpairs, with the counter-rotating shift `nu` added when
/// `params.with_crt`. Shifted spectra stop two subspaces below the cutoff.
pub fn effective_spectrum(space: &SpaceSpec, params: &SystemParams) -> Result<DressedSpectrum> {
    let top = if params.with_crt {
        space.n_max().saturating_sub(2)
    } else {
        space.n_max()
    };
    effective_spectrum_to(space, params, top)
}

/// [`effective_spectrum`] for subspaces `m <= m_max`.
pub fn effective_spectrum_to(space: &SpaceSpec, params: &SystemParams, m_max: usize) -> Result<DressedSpectrum> {
    if !params.with_crt {
        return spectrum_exact_to(space, params, m_max);
    }
    let tc = spectrum_exact_to(space, &params.with_crt(false), m_max + 2)?;
    let mut entries = Vec::new();
    for e in tc.entries().iter().filter(|e| e.m <= m_max) {
        let mut shifted = e.clone();
        shifted.nu = crt_shift(e.m, e.label, &tc, params)?;
        entries.push(shifted);
    }
    Ok(DressedSpectrum::new(
        *space,
        SpectrumSource::ExactDiagonalization,
        false,
        entries,
    ))
}

/// Collective parameter a schedule modulates.
fn collective_target(schedule: &ModulationSchedule) -> Result<ModulationTarget> {
    match schedule.target {
        ModulationTarget::CavityFreq => Ok(ModulationTarget::CavityFreq),
        ModulationTarget::AtomFreq(None) => Ok(ModulationTarget::AtomFreq(None)),
        ModulationTarget::Coupling(None) => Ok(ModulationTarget::Coupling(None)),
        other => Err(Error::Config(format!(
            "per-qubit schedule {other:?} has no collective rate"
        ))),
    }
}

/// `Upsilon^{L,k}_{T,S}` for the parameter modulated by `target` with depth
/// `epsilon`.
pub fn upsilon(
    target: ModulationTarget,
    epsilon: f64,
    k: usize,
    t_state: &StateVector,
    s_state: &StateVector,
) -> Result<f64> {
    let space = t_state.space();
    if space != s_state.space() || space.kind() != BasisKind::Collective {
        return Err(Error::domain("Upsilon needs two states on one collective space"));
    }
    let big_n = space.n_qubits();
    if k > big_n {
        return Err(Error::domain(format!("k = {k} exceeds N = {big_n}")));
    }
    if epsilon == 0.0 {
        return Ok(0.0);
    }
    let n_max = space.n_max();
    let value = match target {
        ModulationTarget::CavityFreq => {
            if k != 0 {
                return Ok(0.0);
            }
            let mut acc = C64::default();
            for atom in 0..=big_n {
                for n in 0..=n_max {
                    acc += t_state.amplitude(atom, n).conj() * s_state.amplitude(atom, n) * n as f64;
                }
            }
            acc
        }
        ModulationTarget::Coupling(None) => {
            if k == big_n {
                return Ok(0.0);
            }
            let f = crate::hilbert::f_unchecked(k, big_n);
            let mut acc = C64::default();
            for n in 1..=n_max {
                let root = (n as f64).sqrt();
                // a sigma_{k+1,k} |k, n> = sqrt(n) |k+1, n-1>
                acc += t_state.amplitude(k + 1, n - 1).conj() * s_state.amplitude(k, n) * root;
                // a^dag sigma_{k,k+1} |k+1, n-1> = sqrt(n) |k, n>
                acc += t_state.amplitude(k, n).conj() * s_state.amplitude(k + 1, n - 1) * root;
            }
            acc * f
        }
        ModulationTarget::AtomFreq(None) => {
            let mut acc = C64::default();
            for n in 0..=n_max {
                acc += t_state.amplitude(k, n).conj() * s_state.amplitude(k, n);
            }
            acc * k as f64
        }
        other => return Err(Error::Config(format!("per-qubit target {other:?} has no collective Upsilon"))),
    };
    Ok(epsilon * value.re)
}

/// Summed `sum_k Upsilon^{L,k}_{T,S}` for one schedule.
fn upsilon_sum(schedule: &ModulationSchedule, t: &StateVector, s: &StateVector) -> Result<f64> {
    let target = collective_target(schedule)?;
    (0..=t.space().n_qubits())
        .map(|k| upsilon(target, schedule.epsilon, k, t, s))
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TransitionRate {
    pub n: usize,
    pub from_label: usize,
    pub to_label: usize,
    pub xi: C64,
    pub eta_res: f64,
}

impl TransitionRate {
    pub fn magnitude(&self) -> f64 {
        self.xi.norm()
    }
}

fn duplicate_targets(schedules: &[ModulationSchedule]) -> Result<()> {
    for (i, a) in schedules.iter().enumerate() {
        if schedules[..i].iter().any(|b| b.target == a.target) {
            return Err(Error::Config(format!("parameter {:?} modulated twice", a.target)));
        }
    }
    Ok(())
}

/// First-order rate `Xi_{n,T,S} = (s/2) sum_k sum_L Upsilon e^{-i s phi_L}`.
pub fn transition_rate_general(
    n: usize,
    from_label: usize,
    to_label: usize,
    spectrum: &DressedSpectrum,
    schedules: &[ModulationSchedule],
) -> Result<TransitionRate> {
    if from_label == to_label {
        return Err(Error::domain("transition needs two distinct dressed states"));
    }
    duplicate_targets(schedules)?;
    let t = spectrum.entry(n, from_label)?;
    let s = spectrum.entry(n, to_label)?;
    let diff = t.lambda_tilde() - s.lambda_tilde();
    if diff.abs() < DEGENERACY_LIMIT {
        return Err(Error::Degenerate {
            subspace: n,
            difference: diff.abs(),
        });
    }
    let sign = diff.signum();
    let mut xi = C64::default();
    for schedule in schedules {
        let ups = upsilon_sum(schedule, &t.state, &s.state)?;
        xi += C64::from_polar(1.0, -sign * schedule.phi) * ups;
    }
    Ok(TransitionRate {
        n,
        from_label,
        to_label,
        xi: xi * (sign / 2.0),
        eta_res: diff.abs(),
    })
}

/// Lowest-order two-photon rate `Xi_{n,k,k+2}` in closed form.
pub fn two_photon_rate_closed_form(
    n: usize,
    k: usize,
    params: &SystemParams,
    schedules: &[ModulationSchedule],
) -> Result<TransitionRate> {
    duplicate_targets(schedules)?;
    let d = params.detuning();
    if d == 0.0 {
        return Err(Error::domain("closed-form rate needs a nonzero detuning"));
    }
    let big_n = params.n_qubits;
    let eta_res = eta_resonant(n, k, params);
    let zero = TransitionRate {
        n,
        from_label: k,
        to_label: k + 2,
        xi: C64::default(),
        eta_res,
    };
    if k + 2 > big_n || k > n || n - k < 2 {
        return Ok(zero);
    }
    let (nq, kf, big_k) = (big_n as f64, k as f64, (n - k) as f64);
    let dsign = d.signum();
    let g = params.coupling;
    let prefactor = dsign
        * g
        * (g / d).powi(3)
        * ((nq - kf) * (nq - kf - 1.0) * (kf + 1.0) * (kf + 2.0) * big_k * (big_k - 1.0)).sqrt();
    let mut bracket = C64::default();
    for s in schedules {
        let phase = C64::from_polar(1.0, -dsign * s.phi);
        let weight = match collective_target(s)? {
            ModulationTarget::CavityFreq => s.epsilon / d,
            ModulationTarget::AtomFreq(_) => -s.epsilon / d,
            ModulationTarget::Coupling(_) => {
                if g == 0.0 {
                    return Ok(zero);
                }
                -s.epsilon / g
            }
        };
        bracket += phase * weight;
    }
    Ok(TransitionRate {
        xi: bracket * prefactor,
        ..zero
    })
}

/// `eta_r = 2 |Delta + delta (2N + 2n - 6k - 5)|`.
pub fn eta_resonant(n: usize, k: usize, params: &SystemParams) -> f64 {
    let shift = 2.0 * params.n_qubits as f64 + 2.0 * n as f64 - 6.0 * k as f64 - 5.0;
    2.0 * (params.detuning() + params.dispersive_shift() * shift).abs()
}

/// Slow phase `Phi_{m,S}(t)`.
pub fn phase_phi(m: usize, label: usize, t: f64, spectrum: &DressedSpectrum, schedules: &[ModulationSchedule]) -> Result<f64> {
    let entry = spectrum.entry(m, label)?;
    let mut phi = 0.0;
    for s in schedules {
        if s.eta == 0.0 {
            return Err(Error::domain("slow phase needs a nonzero modulation frequency"));
        }
        let ups = upsilon_sum(s, &entry.state, &entry.state)?;
        phi += ups / s.eta * ((s.eta * t + s.phi).cos() - s.phi.cos());
    }
    Ok(phi)
}

/// Amplitudes `b` over the dressed states of one excitation subspace.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveState {
    pub m: usize,
    pub labels: Vec<usize>,
    pub b: Vec<C64>,
    pub phi: Vec<f64>,
    pub t: f64,
}

impl EffectiveState {
    /// All weight on the dressed state `(m, label)` at `t = 0`.
    pub fn concentrated(model: &EffectiveModel, label: usize) -> Result<Self> {
        let idx = model.position(label)?;
        let mut b = vec![C64::default(); model.labels.len()];
        b[idx] = C64::new(1.0, 0.0);
        Ok(Self {
            m: model.m,
            labels: model.labels.clone(),
            b,
            phi: vec![0.0; model.labels.len()],
            t: 0.0,
        })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.b.iter().map(|x| x.norm_sqr()).sum()
    }

    pub fn population(&self, label: usize) -> Option<f64> {
        self.labels.iter().position(|&l| l == label).map(|i| self.b[i].norm_sqr())
    }
}

/// Rates and frequencies of the effective equations in subspace `m`.
#[derive(Clone, Debug)]
pub struct EffectiveModel {
    pub m: usize,
    pub labels: Vec<usize>,
    pub lambda_tilde: Vec<f64>,
    /// `xi[t][s]`, zero on the diagonal
    pub xi: Vec<Vec<C64>>,
    /// per label: `(sum_k Upsilon_SS, phi_L)` for each schedule
    diagonal: Vec<Vec<(f64, f64)>>,
}

impl EffectiveModel {
    pub fn new(spectrum: &DressedSpectrum, m: usize, schedules: &[ModulationSchedule]) -> Result<Self> {
        let entries: Vec<&DressedEntry> = spectrum.subspace(m).collect();
        if entries.is_empty() {
            return Err(Error::domain(format!("subspace m = {m} not in the spectrum")));
        }
        let labels: Vec<usize> = entries.iter().map(|e| e.label).collect();
        let lambda_tilde = entries.iter().map(|e| e.lambda_tilde()).collect();
        let mut xi = vec![vec![C64::default(); labels.len()]; labels.len()];
        for (i, &a) in labels.iter().enumerate() {
            for (j, &b) in labels.iter().enumerate() {
                if i != j {
                    xi[i][j] = transition_rate_general(m, a, b, spectrum, schedules)?.xi;
                }
            }
        }
        let diagonal = entries
            .iter()
            .map(|e| {
                schedules
                    .iter()
                    .map(|s| Ok((upsilon_sum(s, &e.state, &e.state)?, s.phi)))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            m,
            labels,
            lambda_tilde,
            xi,
            diagonal,
        })
    }

    /// Restriction to a pair of labels.
    pub fn restrict(&self, keep: &[usize]) -> Result<Self> {
        let idx: Vec<usize> = keep.iter().map(|&l| self.position(l)).collect::<Result<_>>()?;
        Ok(Self {
            m: self.m,
            labels: keep.to_vec(),
            lambda_tilde: idx.iter().map(|&i| self.lambda_tilde[i]).collect(),
            xi: idx.iter().map(|&i| idx.iter().map(|&j| self.xi[i][j]).collect()).collect(),
            diagonal: idx.iter().map(|&i| self.diagonal[i].clone()).collect(),
        })
    }

    fn position(&self, label: usize) -> Result<usize> {
        self.labels
            .iter()
            .position(|&l| l == label)
            .ok_or_else(|| Error::domain(format!("label {label} not in subspace {}", self.m)))
    }

    fn phi(&self, i: usize, eta: f64, t: f64) -> f64 {
        self.diagonal[i]
            .iter()
            .map(|&(ups, phase)| ups / eta * ((eta * t + phase).cos() - phase.cos()))
            .sum()
    }
}

struct EffectiveSystem<'a> {
    model: &'a EffectiveModel,
    eta: f64,
}

impl OdeSystem for EffectiveSystem<'_> {
    fn rhs(&mut self, t: f64, b: &[C64], db: &mut [C64]) {
        let lt = &self.model.lambda_tilde;
        for (i, d) in db.iter_mut().enumerate() {
            let mut acc = C64::default();
            for (j, bj) in b.iter().enumerate() {
                if i == j {
                    continue;
                }
                let diff = lt[i] - lt[j];
                let s = diff.signum();
                let phase = C64::from_polar(1.0, t * s * (diff.abs() - self.eta));
                acc += self.model.xi[i][j] * phase * bj;
            }
            *d = acc;
        }
    }
}

/// Integrates `db_T/dt = sum_{S != T} Xi_{T,S} e^{i t s (|l_T - l_S| - eta)} b_S`.
pub fn evolve_effective(b0: &EffectiveState, model: &EffectiveModel, eta: f64, t_grid: &[f64]) -> Result<Vec<EffectiveState>> {
    if b0.labels != model.labels {
        return Err(Error::domain("initial amplitudes and model use different labels"));
    }
    if (b0.norm_sqr() - 1.0).abs() > 1e-9 {
        return Err(Error::Normalization { norm_sqr: b0.norm_sqr() });
    }
    if eta == 0.0 {
        return Err(Error::domain("effective dynamics need a nonzero modulation frequency"));
    }
    let mut system = EffectiveSystem { model, eta };
    let cfg = StepperConfig::with_tol(EFFECTIVE_TOL);
    let mut out = Vec::with_capacity(t_grid.len());
    integrate(&mut system, b0.b.clone(), t_grid, &cfg, |_, t, b| {
        out.push(EffectiveState {
            m: model.m,
            labels: model.labels.clone(),
            b: b.to_vec(),
            phi: (0..model.labels.len()).map(|i| model.phi(i, eta, t)).collect(),
            t,
        });
        Ok(())
    })?;
    Ok(out)
}

/// Resonant two-level solution:
/// `b_T = b_T0 cos|Xi|t + (Xi/|Xi|) b_S0 sin|Xi|t`,
/// `b_S = b_S0 cos|Xi|t - (Xi*/|Xi|) b_T0 sin|Xi|t`.
pub fn rwa_solution(b_t0: C64, b_s0: C64, xi: C64, t: f64) -> (C64, C64) {
    let r = xi.norm();
    if r == 0.0 {
        return (b_t0, b_s0);
    }
    let u = xi / r;
    let (sin, cos) = (r * t).sin_cos();
    (b_t0 * cos + u * b_s0 * sin, b_s0 * cos - u.conj() * b_t0 * sin)
}

/// `|psi> = sum_S e^{i Phi_S} e^{-i t lambda~_S} b_S |phi_{m,S}>`, normalized.
pub fn reconstruct_state(state: &EffectiveState, spectrum: &DressedSpectrum) -> Result<StateVector> {
    if state.labels.len() != state.b.len() || state.labels.len() != state.phi.len() {
        return Err(Error::domain("effective state has mismatched label, amplitude and phase lists"));
    }
    let mut amps = vec![C64::default(); spectrum.space().dim()];
    for ((&label, &b), &phi) in state.labels.iter().zip(&state.b).zip(&state.phi) {
        let entry = spectrum.entry(state.m, label)?;
        let coef = C64::from_polar(1.0, phi - state.t * entry.lambda_tilde()) * b;
        for (a, x) in amps.iter_mut().zip(entry.state.amplitudes()) {
            *a += coef * x;
        }
    }
    StateVector::normalized(*spectrum.space(), amps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::dicke_fock_state;
    use proptest::prelude::*;

    fn fig1(with_crt: bool) -> SystemParams {
        let g = 0.08 / 2f64.sqrt();
        SystemParams::from_detuning(1.0, g, -9.0 * g * 2f64.sqrt(), 2, with_crt)
    }

    fn g_mod(p: &SystemParams, eta: f64) -> ModulationSchedule {
        ModulationSchedule::new(ModulationTarget::Coupling(None), 0.1 * p.coupling, eta, 0.0).unwrap()
    }

    #[test]
    fn perturbative_lambda_examples() {
        let mut p = fig1(false);
        assert!((lambda_perturbative(5, 0, &p).unwrap() - (5.0 + 10.0 * p.dispersive_shift())).abs() < 1e-15);
        p.coupling = 0.0;
        for k in 0..=2 {
            let expect = 5.0 - k as f64 * p.detuning();
            assert_eq!(lambda_perturbative(5, k, &p).unwrap(), expect);
        }
        assert!(lambda_perturbative(1, 2, &p).is_err());
    }

    #[test]
    fn bare_limit_of_dressed_states() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let mut p = fig1(false);
        p.coupling = 0.0;
        let s = dressed_state_perturbative(&space, 5, 1, &p).unwrap();
        assert_eq!(s, dicke_fock_state(&space, 1, 4).unwrap());
        let exact = spectrum_exact(&space, &p).unwrap();
        for e in exact.entries() {
            assert_eq!(e.lambda, e.m as f64 - e.label as f64 * p.detuning());
        }
    }

    #[test]
    fn k0_dressed_state_has_no_lower_components() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let s = dressed_state_perturbative(&space, 5, 0, &fig1(false)).unwrap();
        assert!(s.amplitude(0, 5).re > 0.0);
        assert!(s.amplitude(1, 4).norm() > 0.0);
        assert!(s.amplitude(2, 3).norm() > 0.0);
    }

    #[test]
    fn dressed_states_overlap_exact_eigenvectors() {
        let space = SpaceSpec::collective(2, 10).unwrap();
        let p = fig1(false);
        let exact = spectrum_exact(&space, &p).unwrap();
        for m in 0..=8 {
            for e in exact.subspace(m) {
                let pert = dressed_state_perturbative(&space, m, e.label, &p).unwrap();
                assert!(pert.inner(&e.state).norm() > 0.999, "m = {m}, k = {}", e.label);
            }
        }
    }

    #[test]
    fn tc_subspaces_reproduce_full_diagonalization() {
        let space = SpaceSpec::collective(3, 6).unwrap();
        let p = SystemParams::from_detuning(1.0, 0.03, -0.5, 3, false);
        let spec = spectrum_exact(&space, &p).unwrap();
        let mut ours: Vec<f64> = spec.entries().iter().map(|e| e.lambda).collect();
        let h = hamiltonian_static(&space, &p).unwrap().to_dense_real();
        // full spectrum restricted to complete subspaces m <= n_max
        let total = crate::hilbert::build_operators(&space).total_excitation();
        let eig = h.symmetric_eigen();
        let mut full: Vec<f64> = Vec::new();
        for (i, &v) in eig.eigenvalues.iter().enumerate() {
            let col: Vec<C64> = eig.eigenvectors.column(i).iter().map(|&x| C64::new(x, 0.0)).collect();
            if total.expectation(&col).re.round() as usize <= space.n_max() {
                full.push(v);
            }
        }
        ours.sort_by(f64::total_cmp);
        full.sort_by(f64::total_cmp);
        assert_eq!(ours.len(), full.len());
        for (a, b) in ours.iter().zip(&full) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn two_by_two_block_matches_closed_form() {
        let space = SpaceSpec::collective(2, 4).unwrap();
        let p = fig1(false);
        let spec = spectrum_exact(&space, &p).unwrap();
        // m = 1: {|0,1>, |1,0>} with coupling g sqrt(2)
        let (a, b) = (p.omega, p.atom_freq);
        let c = p.coupling * 2f64.sqrt();
        let mean = (a + b) / 2.0;
        let half = (((a - b) / 2.0).powi(2) + c * c).sqrt();
        let mut got: Vec<f64> = spec.subspace(1).map(|e| e.lambda).collect();
        got.sort_by(f64::total_cmp);
        assert!((got[0] - (mean - half)).abs() < 1e-14);
        assert!((got[1] - (mean + half)).abs() < 1e-14);
    }

    fn pert_error(g: f64, delta: f64) -> f64 {
        let p = SystemParams::from_detuning(1.0, g, delta, 2, false);
        let space = SpaceSpec::collective(2, 8).unwrap();
        let exact = spectrum_exact(&space, &p).unwrap();
        exact
            .entries()
            .iter()
            .filter(|e| e.m <= 6)
            .map(|e| (e.lambda - lambda_perturbative(e.m, e.label, &p).unwrap()).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn perturbative_error_is_higher_order() {
        let g = 0.08 / 2f64.sqrt();
        let delta = -9.0 * g * 2f64.sqrt();
        let ratio = pert_error(g, delta) / pert_error(g / 2.0, delta);
        assert!(ratio >= 6.0, "ratio {ratio}");
    }

    #[test]
    fn crt_shift_examples() {
        let space = SpaceSpec::collective(2, 12).unwrap();
        let p = fig1(true);
        let tc = spectrum_exact(&space, &p.with_crt(false)).unwrap();
        assert!(crt_shift(0, 0, &tc, &p).unwrap() < 0.0);
        let mut free = p;
        free.coupling = 0.0;
        let tc0 = spectrum_exact(&space, &free.with_crt(false)).unwrap();
        assert_eq!(crt_shift(3, 1, &tc0, &free).unwrap(), 0.0);
        assert!(matches!(crt_shift(11, 0, &tc, &p), Err(Error::Cutoff { .. })));
        let crt = spectrum_exact(&space, &p).unwrap();
        assert!(crt_shift(0, 0, &crt, &p).is_err());
    }

    #[test]
    fn crt_shift_improves_eigenvalues() {
        let space = SpaceSpec::collective(2, 16).unwrap();
        let p = fig1(true);
        let exact = spectrum_exact(&space, &p).unwrap();
        let eff = effective_spectrum(&space, &p).unwrap();
        let (mut plain, mut shifted) = (0.0f64, 0.0f64);
        for e in eff.entries().iter().filter(|e| e.m <= 8) {
            let x = exact.entry(e.m, e.label).unwrap().lambda;
            plain = plain.max((e.lambda - x).abs());
            shifted = shifted.max((e.lambda_tilde() - x).abs());
        }
        assert!(plain / shifted >= 5.0, "plain {plain:e}, shifted {shifted:e}");
    }

    #[test]
    fn upsilon_examples() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let p = fig1(false);
        let spec = spectrum_exact(&space, &p).unwrap();
        let (t, s) = (&spec.entry(5, 0).unwrap().state, &spec.entry(5, 2).unwrap().state);
        assert_eq!(upsilon(ModulationTarget::Coupling(None), 0.0, 0, t, s).unwrap(), 0.0);
        for k in 1..=2 {
            assert_eq!(upsilon(ModulationTarget::CavityFreq, 0.1, k, t, s).unwrap(), 0.0);
        }
        let mut free = p;
        free.coupling = 0.0;
        let bare = spectrum_exact(&space, &free).unwrap();
        let b = &bare.entry(5, 0).unwrap().state;
        for k in 0..=2 {
            assert_eq!(upsilon(ModulationTarget::AtomFreq(None), 0.07, k, b, b).unwrap(), 0.0);
        }
    }

    #[test]
    fn closed_form_rate_examples() {
        let p = fig1(true);
        let g = p.coupling;
        let r = two_photon_rate_closed_form(5, 0, &p, &[g_mod(&p, 1.5)]).unwrap();
        let expect = 0.1 * g * 80f64.sqrt() / (9.0 * 2f64.sqrt()).powi(3);
        assert!((r.magnitude() - expect).abs() < 1e-12 * expect);
        assert!((r.magnitude() / g - 4.34e-4).abs() < 1e-6);

        let d = p.detuning().abs();
        let w = ModulationSchedule::new(ModulationTarget::CavityFreq, 0.05 * d, 1.5, 0.3).unwrap();
        let o = ModulationSchedule::new(ModulationTarget::AtomFreq(None), 0.05 * d, 1.5, 0.3).unwrap();
        assert_eq!(two_photon_rate_closed_form(5, 0, &p, &[w, o]).unwrap().magnitude(), 0.0);
        // k = N - 1 and K < 2
        assert_eq!(two_photon_rate_closed_form(5, 1, &p, &[g_mod(&p, 1.5)]).unwrap().magnitude(), 0.0);
        assert_eq!(two_photon_rate_closed_form(1, 0, &p, &[g_mod(&p, 1.5)]).unwrap().magnitude(), 0.0);
    }

    #[test]
    fn eta_resonant_examples() {
        let mut p = fig1(false);
        let d = p.detuning().abs();
        let factor = eta_resonant(5, 0, &p) / (2.0 * d);
        assert!((factor - (1.0 + 9.0 / 162.0)).abs() < 1e-12);
        for n_qubits in 2..8 {
            p.n_qubits = n_qubits;
            assert_eq!(eta_resonant(4, 0, &p), eta_resonant(7, 1, &p));
        }
        p.coupling = 0.0;
        assert_eq!(eta_resonant(5, 0, &p), 2.0 * d);
    }

    #[test]
    fn general_rate_tracks_closed_form() {
        let space = SpaceSpec::collective(2, 10).unwrap();
        let p = fig1(false);
        let spec = spectrum_exact(&space, &p).unwrap();
        let sched = [g_mod(&p, 1.5)];
        let general = transition_rate_general(5, 0, 2, &spec, &sched).unwrap();
        let closed = two_photon_rate_closed_form(5, 0, &p, &sched).unwrap();
        let rel = (general.magnitude() - closed.magnitude()).abs() / closed.magnitude();
        assert!(rel < 0.25, "relative difference {rel}");
        // selectivity
        assert!(p.dispersive_shift().abs() / closed.magnitude() > 10.0);
    }

    #[test]
    fn degenerate_levels_are_refused() {
        let space = SpaceSpec::collective(2, 6).unwrap();
        let mut p = fig1(false);
        p.coupling = 0.0;
        p.atom_freq = p.omega; // Delta = 0: |0,n> and |1,n-1> coincide
        let spec = spectrum_exact(&space, &p).unwrap();
        let r = transition_rate_general(3, 0, 1, &spec, &[g_mod(&fig1(false), 1.0)]);
        assert!(matches!(r, Err(Error::Degenerate { .. })));
    }

    #[test]
    fn phase_phi_examples() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let p = fig1(false);
        let spec = spectrum_exact(&space, &p).unwrap();
        let eta = 1.53;
        let sched = [g_mod(&p, eta)];
        assert_eq!(phase_phi(5, 0, 0.0, &spec, &sched).unwrap(), 0.0);
        assert_eq!(phase_phi(5, 0, 3.0, &spec, &[]).unwrap(), 0.0);
        let period = std::f64::consts::TAU / eta;
        for t in [0.3, 2.0, 11.7] {
            let a = phase_phi(5, 0, t, &spec, &sched).unwrap();
            let b = phase_phi(5, 0, t + period, &spec, &sched).unwrap();
            assert!((a - b).abs() < 1e-12);
        }
        let bad = ModulationSchedule { eta: 0.0, ..sched[0] };
        assert!(phase_phi(5, 0, 1.0, &spec, &[bad]).is_err());
    }

    #[test]
    fn rwa_examples() {
        let xi = C64::new(0.3, -0.4);
        let (bt, bs) = rwa_solution(C64::new(1.0, 0.0), C64::default(), xi, 0.0);
        assert_eq!((bt, bs), (C64::new(1.0, 0.0), C64::default()));
        let (_, bs) = rwa_solution(C64::new(1.0, 0.0), C64::default(), xi, std::f64::consts::FRAC_PI_2 / xi.norm());
        assert!((bs.norm() - 1.0).abs() < 1e-14);
        let (bt, bs) = rwa_solution(C64::new(0.2, 0.1), C64::new(0.3, 0.0), C64::default(), 5.0);
        assert_eq!((bt, bs), (C64::new(0.2, 0.1), C64::new(0.3, 0.0)));
    }

    proptest! {
        #[test]
        fn rwa_preserves_norm(a in 0.0f64..1.0, th in 0.0f64..6.3, xr in -1.0f64..1.0, xi in -1.0f64..1.0, t in 0.0f64..50.0) {
            let bt = C64::from_polar(a.sqrt(), th);
            let bs = C64::new((1.0 - a).sqrt(), 0.0);
            let (x, y) = rwa_solution(bt, bs, C64::new(xr, xi), t);
            prop_assert!((x.norm_sqr() + y.norm_sqr() - 1.0).abs() < 1e-14);
        }

        #[test]
        fn rate_antisymmetry(g in 0.005f64..0.02, delta in -0.9f64..-0.3, eg in 0.0f64..0.2,
                             ew in 0.0f64..0.05, eo in 0.0f64..0.05,
                             pg in 0.0f64..6.3, pw in 0.0f64..6.3, po in 0.0f64..6.3) {
            let p = SystemParams::from_detuning(1.0, g, delta, 3, false);
            let space = SpaceSpec::collective(3, 8).unwrap();
            let spec = spectrum_exact(&space, &p).unwrap();
            let sched = [
                ModulationSchedule::new(ModulationTarget::Coupling(None), eg * g, 1.0, pg).unwrap(),
                ModulationSchedule::new(ModulationTarget::CavityFreq, ew, 1.0, pw).unwrap(),
                ModulationSchedule::new(ModulationTarget::AtomFreq(None), eo, 1.0, po).unwrap(),
            ];
            for (t, s) in [(0, 2), (0, 1), (1, 3), (2, 3)] {
                let a = transition_rate_general(6, t, s, &spec, &sched).unwrap().xi;
                let b = transition_rate_general(6, s, t, &spec, &sched).unwrap().xi;
                prop_assert!((a.conj() + b).norm() <= 1e-14);
            }
        }
    }

    #[test]
    fn effective_two_level_matches_rwa() {
        let space = SpaceSpec::collective(2, 10).unwrap();
        let p = fig1(false);
        let spec = spectrum_exact(&space, &p).unwrap();
        let sched = [g_mod(&p, 1.5)];
        let model = EffectiveModel::new(&spec, 5, &sched).unwrap().restrict(&[0, 2]).unwrap();
        let eta = (model.lambda_tilde[0] - model.lambda_tilde[1]).abs();
        let xi = model.xi[0][1];
        let b0 = EffectiveState::concentrated(&model, 0).unwrap();
        let horizon = 2.0 * std::f64::consts::PI / xi.norm();
        let grid = crate::ode::uniform_grid(0.0, horizon, 41);
        let traj = evolve_effective(&b0, &model, eta, &grid).unwrap();
        for st in &traj {
            let (bt, bs) = rwa_solution(C64::new(1.0, 0.0), C64::default(), xi, st.t);
            assert!((st.b[0] - bt).norm() < 1e-8);
            assert!((st.b[1] - bs).norm() < 1e-8);
            assert!((st.norm_sqr() - 1.0).abs() < 1e-8);
        }
    }

    #[test]
    fn effective_lineshape_off_resonance() {
        let space = SpaceSpec::collective(2, 10).unwrap();
        let p = fig1(false);
        let spec = spectrum_exact(&space, &p).unwrap();
        let model = EffectiveModel::new(&spec, 5, &[g_mod(&p, 1.5)]).unwrap().restrict(&[0, 2]).unwrap();
        let xi = model.xi[0][1].norm();
        let detuning = 10.0 * xi;
        let eta = (model.lambda_tilde[0] - model.lambda_tilde[1]).abs() + detuning;
        let b0 = EffectiveState::concentrated(&model, 0).unwrap();
        let grid = crate::ode::uniform_grid(0.0, 4.0 * std::f64::consts::PI / xi, 4001);
        let peak = evolve_effective(&b0, &model, eta, &grid)
            .unwrap()
            .iter()
            .map(|s| s.population(2).unwrap())
            .fold(0.0, f64::max);
        let expect = xi * xi / (xi * xi + (detuning / 2.0).powi(2));
        assert!((peak - expect).abs() < 1e-3 * expect.max(1e-3) + 1e-4, "{peak} vs {expect}");
    }

    #[test]
    fn no_rates_keep_amplitudes_constant() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let spec = spectrum_exact(&space, &fig1(false)).unwrap();
        let model = EffectiveModel::new(&spec, 4, &[]).unwrap();
        let b0 = EffectiveState::concentrated(&model, 1).unwrap();
        let traj = evolve_effective(&b0, &model, 1.4, &[0.0, 10.0, 100.0]).unwrap();
        for s in traj {
            assert_eq!(s.b, b0.b);
        }
    }

    #[test]
    fn reconstruction_at_time_zero_is_the_dressed_state() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let spec = spectrum_exact(&space, &fig1(false)).unwrap();
        let model = EffectiveModel::new(&spec, 5, &[g_mod(&fig1(false), 1.5)]).unwrap();
        let b0 = EffectiveState::concentrated(&model, 0).unwrap();
        let psi = reconstruct_state(&b0, &spec).unwrap();
        assert!((psi.inner(&spec.entry(5, 0).unwrap().state).norm() - 1.0).abs() < 1e-12);
        assert!((psi.norm_sqr() - 1.0).abs() < 1e-10);
        let mut missing = b0.clone();
        missing.m = 40;
        assert!(reconstruct_state(&missing, &spec).is_err());
    }
}
