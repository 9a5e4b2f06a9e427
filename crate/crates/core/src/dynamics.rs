//! Exact time evolution: Schrodinger equation for state vectors and the
//! Lindblad master equation for density matrices.
//!
//! Both integrate in the interaction picture of the static diagonal energies
//! `E = omega0 n + A(atom)`. The transformation is exact (all coupling
//! terms, counter-rotating ones included, are kept), leaves every basis
//! population untouched, and removes the `n omega0` phase winding that would
//! otherwise dominate the step size. States handed to callers are always
//! mapped back to the laboratory frame.

use std::f64::consts::TAU;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, ObservableSet, SpaceSpec, StateVector};
use crate::model::{DissipationRates, ModulatedHamiltonian};
use crate::ode::{integrate, uniform_grid, IntegratorStats, OdeSystem, StepperConfig};
use crate::sparse::{Monomial, SparseOp};

pub const NORM_DRIFT_LIMIT: f64 = 1e-7;
pub const TRACE_DRIFT_LIMIT: f64 = 1e-7;
pub const EIGENVALUE_FLOOR: f64 = -1e-6;
pub const CUTOFF_POPULATION_LIMIT: f64 = 1e-6;

/// What to do when population reaches the top Fock level.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CutoffPolicy {
    Ignore,
    #[default]
    Warn,
    Error,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EvolveOptions {
    pub t_start: f64,
    pub t_end: f64,
    pub sample_count: usize,
    pub tol: f64,
    pub store_states: bool,
    pub cutoff_policy: CutoffPolicy,
    /// Fail when the norm (or trace) drifts beyond the limit.
    pub fail_on_drift: bool,
    pub propagation: Propagation,
}

/// How unitary runs advance the state.
///
/// With a single modulation frequency `H(t)` is periodic and the state can be
/// carried from period to period by the one-period propagator; only the
/// fractional period before each sample is integrated directly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Propagation {
    /// Periodic when the run spans many periods, direct otherwise.
    #[default]
    Auto,
    Direct,
    Periodic,
}

impl EvolveOptions {
    pub fn new(t_end: f64, sample_count: usize, tol: f64) -> Self {
        Self {
            t_start: 0.0,
            t_end,
            sample_count,
            tol,
            store_states: false,
            cutoff_policy: CutoffPolicy::Warn,
            fail_on_drift: true,
            propagation: Propagation::Auto,
        }
    }

    pub fn propagation(mut self, propagation: Propagation) -> Self {
        self.propagation = propagation;
        self
    }

    pub fn store_states(mut self, store: bool) -> Self {
        self.store_states = store;
        self
    }

    pub fn cutoff_policy(mut self, policy: CutoffPolicy) -> Self {
        self.cutoff_policy = policy;
        self
    }

    pub fn times(&self) -> Vec<f64> {
        uniform_grid(self.t_start, self.t_end, self.sample_count)
    }

    fn validate(&self) -> Result<()> {
        if !(1e-12..=1e-6).contains(&self.tol) {
            return Err(Error::Config(format!(
                "tolerance {} outside [1e-12, 1e-6]",
                self.tol
            )));
        }
        if self.sample_count < 2 || !(self.t_end > self.t_start) {
            return Err(Error::Config(
                "need at least two samples over a positive time span".into(),
            ));
        }
        Ok(())
    }
}

/// Step cap that keeps every drive period resolved by at least 20 steps.
pub fn step_cap(ham: &ModulatedHamiltonian) -> f64 {
    ham.max_drive_frequency()
        .map_or(f64::INFINITY, |eta| TAU / eta / 20.0)
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunStats {
    pub integrator: IntegratorStats,
    pub max_norm_drift: f64,
    pub max_trace_drift: f64,
    pub min_eigenvalue: f64,
    pub max_hermiticity_error: f64,
    pub max_cutoff_population: f64,
    pub propagator_unitarity_error: Option<f64>,
    pub warnings: Vec<String>,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub observables: Vec<ObservableSet>,
    pub states: Option<Vec<StateVector>>,
    pub densities: Option<Vec<DensityMatrix>>,
    pub tol: f64,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn series(&self, selector: Observable) -> Vec<f64> {
        self.observables.iter().map(|o| selector.extract(o)).collect()
    }
}

/// Scalar picked out of an [`ObservableSet`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Observable {
    PhotonNumber,
    AtomicExcitation,
    PhotonProbability(usize),
    AtomProbability(usize),
}

impl Observable {
    pub fn extract(&self, o: &ObservableSet) -> f64 {
        match *self {
            Observable::PhotonNumber => o.n_ph,
            Observable::AtomicExcitation => o.n_at,
            Observable::PhotonProbability(k) => o.p_ph.get(k).copied().unwrap_or(0.0),
            Observable::AtomProbability(m) => o.p_at.get(m).copied().unwrap_or(0.0),
        }
    }
}

fn cutoff_population(space: &SpaceSpec, pops: &[f64]) -> f64 {
    (0..space.atom_configs())
        .map(|a| pops[space.index(a, space.n_max())])
        .sum()
}

fn check_cutoff(space: &SpaceSpec, pop: f64, policy: CutoffPolicy, stats: &mut RunStats, t: f64) -> Result<()> {
    stats.max_cutoff_population = stats.max_cutoff_population.max(pop);
    if pop > CUTOFF_POPULATION_LIMIT {
        match policy {
            CutoffPolicy::Ignore => {}
            CutoffPolicy::Warn => {
                if stats.warnings.is_empty() {
                    let msg = format!(
                        "population {pop:.2e} at the Fock cutoff n_max = {} (t = {t:.4e})",
                        space.n_max()
                    );
                    log::warn!("{msg}");
                    stats.warnings.push(msg);
                }
            }
            CutoffPolicy::Error => {
                return Err(Error::CutoffSaturation {
                    n_max: space.n_max(),
                    population: pop,
                })
            }
        }
    }
    Ok(())
}

struct OffDiagonalTerm<'a> {
    op: &'a SparseOp,
    index: usize,
}

struct DiagonalDrive {
    diag: Vec<f64>,
    index: usize,
}

/// Splits the Hamiltonian into frame-rotated off-diagonal terms and the
/// modulated remainder of diagonal terms.
fn split_terms(ham: &ModulatedHamiltonian) -> (Vec<OffDiagonalTerm<'_>>, Vec<DiagonalDrive>) {
    let mut off = Vec::new();
    let mut diag = Vec::new();
    for (index, term) in ham.terms().iter().enumerate() {
        if term.diagonal {
            if term.drive.is_some() {
                diag.push(DiagonalDrive {
                    diag: term.op.diagonal().iter().map(|d| d.re).collect(),
                    index,
                });
            }
        } else {
            off.push(OffDiagonalTerm { op: &term.op, index });
        }
    }
    (off, diag)
}

struct SchrodingerSystem<'a> {
    ham: &'a ModulatedHamiltonian,
    off: Vec<OffDiagonalTerm<'a>>,
    diag: Vec<DiagonalDrive>,
    phases: Vec<C64>,
    rotated: Vec<C64>,
    acc: Vec<C64>,
}

impl<'a> SchrodingerSystem<'a> {
    fn new(ham: &'a ModulatedHamiltonian) -> Self {
        let dim = ham.space().dim();
        let (off, diag) = split_terms(ham);
        Self {
            ham,
            off,
            diag,
            phases: vec![C64::default(); dim],
            rotated: vec![C64::default(); dim],
            acc: vec![C64::default(); dim],
        }
    }
}

impl OdeSystem for SchrodingerSystem<'_> {
    fn rhs(&mut self, t: f64, c: &[C64], dc: &mut [C64]) {
        let terms = self.ham.terms();
        self.ham.frame().phases(self.ham.space(), t, &mut self.phases);
        for ((r, p), x) in self.rotated.iter_mut().zip(&self.phases).zip(c) {
            *r = p * x;
        }
        self.acc.iter_mut().for_each(|a| *a = C64::default());
        for term in &self.off {
            let coef = terms[term.index].coefficient(t);
            term.op.apply_add(C64::new(coef, 0.0), &self.rotated, &mut self.acc);
        }
        // dc = -i conj(p) acc
        for ((d, p), a) in dc.iter_mut().zip(&self.phases).zip(&self.acc) {
            let v = p.conj() * a;
            *d = C64::new(v.im, -v.re);
        }
        for drive in &self.diag {
            let m = terms[drive.index].modulation(t);
            for ((d, e), x) in dc.iter_mut().zip(&drive.diag).zip(c) {
                let v = x * (m * e);
                *d += C64::new(v.im, -v.re);
            }
        }
    }
}

/// Lab-frame state from interaction-picture amplitudes at time `t`.
fn to_lab(ham: &ModulatedHamiltonian, t: f64, c: &[C64]) -> Vec<C64> {
    let mut ph = vec![C64::default(); c.len()];
    ham.frame().phases(ham.space(), t, &mut ph);
    ph.iter().zip(c).map(|(p, x)| p * x).collect()
}

/// Interaction-picture amplitudes from a lab-frame state at time `t`.
fn from_lab(ham: &ModulatedHamiltonian, t: f64, psi: &[C64]) -> Vec<C64> {
    let mut ph = vec![C64::default(); psi.len()];
    ham.frame().phases(ham.space(), t, &mut ph);
    ph.iter().zip(psi).map(|(p, x)| p.conj() * x).collect()
}

/// Solves `i d|psi>/dt = H(t)|psi>`, calling `observer(t, populations)` at
/// every sample. The state itself is passed only when `store_states` is on.
pub fn evolve_schrodinger_with<O>(
    ham: &ModulatedHamiltonian,
    psi0: &StateVector,
    opts: &EvolveOptions,
    mut observer: O,
) -> Result<Trajectory>
where
    O: FnMut(f64, &[f64]),
{
    opts.validate()?;
    if psi0.space() != ham.space() {
        return Err(Error::domain("initial state and Hamiltonian live on different spaces"));
    }
    let norm0 = psi0.norm_sqr();
    if (norm0 - 1.0).abs() > 1e-10 {
        return Err(Error::Normalization { norm_sqr: norm0 });
    }
    let space = *ham.space();
    let times = opts.times();
    let cfg = StepperConfig::with_tol(opts.tol).h_max(step_cap(ham));
    let mut system = SchrodingerSystem::new(ham);
    let mut stats = RunStats::default();
    let mut observables = Vec::with_capacity(times.len());
    let mut states = opts.store_states.then(Vec::new);

    let mut record = |t: f64, c: &[C64], stats: &mut RunStats| -> Result<()> {
        let pops: Vec<f64> = c.iter().map(|x| x.norm_sqr()).collect();
        let norm: f64 = pops.iter().sum();
        let drift = (norm.sqrt() - 1.0).abs();
        stats.max_norm_drift = stats.max_norm_drift.max(drift);
        if opts.fail_on_drift && drift > NORM_DRIFT_LIMIT {
            return Err(Error::NormDrift {
                drift,
                limit: NORM_DRIFT_LIMIT,
                suggested_tol: (opts.tol / 10.0).max(1e-12),
            });
        }
        check_cutoff(&space, cutoff_population(&space, &pops), opts.cutoff_policy, stats, t)?;
        // observables of the unrenormalized state: divide out the measured norm
        let normalized: Vec<f64> = pops.iter().map(|p| p / norm).collect();
        observables.push(ObservableSet::from_populations(&space, &normalized)?);
        observer(t, &pops);
        if let Some(states) = states.as_mut() {
            states.push(StateVector::unchecked(space, to_lab(ham, t, c)));
        }
        Ok(())
    };

    match choose_propagation(ham, opts) {
        None => {
            let y0 = from_lab(ham, opts.t_start, psi0.amplitudes());
            let (_, istats) = integrate(&mut system, y0, &times, &cfg, |_, t, c| {
                record(t, c, &mut stats)
            })?;
            stats.integrator = istats;
        }
        Some(period) => {
            let prop = PeriodPropagator::new(ham, opts.t_start, period)?;
            stats.integrator = prop.stats;
            stats.propagator_unitarity_error = Some(prop.unitarity_error());
            let mut boundary = psi0.amplitudes().to_vec();
            let mut scratch = vec![C64::default(); boundary.len()];
            let mut periods = 0usize;
            for &t in &times {
                let target = ((t - opts.t_start) / period).floor() as usize;
                while periods < target {
                    prop.apply(&boundary, &mut scratch);
                    std::mem::swap(&mut boundary, &mut scratch);
                    periods += 1;
                }
                let t_b = opts.t_start + periods as f64 * period;
                let y0 = from_lab(ham, t_b, &boundary);
                if t - t_b <= 0.0 {
                    record(t, &y0, &mut stats)?;
                    continue;
                }
                let (c, istats) = integrate(&mut system, y0, &[t_b, t], &cfg, |_, _, _| Ok(()))?;
                accumulate(&mut stats.integrator, &istats);
                record(t, &c, &mut stats)?;
            }
        }
    }
    Ok(Trajectory {
        times,
        observables,
        states,
        densities: None,
        tol: opts.tol,
        stats,
    })
}

fn accumulate(total: &mut IntegratorStats, part: &IntegratorStats) {
    total.steps += part.steps;
    total.rejected += part.rejected;
    total.rhs_evals += part.rhs_evals;
    total.min_step = if total.min_step > 0.0 {
        total.min_step.min(part.min_step)
    } else {
        part.min_step
    };
    total.max_step = total.max_step.max(part.max_step);
}

/// Period to propagate by when the one-period map pays off, `None` for direct
/// integration.
fn choose_propagation(ham: &ModulatedHamiltonian, opts: &EvolveOptions) -> Option<f64> {
    let period = ham.common_period()?;
    let periods = (opts.t_end - opts.t_start) / period;
    match opts.propagation {
        Propagation::Direct => None,
        Propagation::Periodic => Some(period),
        Propagation::Auto => (periods > 2.0 * ham.space().dim() as f64 + 50.0).then_some(period),
    }
}

/// Tolerance for the one-period map. Its unitarity error is compounded once
/// per period, so it is held well below the per-run drift limit.
pub const PROPAGATOR_TOL: f64 = 1e-13;

/// Lab-frame propagator over one modulation period, `U(t0 + T, t0)`.
///
/// `H(t + T) = H(t)` makes it the same map for every later period, so long
/// runs reduce to repeated matrix-vector products.
#[derive(Clone, Debug)]
pub struct PeriodPropagator {
    dim: usize,
    period: f64,
    t0: f64,
    /// row-major
    matrix: Vec<C64>,
    pub stats: IntegratorStats,
}

impl PeriodPropagator {
    pub fn new(ham: &ModulatedHamiltonian, t0: f64, period: f64) -> Result<Self> {
        if !(period > 0.0) {
            return Err(Error::domain("propagation period must be positive"));
        }
        let dim = ham.space().dim();
        let cfg = StepperConfig::with_tol(PROPAGATOR_TOL).h_max(step_cap(ham));
        let mut system = SchrodingerSystem::new(ham);
        let mut matrix = vec![C64::default(); dim * dim];
        let mut stats = IntegratorStats::default();
        let end_phases = {
            let mut ph = vec![C64::default(); dim];
            ham.frame().phases(ham.space(), t0 + period, &mut ph);
            ph
        };
        let start_phases = {
            let mut ph = vec![C64::default(); dim];
            ham.frame().phases(ham.space(), t0, &mut ph);
            ph
        };
        for j in 0..dim {
            let mut y0 = vec![C64::default(); dim];
            y0[j] = start_phases[j].conj();
            let (c, s) = integrate(&mut system, y0, &[t0, t0 + period], &cfg, |_, _, _| Ok(()))?;
            accumulate(&mut stats, &s);
            for i in 0..dim {
                matrix[i * dim + j] = end_phases[i] * c[i];
            }
        }
        Ok(Self {
            dim,
            period,
            t0,
            matrix,
            stats,
        })
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `out = U x`
    pub fn apply(&self, x: &[C64], out: &mut [C64]) {
        for (row, o) in self.matrix.chunks_exact(self.dim).zip(out.iter_mut()) {
            *o = row.iter().zip(x).map(|(u, v)| u * v).sum();
        }
    }

    /// `max |U^dag U - 1|` over entries.
    pub fn unitarity_error(&self) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                let mut s = C64::default();
                for k in 0..d {
                    s += self.matrix[k * d + i].conj() * self.matrix[k * d + j];
                }
                if i == j {
                    s -= 1.0;
                }
                worst = worst.max(s.norm());
            }
        }
        worst
    }
}

pub fn evolve_schrodinger(
    ham: &ModulatedHamiltonian,
    psi0: &StateVector,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    evolve_schrodinger_with(ham, psi0, opts, |_, _| {})
}

/// `D[O] rho = (2 O rho O^dag - O^dag O rho - rho O^dag O) / 2`.
pub fn lindblad_dissipator(op: &SparseOp, rho: &DensityMatrix) -> Result<DensityMatrix> {
    if op.dim() != rho.dim() {
        return Err(Error::domain(format!(
            "operator dimension {} does not match density matrix dimension {}",
            op.dim(),
            rho.dim()
        )));
    }
    let o = op.to_dense();
    let r = rho.to_dense();
    let od = o.adjoint();
    let odo = &od * &o;
    let half = C64::new(0.5, 0.0);
    let d = &o * &r * &od - (&odo * &r + &r * &odo) * half;
    let data: Vec<C64> = (0..rho.dim())
        .flat_map(|i| (0..rho.dim()).map(move |j| (i, j)))
        .map(|(i, j)| d[(i, j)])
        .collect();
    DensityMatrix::from_raw(*rho.space(), data)
}

struct Channel {
    rate: f64,
    jump: Monomial,
}

/// Jump operators `sqrt(kappa) a`, `sqrt(gamma_l) sigma_-^(l)` and
/// `sqrt(gamma_phi_l / 2) sigma_z^(l)`.
fn channels(space: &SpaceSpec, rates: &DissipationRates) -> Result<Vec<Channel>> {
    rates.validate()?;
    let ops = crate::hilbert::build_operators(space);
    let mut out = Vec::new();
    let monomial = |op: &SparseOp| {
        op.as_monomial()
            .expect("ladder and spin operators have one nonzero per row and column")
    };
    if rates.kappa > 0.0 {
        out.push(Channel {
            rate: rates.kappa,
            jump: monomial(&ops.a),
        });
    }
    let qubit_rates = rates.gamma.iter().chain(&rates.gamma_phi).any(|&r| r > 0.0);
    if qubit_rates {
        if ops.sigma_minus.is_empty() {
            return Err(Error::domain(
                "qubit relaxation and dephasing need the distinguishable basis",
            ));
        }
        if rates.gamma.len() > space.n_qubits() || rates.gamma_phi.len() > space.n_qubits() {
            return Err(Error::Config("more qubit rates than qubits".into()));
        }
    }
    for (l, &g) in rates.gamma.iter().enumerate() {
        if g > 0.0 {
            out.push(Channel {
                rate: g,
                jump: monomial(&ops.sigma_minus[l]),
            });
        }
    }
    for (l, &g) in rates.gamma_phi.iter().enumerate() {
        if g > 0.0 {
            out.push(Channel {
                rate: g / 2.0,
                jump: monomial(&ops.sigma_z[l]),
            });
        }
    }
    Ok(out)
}

struct LindbladSystem<'a> {
    ham: &'a ModulatedHamiltonian,
    dim: usize,
    /// union sparsity pattern of the off-diagonal terms, CSR
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    /// per off-diagonal term: (term index, [(pattern slot, value)])
    term_slots: Vec<(usize, Vec<(usize, C64)>)>,
    diag: Vec<DiagonalDrive>,
    channels: Vec<Channel>,
    decay: Vec<f64>,
    phases: Vec<C64>,
    vals: Vec<C64>,
    dshift: Vec<f64>,
    x: Vec<C64>,
}

impl<'a> LindbladSystem<'a> {
    fn new(ham: &'a ModulatedHamiltonian, channels: Vec<Channel>) -> Self {
        let dim = ham.space().dim();
        let (off, diag) = split_terms(ham);
        let mut rows: Vec<Vec<usize>> = vec![Vec::new(); dim];
        for term in &off {
            for (i, j, _) in term.op.iter() {
                rows[i].push(j);
            }
        }
        let mut row_ptr = vec![0];
        let mut cols = Vec::new();
        for row in &mut rows {
            row.sort_unstable();
            row.dedup();
            cols.extend_from_slice(row);
            row_ptr.push(cols.len());
        }
        let slot = |i: usize, j: usize| {
            row_ptr[i] + cols[row_ptr[i]..row_ptr[i + 1]].binary_search(&j).unwrap()
        };
        let term_slots = off
            .iter()
            .map(|term| {
                let slots = term.op.iter().map(|(i, j, v)| (slot(i, j), v)).collect();
                (term.index, slots)
            })
            .collect();
        let mut decay = vec![0.0; dim];
        for ch in &channels {
            for (j, t) in ch.jump.target.iter().enumerate() {
                if let Some((_, v)) = t {
                    decay[j] += ch.rate * v.norm_sqr();
                }
            }
        }
        let nnz = cols.len();
        Self {
            ham,
            dim,
            row_ptr,
            cols,
            term_slots,
            diag,
            channels,
            decay,
            phases: vec![C64::default(); dim],
            vals: vec![C64::default(); nnz],
            dshift: vec![0.0; dim],
            x: vec![C64::default(); dim * dim],
        }
    }
}

impl OdeSystem for LindbladSystem<'_> {
    fn rhs(&mut self, t: f64, rho: &[C64], out: &mut [C64]) {
        let d = self.dim;
        let terms = self.ham.terms();
        self.ham.frame().phases(self.ham.space(), t, &mut self.phases);

        // interaction-picture Hamiltonian values: conj(p_i) H_ij p_j
        self.vals.iter_mut().for_each(|v| *v = C64::default());
        for (index, slots) in &self.term_slots {
            let coef = terms[*index].coefficient(t);
            for &(s, v) in slots {
                self.vals[s] += v * coef;
            }
        }
        for i in 0..d {
            let pi = self.phases[i].conj();
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                self.vals[s] *= pi * self.phases[self.cols[s]];
            }
        }
        self.dshift.iter_mut().for_each(|v| *v = 0.0);
        for drive in &self.diag {
            let m = terms[drive.index].modulation(t);
            for (s, e) in self.dshift.iter_mut().zip(&drive.diag) {
                *s += m * e;
            }
        }

        // X = H rho; then -i [H, rho] = -i (X - X^dag) since H, rho are Hermitian
        for i in 0..d {
            let xrow = &mut self.x[i * d..(i + 1) * d];
            let di = self.dshift[i];
            for (xv, r) in xrow.iter_mut().zip(&rho[i * d..(i + 1) * d]) {
                *xv = r * di;
            }
            for s in self.row_ptr[i]..self.row_ptr[i + 1] {
                let h = self.vals[s];
                let k = self.cols[s];
                for (xv, r) in xrow.iter_mut().zip(&rho[k * d..(k + 1) * d]) {
                    *xv += h * r;
                }
            }
        }
        for i in 0..d {
            for j in 0..d {
                let v = self.x[i * d + j] - self.x[j * d + i].conj();
                let decay = -0.5 * (self.decay[i] + self.decay[j]);
                out[i * d + j] = C64::new(v.im, -v.re) + rho[i * d + j] * decay;
            }
        }
        for ch in &self.channels {
            for (i, ti) in ch.jump.target.iter().enumerate() {
                let Some((pi, vi)) = *ti else { continue };
                let vi = vi * ch.rate;
                for (j, tj) in ch.jump.target.iter().enumerate() {
                    if let Some((pj, vj)) = *tj {
                        out[pi * d + pj] += vi * rho[i * d + j] * vj.conj();
                    }
                }
            }
        }
    }

    fn post_step(&mut self, rho: &mut [C64]) {
        let d = self.dim;
        for i in 0..d {
            rho[i * d + i].im = 0.0;
            for j in i + 1..d {
                let avg = (rho[i * d + j] + rho[j * d + i].conj()) * 0.5;
                rho[i * d + j] = avg;
                rho[j * d + i] = avg.conj();
            }
        }
    }
}

fn rotate_density(ham: &ModulatedHamiltonian, t: f64, rho: &[C64], to_lab: bool) -> Vec<C64> {
    let d = ham.space().dim();
    let mut ph = vec![C64::default(); d];
    ham.frame().phases(ham.space(), t, &mut ph);
    if !to_lab {
        ph.iter_mut().for_each(|p| *p = p.conj());
    }
    (0..d * d)
        .map(|idx| {
            let (i, j) = (idx / d, idx % d);
            ph[i] * rho[idx] * ph[j].conj()
        })
        .collect()
}

/// Integrates `d rho/dt = -i[H(t), rho] + kappa D[a] rho
/// + sum_l (gamma_l D[sigma_-^(l)] + gamma_phi_l / 2 D[sigma_z^(l)]) rho`.
pub fn evolve_lindblad(
    ham: &ModulatedHamiltonian,
    rates: &DissipationRates,
    rho0: &DensityMatrix,
    opts: &EvolveOptions,
) -> Result<Trajectory> {
    opts.validate()?;
    let space = *ham.space();
    if rho0.space() != &space {
        return Err(Error::domain("initial density matrix and Hamiltonian live on different spaces"));
    }
    let tr0 = rho0.trace();
    if (tr0.re - 1.0).abs() > 1e-9 || tr0.im.abs() > 1e-9 || rho0.hermiticity_error() > 1e-12 {
        return Err(Error::Normalization { norm_sqr: tr0.re });
    }
    let channels = channels(&space, rates)?;
    let mut system = LindbladSystem::new(ham, channels);
    let times = opts.times();
    let cfg = StepperConfig::with_tol(opts.tol).h_max(step_cap(ham));
    let d = space.dim();
    let mut stats = RunStats {
        min_eigenvalue: f64::INFINITY,
        ..Default::default()
    };
    let mut observables = Vec::with_capacity(times.len());
    let mut densities = opts.store_states.then(Vec::new);
    let y0 = rotate_density(ham, opts.t_start, rho0.data(), false);

    let (_, istats) = integrate(&mut system, y0, &times, &cfg, |_, t, rho| {
        let rho_i = DensityMatrix::from_raw(space, rho.to_vec())?;
        let trace = rho_i.trace();
        let drift = (trace - C64::new(1.0, 0.0)).norm();
        stats.max_trace_drift = stats.max_trace_drift.max(drift);
        if opts.fail_on_drift && drift > TRACE_DRIFT_LIMIT {
            return Err(Error::NormDrift {
                drift,
                limit: TRACE_DRIFT_LIMIT,
                suggested_tol: (opts.tol / 10.0).max(1e-12),
            });
        }
        stats.max_hermiticity_error = stats.max_hermiticity_error.max(rho_i.hermiticity_error());
        // the frame is a unitary similarity: the spectrum is frame independent
        let min_eig = rho_i.min_eigenvalue();
        stats.min_eigenvalue = stats.min_eigenvalue.min(min_eig);
        if min_eig < EIGENVALUE_FLOOR {
            return Err(Error::Positivity {
                min_eigenvalue: min_eig,
            });
        }
        let pops: Vec<f64> = (0..d).map(|i| rho[i * d + i].re / trace.re).collect();
        check_cutoff(&space, cutoff_population(&space, &pops), opts.cutoff_policy, &mut stats, t)?;
        observables.push(ObservableSet::from_populations(&space, &pops)?);
        if let Some(densities) = densities.as_mut() {
            densities.push(DensityMatrix::from_raw(space, rotate_density(ham, t, rho, true))?);
        }
        Ok(())
    })?;
    stats.integrator = istats;
    Ok(Trajectory {
        times,
        observables,
        states: None,
        densities,
        tol: opts.tol,
        stats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{build_operators, coherent_state, dicke_fock_state, SpaceSpec};
    use crate::model::{
        ModulationSchedule, ModulationTarget, QubitParams, RealisticParams, SystemParams,
    };
    use proptest::prelude::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    fn fig1(with_crt: bool) -> SystemParams {
        let g = 0.08 / 2f64.sqrt();
        SystemParams::from_detuning(1.0, g, -9.0 * g * 2f64.sqrt(), 2, with_crt)
    }

    #[test]
    fn dissipator_on_fock_states() {
        let space = SpaceSpec::collective(1, 3).unwrap();
        let ops = build_operators(&space);
        let vac = DensityMatrix::from_pure(&dicke_fock_state(&space, 0, 0).unwrap());
        let d = lindblad_dissipator(&ops.a, &vac).unwrap();
        assert!(d.data().iter().all(|v| v.norm() < 1e-15));

        let one = DensityMatrix::from_pure(&dicke_fock_state(&space, 0, 1).unwrap());
        let d = lindblad_dissipator(&ops.a, &one).unwrap();
        let (i0, i1) = (space.index(0, 0), space.index(0, 1));
        for i in 0..space.dim() {
            for j in 0..space.dim() {
                let expect = match (i, j) {
                    _ if i == i0 && j == i0 => 1.0,
                    _ if i == i1 && j == i1 => -1.0,
                    _ => 0.0,
                };
                assert!((d.get(i, j) - c(expect)).norm() < 1e-15);
            }
        }
        let wrong = SparseOp::identity(3);
        assert!(lindblad_dissipator(&wrong, &one).is_err());
    }

    fn arb_matrix(d: usize) -> impl Strategy<Value = Vec<C64>> {
        prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), d * d)
            .prop_map(|v| v.into_iter().map(|(a, b)| C64::new(a, b)).collect())
    }

    proptest! {
        #[test]
        fn dissipator_is_traceless(o in arb_matrix(6), r in arb_matrix(6)) {
            let space = SpaceSpec::collective(1, 2).unwrap();
            let op = SparseOp::from_triplets(6, o.iter().enumerate().map(|(k, v)| (k / 6, k % 6, *v)));
            let rho = DensityMatrix::from_raw(space, r).unwrap();
            let d = lindblad_dissipator(&op, &rho).unwrap();
            prop_assert!(d.trace().norm() < 1e-12);
        }
    }

    #[test]
    fn stationary_dressed_state_stays_put() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let ham = ModulatedHamiltonian::collective(&space, &fig1(true), &[]).unwrap();
        let h = ham.static_part().to_dense_real();
        let eig = h.symmetric_eigen();
        // eigenvector closest to |0, 3>
        let target = space.index(0, 3);
        let col = (0..space.dim())
            .max_by(|&a, &b| eig.eigenvectors[(target, a)].abs().total_cmp(&eig.eigenvectors[(target, b)].abs()))
            .unwrap();
        let amps = (0..space.dim()).map(|i| c(eig.eigenvectors[(i, col)])).collect();
        let psi0 = StateVector::normalized(space, amps).unwrap();
        let traj = evolve_schrodinger(&ham, &psi0, &EvolveOptions::new(200.0, 21, 1e-10)).unwrap();
        let first = &traj.observables[0];
        for o in &traj.observables {
            assert!((o.n_ph - first.n_ph).abs() < 1e-8);
            assert!((o.n_at - first.n_at).abs() < 1e-8);
        }
        assert!(traj.stats.max_norm_drift < 1e-7);
    }

    #[test]
    fn tc_total_excitation_is_conserved() {
        let space = SpaceSpec::collective(2, 10).unwrap();
        let ham = ModulatedHamiltonian::collective(&space, &fig1(false), &[]).unwrap();
        let psi0 = coherent_state(&space, c(1.2), 1).unwrap();
        let traj = evolve_schrodinger(&ham, &psi0, &EvolveOptions::new(300.0, 31, 1e-11)).unwrap();
        let total0 = traj.observables[0].n_ph + traj.observables[0].n_at;
        for o in &traj.observables {
            let e = (o.n_ph + o.n_at - total0).abs();
            assert!(e < 1e-9, "{e:e}");
        }
    }

    #[test]
    fn stored_states_are_in_the_lab_frame() {
        // compare against exact propagation by diagonalization
        let space = SpaceSpec::collective(2, 4).unwrap();
        let ham = ModulatedHamiltonian::collective(&space, &fig1(true), &[]).unwrap();
        let psi0 = dicke_fock_state(&space, 0, 2).unwrap();
        let t = 7.3;
        let traj = evolve_schrodinger(&ham, &psi0, &EvolveOptions::new(t, 2, 1e-12).store_states(true)).unwrap();
        let h = ham.static_part().to_dense();
        let eig = h.clone().symmetric_eigen();
        let v = &eig.eigenvectors;
        let phases = nalgebra::DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * t)));
        let u = v * phases * v.adjoint();
        let exact = &u * nalgebra::DVector::from_column_slice(psi0.amplitudes());
        let got = &traj.states.unwrap()[1];
        for (a, b) in got.amplitudes().iter().zip(exact.iter()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn unitary_limit_of_lindblad_matches_schrodinger() {
        let space = SpaceSpec::distinguishable(2, 5).unwrap();
        let g = 0.05;
        let params = RealisticParams {
            omega: 1.0,
            qubits: vec![
                QubitParams { atom_freq: 1.3, coupling: g },
                QubitParams { atom_freq: 1.35, coupling: 1.1 * g },
            ],
            with_crt: true,
        };
        let s = ModulationSchedule::new(ModulationTarget::Coupling(None), 0.3 * g, 0.61, 0.0).unwrap();
        let ham = ModulatedHamiltonian::realistic(&space, &params, &[s]).unwrap();
        let psi0 = coherent_state(&space, c(1.0), 0).unwrap();
        let opts = EvolveOptions::new(60.0, 13, 1e-11);
        let a = evolve_schrodinger(&ham, &psi0, &opts).unwrap();
        let b = evolve_lindblad(&ham, &DissipationRates::default(), &DensityMatrix::from_pure(&psi0), &opts).unwrap();
        for (x, y) in a.observables.iter().zip(&b.observables) {
            assert!((x.n_ph - y.n_ph).abs() < 1e-7);
            assert!((x.n_at - y.n_at).abs() < 1e-7);
        }
    }

    #[test]
    fn empty_cavity_decays_exponentially() {
        let space = SpaceSpec::distinguishable(2, 20).unwrap();
        let params = RealisticParams {
            omega: 1.0,
            qubits: vec![QubitParams { atom_freq: 1.7, coupling: 0.0 }; 2],
            with_crt: true,
        };
        let ham = ModulatedHamiltonian::realistic(&space, &params, &[]).unwrap();
        let kappa = 0.01;
        let rates = DissipationRates { kappa, gamma: vec![0.0; 2], gamma_phi: vec![0.0; 2] };
        let rho0 = DensityMatrix::from_pure(&coherent_state(&space, c(2.0), 0).unwrap());
        let n0 = rho0.observables().unwrap().n_ph;
        let traj = evolve_lindblad(&ham, &rates, &rho0, &EvolveOptions::new(100.0, 11, 1e-10)).unwrap();
        for (t, o) in traj.times.iter().zip(&traj.observables) {
            let expect = n0 * (-kappa * t).exp();
            assert!(((o.n_ph - expect) / expect).abs() < 1e-6);
        }
    }

    #[test]
    fn qubit_rates_need_distinguishable_basis() {
        let space = SpaceSpec::collective(2, 4).unwrap();
        let ham = ModulatedHamiltonian::collective(&space, &fig1(true), &[]).unwrap();
        let rho0 = DensityMatrix::from_pure(&dicke_fock_state(&space, 0, 1).unwrap());
        let rates = DissipationRates { kappa: 0.0, gamma: vec![0.01, 0.01], gamma_phi: vec![] };
        assert!(evolve_lindblad(&ham, &rates, &rho0, &EvolveOptions::new(1.0, 2, 1e-8)).is_err());
    }

    #[test]
    fn purity_decreases_under_static_dissipative_dynamics() {
        let space = SpaceSpec::distinguishable(2, 4).unwrap();
        let params = RealisticParams::identical(&fig1(true));
        let ham = ModulatedHamiltonian::realistic(&space, &params, &[]).unwrap();
        let rates = DissipationRates { kappa: 0.02, gamma: vec![0.01, 0.02], gamma_phi: vec![0.01, 0.005] };
        let rho0 = DensityMatrix::from_pure(&coherent_state(&space, c(1.0), 1).unwrap());
        let traj = evolve_lindblad(&ham, &rates, &rho0, &EvolveOptions::new(40.0, 41, 1e-10).store_states(true)).unwrap();
        let purities: Vec<f64> = traj.densities.unwrap().iter().map(|r| r.purity()).collect();
        for w in purities.windows(2) {
            assert!(w[1] <= w[0] + 1e-8);
        }
        assert!(traj.stats.max_trace_drift < 1e-7);
        assert!(traj.stats.min_eigenvalue > EIGENVALUE_FLOOR);
    }

    #[test]
    fn periodic_propagation_matches_direct_integration() {
        let space = SpaceSpec::collective(2, 8).unwrap();
        let p = fig1(true);
        let s = ModulationSchedule::new(ModulationTarget::Coupling(None), 0.3 * p.coupling, 1.5, 0.4).unwrap();
        let ham = ModulatedHamiltonian::collective(&space, &p, &[s]).unwrap();
        let psi0 = dicke_fock_state(&space, 0, 4).unwrap();
        let opts = EvolveOptions::new(500.0, 37, 1e-12).store_states(true);
        let a = evolve_schrodinger(&ham, &psi0, &opts.propagation(Propagation::Direct)).unwrap();
        let b = evolve_schrodinger(&ham, &psi0, &opts.propagation(Propagation::Periodic)).unwrap();
        assert!(b.stats.propagator_unitarity_error.unwrap() < 1e-11);
        for (x, y) in a.states.unwrap().iter().zip(b.states.unwrap().iter()) {
            for (u, v) in x.amplitudes().iter().zip(y.amplitudes()) {
                assert!((u - v).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn options_are_validated() {
        let space = SpaceSpec::collective(1, 2).unwrap();
        let ham = ModulatedHamiltonian::collective(&space, &SystemParams::from_detuning(1.0, 0.01, 0.3, 1, false), &[]).unwrap();
        let psi = dicke_fock_state(&space, 0, 1).unwrap();
        assert!(evolve_schrodinger(&ham, &psi, &EvolveOptions::new(1.0, 2, 1e-3)).is_err());
        assert!(evolve_schrodinger(&ham, &psi, &EvolveOptions::new(1.0, 1, 1e-8)).is_err());
    }
}
