//! Truncated atom-field Hilbert spaces, canonical states and observables.
//!
//! Two bases are supported. The collective basis spans the symmetric Dicke
//! states `|k>` (k = 0..=N excited atoms) of identical qubits; the
//! distinguishable basis spans all `2^N` qubit configurations, encoded as a
//! bitmask where bit `l` set means qubit `l` is excited. In both cases the
//! photon number varies fastest: `index = atom * (n_max + 1) + n`.

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::sparse::SparseOp;

const NORM_TOL: f64 = 1e-10;
const OBSERVABLE_NORM_TOL: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisKind {
    Collective,
    Distinguishable,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SpaceSpec {
    n_qubits: usize,
    n_max: usize,
    kind: BasisKind,
}

impl SpaceSpec {
    pub fn new(n_qubits: usize, n_max: usize, kind: BasisKind) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::domain("at least one qubit is required"));
        }
        if kind == BasisKind::Distinguishable && n_qubits > 16 {
            return Err(Error::domain(format!(
                "{n_qubits} distinguishable qubits would need a 2^{n_qubits} basis"
            )));
        }
        Ok(Self {
            n_qubits,
            n_max,
            kind,
        })
    }

    pub fn collective(n_qubits: usize, n_max: usize) -> Result<Self> {
        Self::new(n_qubits, n_max, BasisKind::Collective)
    }

    pub fn distinguishable(n_qubits: usize, n_max: usize) -> Result<Self> {
        Self::new(n_qubits, n_max, BasisKind::Distinguishable)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn kind(&self) -> BasisKind {
        self.kind
    }

    pub fn photon_levels(&self) -> usize {
        self.n_max + 1
    }

    /// Number of atomic basis configurations: `N + 1` or `2^N`.
    pub fn atom_configs(&self) -> usize {
        match self.kind {
            BasisKind::Collective => self.n_qubits + 1,
            BasisKind::Distinguishable => 1 << self.n_qubits,
        }
    }

    pub fn dim(&self) -> usize {
        self.atom_configs() * self.photon_levels()
    }

    pub fn index(&self, atom: usize, n_photon: usize) -> usize {
        debug_assert!(atom < self.atom_configs() && n_photon <= self.n_max);
        atom * self.photon_levels() + n_photon
    }

    /// Inverse of [`SpaceSpec::index`]: `(atom configuration, photon number)`.
    pub fn decompose(&self, index: usize) -> (usize, usize) {
        (index / self.photon_levels(), index % self.photon_levels())
    }

    /// Number of excited qubits in an atomic configuration.
    pub fn excitations(&self, atom: usize) -> usize {
        match self.kind {
            BasisKind::Collective => atom,
            BasisKind::Distinguishable => atom.count_ones() as usize,
        }
    }

    fn check_photon(&self, n_photon: usize) -> Result<()> {
        if n_photon > self.n_max {
            return Err(Error::Cutoff {
                required: n_photon,
                reason: format!("photon number {n_photon} is above the cutoff"),
            });
        }
        Ok(())
    }

    fn check_dicke(&self, k: usize) -> Result<()> {
        if k > self.n_qubits {
            return Err(Error::domain(format!(
                "Dicke index {k} exceeds N = {}",
                self.n_qubits
            )));
        }
        Ok(())
    }
}

/// `f_k = sqrt((k+1)(N-k))`, the collective ladder matrix element.
pub fn f_coefficient(k: usize, n_qubits: usize) -> Result<f64> {
    if k > n_qubits {
        return Err(Error::domain(format!("k = {k} outside 0..={n_qubits}")));
    }
    Ok((((k + 1) * (n_qubits - k)) as f64).sqrt())
}

pub(crate) fn f_unchecked(k: usize, n_qubits: usize) -> f64 {
    if k >= n_qubits {
        0.0
    } else {
        (((k + 1) * (n_qubits - k)) as f64).sqrt()
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Default Fock cutoff for a coherent amplitude `|alpha|^2`:
/// `ceil(|a|^2 + 8|a| + 10)`, never below 20.
pub fn default_cutoff(alpha_sqr: f64) -> usize {
    let a = alpha_sqr.max(0.0).sqrt();
    ((alpha_sqr + 8.0 * a + 10.0).ceil() as usize).max(20)
}

#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    space: SpaceSpec,
    amps: Vec<C64>,
}

impl StateVector {
    /// Wraps amplitudes that must already be normalized.
    pub fn new(space: SpaceSpec, amps: Vec<C64>) -> Result<Self> {
        if amps.len() != space.dim() {
            return Err(Error::domain(format!(
                "{} amplitudes for a space of dimension {}",
                amps.len(),
                space.dim()
            )));
        }
        let norm_sqr = norm_sqr(&amps);
        if (norm_sqr - 1.0).abs() > NORM_TOL {
            return Err(Error::Normalization { norm_sqr });
        }
        Ok(Self { space, amps })
    }

    /// Normalizes the amplitudes before wrapping them.
    pub fn normalized(space: SpaceSpec, mut amps: Vec<C64>) -> Result<Self> {
        let n = norm_sqr(&amps).sqrt();
        if n == 0.0 || !n.is_finite() {
            return Err(Error::Normalization { norm_sqr: n * n });
        }
        amps.iter_mut().for_each(|a| *a /= n);
        Self::new(space, amps)
    }

    /// Wraps amplitudes without checking the norm. Used by integrators, which
    /// measure and report drift instead of hiding it.
    pub fn unchecked(space: SpaceSpec, amps: Vec<C64>) -> Self {
        assert_eq!(amps.len(), space.dim());
        Self { space, amps }
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<C64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }

    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn amplitude(&self, atom: usize, n_photon: usize) -> C64 {
        self.amps[self.space.index(atom, n_photon)]
    }

    pub fn populations(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn observables(&self) -> Result<ObservableSet> {
        ObservableSet::from_populations(&self.space, &self.populations())
    }
}

fn norm_sqr(amps: &[C64]) -> f64 {
    amps.iter().map(|a| a.norm_sqr()).sum()
}

/// Amplitudes of the Dicke state `|k>` over the atomic configurations.
fn dicke_atom_amplitudes(space: &SpaceSpec, k: usize) -> Vec<(usize, f64)> {
    match space.kind {
        BasisKind::Collective => vec![(k, 1.0)],
        BasisKind::Distinguishable => {
            let amp = binomial(space.n_qubits, k).recip().sqrt();
            (0..space.atom_configs())
                .filter(|mask| mask.count_ones() as usize == k)
                .map(|mask| (mask, amp))
                .collect()
        }
    }
}

/// `|k> (x) |n>`; in the distinguishable basis `|k>` is the symmetric
/// superposition over all configurations with `k` excited qubits.
pub fn dicke_fock_state(space: &SpaceSpec, k: usize, n_photon: usize) -> Result<StateVector> {
    space.check_dicke(k)?;
    space.check_photon(n_photon)?;
    let mut amps = vec![C64::default(); space.dim()];
    for (atom, a) in dicke_atom_amplitudes(space, k) {
        amps[space.index(atom, n_photon)] = C64::new(a, 0.0);
    }
    StateVector::normalized(*space, amps)
}

/// Field amplitudes of a coherent state truncated at `n_max` and renormalized.
pub fn coherent_amplitudes(alpha: C64, n_max: usize) -> Vec<C64> {
    let mut amps = Vec::with_capacity(n_max + 1);
    let mut term = C64::new((-alpha.norm_sqr() / 2.0).exp(), 0.0);
    amps.push(term);
    for n in 1..=n_max {
        term *= alpha / (n as f64).sqrt();
        amps.push(term);
    }
    let norm = norm_sqr(&amps).sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    amps
}

/// `|k_atom> (x) |alpha>` with the field truncated at the cutoff.
pub fn coherent_state(space: &SpaceSpec, alpha: C64, k_atom: usize) -> Result<StateVector> {
    space.check_dicke(k_atom)?;
    if alpha.norm_sqr() > space.n_max as f64 / 2.0 {
        return Err(Error::Cutoff {
            required: default_cutoff(alpha.norm_sqr()),
            reason: format!(
                "|alpha|^2 = {} needs more than n_max / 2 headroom",
                alpha.norm_sqr()
            ),
        });
    }
    let field = coherent_amplitudes(alpha, space.n_max);
    let mut amps = vec![C64::default(); space.dim()];
    for (atom, a) in dicke_atom_amplitudes(space, k_atom) {
        for (n, f) in field.iter().enumerate() {
            amps[space.index(atom, n)] = f * a;
        }
    }
    StateVector::normalized(*space, amps)
}

/// Maps a collective-basis state onto the distinguishable basis of the same
/// qubit count and cutoff.
pub fn embed_collective(state: &StateVector) -> Result<StateVector> {
    let src = state.space();
    if src.kind != BasisKind::Collective {
        return Err(Error::domain("embedding expects a collective-basis state"));
    }
    let dst = SpaceSpec::distinguishable(src.n_qubits, src.n_max)?;
    let mut amps = vec![C64::default(); dst.dim()];
    for k in 0..=src.n_qubits {
        for (mask, a) in dicke_atom_amplitudes(&dst, k) {
            for n in 0..=src.n_max {
                amps[dst.index(mask, n)] = state.amplitude(k, n) * a;
            }
        }
    }
    Ok(StateVector::unchecked(dst, amps))
}

/// Dense density matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    space: SpaceSpec,
    data: Vec<C64>,
}

impl DensityMatrix {
    pub fn from_pure(state: &StateVector) -> Self {
        let amps = state.amplitudes();
        let data = amps
            .iter()
            .flat_map(|a| amps.iter().map(move |b| a * b.conj()))
            .collect();
        Self {
            space: *state.space(),
            data,
        }
    }

    pub fn from_raw(space: SpaceSpec, data: Vec<C64>) -> Result<Self> {
        if data.len() != space.dim() * space.dim() {
            return Err(Error::domain("density matrix has the wrong size"));
        }
        Ok(Self { space, data })
    }

    pub fn space(&self) -> &SpaceSpec {
        &self.space
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn into_raw(self) -> Vec<C64> {
        self.data
    }

    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim() + j]
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim()).map(|i| self.get(i, i)).sum()
    }

    pub fn purity(&self) -> f64 {
        // tr(rho^2) = sum |rho_ij|^2 for Hermitian rho
        self.data.iter().map(|v| v.norm_sqr()).sum()
    }

    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in i..d {
                worst = worst.max((self.get(i, j) - self.get(j, i).conj()).norm());
            }
        }
        worst
    }

    pub fn to_dense(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim(), self.dim(), &self.data)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.to_dense();
        let herm = (&m + m.adjoint()) * C64::new(0.5, 0.0);
        herm.symmetric_eigenvalues()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min)
    }

    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i).re).collect()
    }

    pub fn expectation(&self, op: &SparseOp) -> C64 {
        // tr(O rho) = sum_ij O_ij rho_ji
        op.iter().map(|(i, j, v)| v * self.get(j, i)).sum()
    }

    pub fn observables(&self) -> Result<ObservableSet> {
        ObservableSet::from_populations(&self.space, &self.populations())
    }
}

/// Photon and atomic-excitation statistics of a state.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservableSet {
    pub n_ph: f64,
    pub n_at: f64,
    pub p_ph: Vec<f64>,
    pub p_at: Vec<f64>,
}

impl ObservableSet {
    /// Marginals of the basis populations of a normalized state.
    pub fn from_populations(space: &SpaceSpec, pops: &[f64]) -> Result<Self> {
        let total: f64 = pops.iter().sum();
        if (total - 1.0).abs() > OBSERVABLE_NORM_TOL {
            return Err(Error::Normalization { norm_sqr: total });
        }
        let mut p_ph = vec![0.0; space.photon_levels()];
        let mut p_at = vec![0.0; space.n_qubits + 1];
        for (idx, &p) in pops.iter().enumerate() {
            let (atom, n) = space.decompose(idx);
            p_ph[n] += p;
            p_at[space.excitations(atom)] += p;
        }
        let mean = |dist: &[f64]| dist.iter().enumerate().map(|(k, p)| k as f64 * p).sum();
        Ok(Self {
            n_ph: mean(&p_ph),
            n_at: mean(&p_at),
            p_ph,
            p_at,
        })
    }
}

/// Observables of either kind of state.
pub fn observables(state: &StateVector) -> Result<ObservableSet> {
    state.observables()
}

/// Population in the bare sector with `k` excited qubits and `n_photon`
/// photons (summed over configurations in the distinguishable basis).
pub fn sector_population(space: &SpaceSpec, pops: &[f64], k: usize, n_photon: usize) -> f64 {
    (0..space.atom_configs())
        .filter(|&atom| space.excitations(atom) == k)
        .map(|atom| pops[space.index(atom, n_photon)])
        .sum()
}

/// Ladder and spin operators on a space.
#[derive(Clone, Debug)]
pub struct OperatorSet {
    pub a: SparseOp,
    pub a_dag: SparseOp,
    pub number: SparseOp,
    /// `sum_k k sigma_kk`, or the qubit popcount.
    pub atomic_excitation: SparseOp,
    /// `sum_k f_k sigma_{k,k+1}`, equal to `sum_l sigma_-^(l)` on the
    /// symmetric subspace.
    pub collective_lowering: SparseOp,
    /// Per-qubit lowering operators; empty in the collective basis.
    pub sigma_minus: Vec<SparseOp>,
    pub sigma_z: Vec<SparseOp>,
}

impl OperatorSet {
    pub fn total_excitation(&self) -> SparseOp {
        self.number.add(&self.atomic_excitation)
    }

    pub fn sigma_plus(&self, qubit: usize) -> SparseOp {
        self.sigma_minus[qubit].adjoint()
    }
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn build_operators(space: &SpaceSpec) -> OperatorSet {
    let dim = space.dim();
    let atoms = space.atom_configs();
    let mut a = Vec::new();
    let mut number = Vec::new();
    let mut exc = Vec::new();
    for atom in 0..atoms {
        for n in 0..=space.n_max {
            let i = space.index(atom, n);
            if n > 0 {
                a.push((space.index(atom, n - 1), i, c((n as f64).sqrt())));
            }
            number.push((i, i, c(n as f64)));
            exc.push((i, i, c(space.excitations(atom) as f64)));
        }
    }
    let a = SparseOp::from_triplets(dim, a);
    let (sigma_minus, sigma_z) = match space.kind {
        BasisKind::Collective => (Vec::new(), Vec::new()),
        BasisKind::Distinguishable => (0..space.n_qubits)
            .map(|l| (qubit_lowering(space, l), qubit_z(space, l)))
            .unzip(),
    };
    let collective_lowering = match space.kind {
        BasisKind::Collective => {
            let mut entries = Vec::new();
            for k in 0..space.n_qubits {
                let f = f_unchecked(k, space.n_qubits);
                for n in 0..=space.n_max {
                    entries.push((space.index(k, n), space.index(k + 1, n), c(f)));
                }
            }
            SparseOp::from_triplets(dim, entries)
        }
        BasisKind::Distinguishable => sigma_minus
            .iter()
            .fold(SparseOp::zeros(dim), |acc, s| acc.add(s)),
    };
    OperatorSet {
        a_dag: a.adjoint(),
        a,
        number: SparseOp::from_triplets(dim, number),
        atomic_excitation: SparseOp::from_triplets(dim, exc),
        collective_lowering,
        sigma_minus,
        sigma_z,
    }
}

/// `sigma_{k,j} = |k><j| (x) 1` in the collective basis.
pub fn sigma(space: &SpaceSpec, k: usize, j: usize) -> Result<SparseOp> {
    if space.kind != BasisKind::Collective {
        return Err(Error::domain("sigma_{k,j} is defined on the collective basis"));
    }
    space.check_dicke(k)?;
    space.check_dicke(j)?;
    Ok(SparseOp::from_triplets(
        space.dim(),
        (0..=space.n_max).map(|n| (space.index(k, n), space.index(j, n), c(1.0))),
    ))
}

fn qubit_lowering(space: &SpaceSpec, l: usize) -> SparseOp {
    let bit = 1usize << l;
    let entries = (0..space.atom_configs())
        .filter(|mask| mask & bit != 0)
        .flat_map(|mask| {
            (0..=space.n_max).map(move |n| (space.index(mask & !bit, n), space.index(mask, n), c(1.0)))
        });
    SparseOp::from_triplets(space.dim(), entries)
}

fn qubit_z(space: &SpaceSpec, l: usize) -> SparseOp {
    let bit = 1usize << l;
    let entries = (0..space.atom_configs()).flat_map(|mask| {
        let s = if mask & bit != 0 { 1.0 } else { -1.0 };
        (0..=space.n_max).map(move |n| {
            let i = space.index(mask, n);
            (i, i, c(s))
        })
    });
    SparseOp::from_triplets(space.dim(), entries)
}
