//! Resonance sweeps over the modulation frequency and Rabi-rate fits.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::dynamics::{Observable, PeriodPropagator, Trajectory, NORM_DRIFT_LIMIT};
use crate::error::{Error, Result};
use crate::hilbert::{DensityMatrix, ObservableSet, SpaceSpec, StateVector};
use crate::model::{ModulatedHamiltonian, ModulationSchedule, RealisticParams, SystemParams};

/// Peak-to-background ratio below which a sweep reports no resonance.
pub const RESONANCE_CONTRAST: f64 = 5.0;
/// Accepted fits have `residual_rms < FIT_GATE * |amplitude|`.
pub const FIT_GATE: f64 = 0.1;
/// Minimum number of oscillation periods a fitted series must span.
pub const MIN_FIT_PERIODS: f64 = 1.5;

#[derive(Clone, Debug)]
pub enum HamiltonianSpec {
    Collective(SystemParams),
    Realistic(RealisticParams),
}

impl HamiltonianSpec {
    pub fn build(&self, space: &SpaceSpec, schedules: &[ModulationSchedule]) -> Result<ModulatedHamiltonian> {
        match self {
            HamiltonianSpec::Collective(p) => ModulatedHamiltonian::collective(space, p, schedules),
            HamiltonianSpec::Realistic(p) => ModulatedHamiltonian::realistic(space, p, schedules),
        }
    }
}

/// How much of the target state a trajectory reaches.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum TransferMetric {
    /// Population of the target bare basis state.
    Bare,
    /// Population of the eigenstate of the unmodulated Hamiltonian with the
    /// largest overlap on the target bare state. Free of the fast dressing
    /// oscillations that the bare population carries.
    #[default]
    Dressed,
}

/// Everything fixed across one sweep; the modulation frequency is set per point.
#[derive(Clone, Debug)]
pub struct Scenario {
    pub space: SpaceSpec,
    pub hamiltonian: HamiltonianSpec,
    pub schedules: Vec<ModulationSchedule>,
    pub initial: StateVector,
    /// Bare target state.
    pub target: StateVector,
    pub metric: TransferMetric,
}

impl Scenario {
    pub fn schedules_at(&self, eta: f64) -> Vec<ModulationSchedule> {
        self.schedules.iter().map(|s| s.with_eta(eta)).collect()
    }

    pub fn hamiltonian_at(&self, eta: f64) -> Result<ModulatedHamiltonian> {
        self.hamiltonian.build(&self.space, &self.schedules_at(eta))
    }

    /// State whose population is recorded as the transfer.
    pub fn target_state(&self) -> Result<Vec<C64>> {
        if self.target.space() != &self.space {
            return Err(Error::domain("target state lives on a different space"));
        }
        let bare = self.target.amplitudes();
        match self.metric {
            TransferMetric::Bare => Ok(bare.to_vec()),
            TransferMetric::Dressed => {
                let h = self.hamiltonian.build(&self.space, &[])?.static_part().to_dense_real();
                let eig = h.symmetric_eigen();
                let overlap = |col: usize| -> f64 {
                    bare.iter()
                        .zip(eig.eigenvectors.column(col).iter())
                        .map(|(a, &v)| a.conj() * v)
                        .sum::<C64>()
                        .norm_sqr()
                };
                let col = (0..self.space.dim())
                    .max_by(|&a, &b| overlap(a).total_cmp(&overlap(b)))
                    .expect("nonempty space");
                if overlap(col) <= 0.5 {
                    return Err(Error::Labeling {
                        subspace: col,
                        overlap: overlap(col),
                    });
                }
                Ok(eig.eigenvectors.column(col).iter().map(|&x| C64::new(x, 0.0)).collect())
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SweepOptions {
    pub eta_min: f64,
    pub eta_max: f64,
    pub grid_points: usize,
    pub horizon: f64,
    /// Repeat once on a grid 10x narrower around the coarse peak.
    pub zoom: bool,
    /// Analytic resonance estimate; must lie inside the range when given.
    pub analytic_eta: Option<f64>,
    /// Expected `|Xi|`; when given the horizon must cover `pi / |Xi|`.
    pub expected_rate: Option<f64>,
}

impl SweepOptions {
    pub fn new(eta_min: f64, eta_max: f64, grid_points: usize, horizon: f64) -> Self {
        Self {
            eta_min,
            eta_max,
            grid_points,
            horizon,
            zoom: false,
            analytic_eta: None,
            expected_rate: None,
        }
    }

    pub fn zoom(mut self, zoom: bool) -> Self {
        self.zoom = zoom;
        self
    }

    pub fn analytic_eta(mut self, eta: f64) -> Self {
        self.analytic_eta = Some(eta);
        self
    }

    pub fn expected_rate(mut self, rate: f64) -> Self {
        self.expected_rate = Some(rate);
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.eta_min > 0.0 && self.eta_max > self.eta_min) {
            return Err(Error::Config(format!(
                "sweep range [{}, {}] is not a positive interval",
                self.eta_min, self.eta_max
            )));
        }
        if self.grid_points < 3 {
            return Err(Error::Config("a sweep needs at least 3 grid points".into()));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::Config(format!(
                "sweep horizon must be positive and finite, got {} (zero expected rate?)",
                self.horizon
            )));
        }
        if let Some(eta) = self.analytic_eta {
            if !(self.eta_min..=self.eta_max).contains(&eta) {
                return Err(Error::Config(format!(
                    "sweep range [{}, {}] does not bracket the analytic estimate {eta}",
                    self.eta_min, self.eta_max
                )));
            }
        }
        if let Some(rate) = self.expected_rate {
            let needed = PI / rate.abs();
            if self.horizon < needed {
                return Err(Error::Config(format!(
                    "horizon {} shorter than pi/|Xi| = {needed:.4e}",
                    self.horizon
                )));
            }
        }
        Ok(())
    }

    fn grid(&self) -> Vec<f64> {
        let n = self.grid_points;
        let step = (self.eta_max - self.eta_min) / (n - 1) as f64;
        (0..n).map(|i| self.eta_min + step * i as f64).collect()
    }
}

/// Horizon covering 1.2 half Rabi cycles of population transfer.
pub fn default_horizon(rate: f64) -> f64 {
    1.2 * PI / rate.abs()
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepDiagnostics {
    pub grid_spacing: f64,
    pub background: f64,
    pub peak_transfer: f64,
    /// Largest norm drift over all sweep points.
    pub max_norm_drift: f64,
    /// Largest population at the Fock cutoff over all sweep points.
    pub max_cutoff_population: f64,
    /// The coarse pass when the result comes from a zoom.
    pub coarse: Option<Box<SweepResult>>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub etas: Vec<f64>,
    pub transfer: Vec<f64>,
    pub peak_eta: f64,
    pub peak_width: f64,
    pub diagnostics: SweepDiagnostics,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PointTransfer {
    pub transfer: f64,
    pub norm_drift: f64,
    pub cutoff_population: f64,
}

/// Maximum target population over `[0, horizon]`, sampled once per
/// modulation period.
pub fn transfer_at(scenario: &Scenario, target: &[C64], eta: f64, horizon: f64) -> Result<PointTransfer> {
    let ham = scenario.hamiltonian_at(eta)?;
    let period = TAU / eta;
    let prop = PeriodPropagator::new(&ham, 0.0, period)?;
    let periods = (horizon / period).ceil() as usize;
    let mut psi = scenario.initial.amplitudes().to_vec();
    let mut next = vec![C64::default(); psi.len()];
    let overlap = |psi: &[C64]| -> f64 {
        target
            .iter()
            .zip(psi)
            .map(|(a, b)| a.conj() * b)
            .sum::<C64>()
            .norm_sqr()
    };
    let mut best = overlap(&psi);
    for _ in 0..periods {
        prop.apply(&psi, &mut next);
        std::mem::swap(&mut psi, &mut next);
        best = best.max(overlap(&psi));
    }
    let norm: f64 = psi.iter().map(|x| x.norm_sqr()).sum();
    let norm_drift = (norm.sqrt() - 1.0).abs();
    if norm_drift > NORM_DRIFT_LIMIT {
        return Err(Error::NormDrift {
            drift: norm_drift,
            limit: NORM_DRIFT_LIMIT,
            suggested_tol: crate::dynamics::PROPAGATOR_TOL / 10.0,
        });
    }
    let space = &scenario.space;
    let cutoff_population = (0..space.atom_configs())
        .map(|a| psi[space.index(a, space.n_max())].norm_sqr())
        .sum();
    Ok(PointTransfer {
        transfer: best.min(1.0),
        norm_drift,
        cutoff_population,
    })
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Vertex of the parabola through three equally spaced samples, as an offset
/// in units of the spacing from the middle one.
fn parabola_vertex(y0: f64, y1: f64, y2: f64) -> f64 {
    let curvature = y0 - 2.0 * y1 + y2;
    if curvature >= 0.0 {
        return 0.0;
    }
    (0.5 * (y0 - y2) / curvature).clamp(-1.0, 1.0)
}

/// Full width at half height above the background, by linear interpolation.
fn half_width(etas: &[f64], transfer: &[f64], peak: usize, background: f64) -> f64 {
    let half = background + 0.5 * (transfer[peak] - background);
    let crossing = |range: &mut dyn Iterator<Item = usize>, outward: isize| -> f64 {
        let mut prev = peak;
        for i in range {
            if transfer[i] < half {
                let (x0, y0, x1, y1) = (etas[prev], transfer[prev], etas[i], transfer[i]);
                return x0 + (half - y0) * (x1 - x0) / (y1 - y0);
            }
            prev = i;
        }
        if outward < 0 {
            etas[0]
        } else {
            etas[etas.len() - 1]
        }
    };
    let left = crossing(&mut (0..peak).rev(), -1);
    let right = crossing(&mut (peak + 1..etas.len()), 1);
    right - left
}

fn single_sweep(scenario: &Scenario, target: &[C64], opts: &SweepOptions) -> Result<SweepResult> {
    let etas = opts.grid();
    let points: Vec<PointTransfer> = etas
        .par_iter()
        .map(|&eta| transfer_at(scenario, target, eta, opts.horizon))
        .collect::<Result<_>>()?;
    let transfer: Vec<f64> = points.iter().map(|p| p.transfer).collect();
    let spacing = etas[1] - etas[0];
    let background = median(&transfer);
    let (peak, &peak_transfer) = transfer
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("grid has points");
    if peak_transfer < RESONANCE_CONTRAST * background {
        return Err(Error::NoResonance {
            peak: peak_transfer,
            background,
        });
    }
    if peak == 0 || peak == etas.len() - 1 {
        return Err(Error::Bracket { eta: etas[peak] });
    }
    let offset = parabola_vertex(transfer[peak - 1], transfer[peak], transfer[peak + 1]);
    let peak_eta = etas[peak] + offset * spacing;
    let peak_width = half_width(&etas, &transfer, peak, background);
    Ok(SweepResult {
        diagnostics: SweepDiagnostics {
            grid_spacing: spacing,
            background,
            peak_transfer,
            max_norm_drift: points.iter().map(|p| p.norm_drift).fold(0.0, f64::max),
            max_cutoff_population: points.iter().map(|p| p.cutoff_population).fold(0.0, f64::max),
            coarse: None,
        },
        etas,
        transfer,
        peak_eta,
        peak_width,
    })
}

/// Sweeps the modulation frequency, recording the maximum transfer to the
/// target state per point, and locates the resonance by quadratic
/// interpolation through the highest sample and its neighbors.
pub fn sweep_resonance(scenario: &Scenario, opts: &SweepOptions) -> Result<SweepResult> {
    opts.validate()?;
    if scenario.initial.space() != &scenario.space {
        return Err(Error::domain("initial state lives on a different space"));
    }
    let target = scenario.target_state()?;
    let coarse = single_sweep(scenario, &target, opts)?;
    if !opts.zoom {
        return Ok(coarse);
    }
    let half = (opts.eta_max - opts.eta_min) / 20.0;
    let fine_opts = SweepOptions {
        eta_min: coarse.peak_eta - half,
        eta_max: coarse.peak_eta + half,
        zoom: false,
        analytic_eta: None,
        ..*opts
    };
    let mut fine = single_sweep(scenario, &target, &fine_opts)?;
    fine.diagnostics.coarse = Some(Box::new(coarse));
    Ok(fine)
}

/// Golden-section search for the maximum transfer inside `[lo, hi]`.
///
/// Resolves lines narrower than any affordable grid; the bracket should come
/// from a sweep, since the transfer is unimodal only close to the resonance.
pub fn refine_peak(scenario: &Scenario, lo: f64, hi: f64, horizon: f64, rel_tol: f64) -> Result<f64> {
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("refinement bracket [{lo}, {hi}] is not a positive interval")));
    }
    let target = scenario.target_state()?;
    let value = |eta: f64| transfer_at(scenario, &target, eta, horizon).map(|p| p.transfer);
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut a, mut b) = (lo, hi);
    let mut x1 = b - golden * (b - a);
    let mut x2 = a + golden * (b - a);
    let (mut f1, mut f2) = (value(x1)?, value(x2)?);
    while b - a > rel_tol * b {
        if f1 > f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - golden * (b - a);
            f1 = value(x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + golden * (b - a);
            f2 = value(x2)?;
        }
    }
    Ok(0.5 * (a + b))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RabiFit {
    /// Fitted `|Xi|`; the observable oscillates at twice this rate.
    pub rate: f64,
    pub amplitude: f64,
    pub phase: f64,
    pub offset: f64,
    pub residual_rms: f64,
}

/// Linear least squares for `a cos(w t) + b sin(w t) + c`; returns the
/// coefficients and the rms residual.
fn linear_fit(times: &[f64], values: &[f64], w: f64) -> ([f64; 3], f64) {
    let n = times.len();
    let design = DMatrix::from_fn(n, 3, |i, j| match j {
        0 => (w * times[i]).cos(),
        1 => (w * times[i]).sin(),
        _ => 1.0,
    });
    let rhs = DVector::from_column_slice(values);
    let coef = design
        .clone()
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .expect("SVD was computed with both factors");
    let residual = &design * &coef - rhs;
    ([coef[0], coef[1], coef[2]], (residual.norm_squared() / n as f64).sqrt())
}

/// Dominant angular frequency of the mean-subtracted samples from a
/// zero-padded discrete spectrum.
fn dominant_frequency(times: &[f64], values: &[f64]) -> f64 {
    let n = times.len();
    let span = times[n - 1] - times[0];
    let mean = values.iter().sum::<f64>() / n as f64;
    let pad = 8;
    let dw = TAU / (span * pad as f64);
    let w_max = PI * (n - 1) as f64 / span;
    let mut best = (dw, 0.0);
    let mut j = 1;
    while j as f64 * dw <= w_max {
        let w = j as f64 * dw;
        let s: C64 = times
            .iter()
            .zip(values)
            .map(|(&t, &y)| C64::from_polar(y - mean, -w * t))
            .sum();
        if s.norm_sqr() > best.1 {
            best = (w, s.norm_sqr());
        }
        j += 1;
    }
    best.0
}

/// Fits `A cos(2 r t + theta) + C` to a sampled observable.
pub fn fit_rabi_series(times: &[f64], values: &[f64]) -> Result<RabiFit> {
    if times.len() != values.len() || times.len() < 8 {
        return Err(Error::domain("a Rabi fit needs at least 8 matching samples"));
    }
    let span = times[times.len() - 1] - times[0];
    let seed = dominant_frequency(times, values);
    let dw = TAU / (span * 8.0);
    let cost = |w: f64| linear_fit(times, values, w).1;
    // leakage biases the spectral peak on short series; scan the residual
    // over a few bins, then golden-section search around the best one
    let floor = dw * 1e-3;
    let scan_step = dw / 4.0;
    let best = (-24..=24)
        .map(|j| (seed + j as f64 * scan_step).max(floor))
        .min_by(|&a, &b| cost(a).total_cmp(&cost(b)))
        .expect("nonempty scan");
    let golden = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = ((best - scan_step).max(floor), best + scan_step);
    let mut x1 = hi - golden * (hi - lo);
    let mut x2 = lo + golden * (hi - lo);
    let (mut f1, mut f2) = (cost(x1), cost(x2));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * hi {
            break;
        }
        if f1 < f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - golden * (hi - lo);
            f1 = cost(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + golden * (hi - lo);
            f2 = cost(x2);
        }
    }
    let w = 0.5 * (lo + hi);
    let ([a, b, c], residual_rms) = linear_fit(times, values, w);
    let amplitude = a.hypot(b);
    let fit = RabiFit {
        rate: w / 2.0,
        amplitude,
        phase: (-b).atan2(a),
        offset: c,
        residual_rms,
    };
    let periods = span * w / TAU;
    if periods < MIN_FIT_PERIODS {
        return Err(Error::FitRejected {
            reason: format!("series spans {periods:.2} periods, need {MIN_FIT_PERIODS}"),
            residual_rms,
            amplitude,
        });
    }
    if !(residual_rms < FIT_GATE * amplitude) {
        return Err(Error::FitRejected {
            reason: "residual above the acceptance gate".into(),
            residual_rms,
            amplitude,
        });
    }
    Ok(fit)
}

/// [`fit_rabi_series`] on one observable of a trajectory.
pub fn fit_rabi(trajectory: &Trajectory, selector: Observable) -> Result<RabiFit> {
    fit_rabi_series(&trajectory.times, &trajectory.series(selector))
}

/// Eigenbasis of the unmodulated Hamiltonian, each eigenvector labeled by a
/// bare basis state.
///
/// Observables evaluated on dressed populations lack the fast off-resonant
/// exchange that rides on the bare ones, which leaves the slow two-photon
/// oscillation clean enough to fit.
#[derive(Clone, Debug)]
pub struct DressedBasis {
    space: SpaceSpec,
    vectors: DMatrix<f64>,
    labels: Vec<usize>,
    min_overlap: f64,
}

impl DressedBasis {
    pub fn new(ham: &ModulatedHamiltonian) -> Result<Self> {
        let space = *ham.space();
        let dim = space.dim();
        let eig = ham.static_part().to_dense_real().symmetric_eigen();
        // greedy assignment by decreasing overlap keeps the labeling a permutation
        let mut pairs: Vec<(f64, usize, usize)> = (0..dim)
            .flat_map(|col| (0..dim).map(move |row| (col, row)))
            .map(|(col, row)| (eig.eigenvectors[(row, col)].powi(2), col, row))
            .filter(|p| p.0 > 1e-6)
            .collect();
        pairs.sort_by(|a, b| b.0.total_cmp(&a.0));
        let mut labels = vec![usize::MAX; dim];
        let mut taken = vec![false; dim];
        let mut min_overlap = 1.0f64;
        for (w, col, row) in pairs {
            if labels[col] == usize::MAX && !taken[row] {
                labels[col] = row;
                taken[row] = true;
                min_overlap = min_overlap.min(w);
            }
        }
        if let Some(col) = labels.iter().position(|&l| l == usize::MAX) {
            return Err(Error::Labeling {
                subspace: col,
                overlap: 0.0,
            });
        }
        Ok(Self {
            space,
            vectors: eig.eigenvectors,
            labels,
            min_overlap,
        })
    }

    /// Smallest squared overlap between an eigenvector and its label.
    pub fn min_overlap(&self) -> f64 {
        self.min_overlap
    }

    fn check_space(&self, space: &SpaceSpec) -> Result<()> {
        if space != &self.space {
            return Err(Error::domain("state lives on a different space"));
        }
        Ok(())
    }

    /// Dressed-state populations, indexed by the bare label.
    pub fn populations(&self, state: &StateVector) -> Result<Vec<f64>> {
        self.check_space(state.space())?;
        let amps = state.amplitudes();
        let mut out = vec![0.0; amps.len()];
        for (col, &label) in self.labels.iter().enumerate() {
            let c: C64 = self.vectors.column(col).iter().zip(amps).map(|(&v, a)| a * v).sum();
            out[label] = c.norm_sqr();
        }
        Ok(out)
    }

    /// Dressed-state populations `<v|rho|v>` of a density matrix.
    pub fn density_populations(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.check_space(rho.space())?;
        let d = rho.dim();
        let data = rho.data();
        let mut out = vec![0.0; d];
        let mut tmp = vec![C64::default(); d];
        for (col, &label) in self.labels.iter().enumerate() {
            let v = self.vectors.column(col);
            for (i, t) in tmp.iter_mut().enumerate() {
                *t = data[i * d..(i + 1) * d].iter().zip(v.iter()).map(|(r, &x)| r * x).sum();
            }
            out[label] = tmp.iter().zip(v.iter()).map(|(t, &x)| t.re * x).sum();
        }
        Ok(out)
    }

    /// Bare populations with the interference between dressed states
    /// dropped, i.e. averaged over the fast dressing oscillations.
    fn averaged(&self, dressed: &[f64]) -> Vec<f64> {
        let dim = dressed.len();
        let mut out = vec![0.0; dim];
        for (col, &label) in self.labels.iter().enumerate() {
            let p = dressed[label];
            for (row, o) in out.iter_mut().enumerate() {
                *o += p * self.vectors[(row, col)].powi(2);
            }
        }
        out
    }

    pub fn observables(&self, state: &StateVector, view: DressedView) -> Result<ObservableSet> {
        let dressed = self.populations(state)?;
        self.view(dressed, view)
    }

    pub fn density_observables(&self, rho: &DensityMatrix, view: DressedView) -> Result<ObservableSet> {
        let dressed = self.density_populations(rho)?;
        self.view(dressed, view)
    }

    fn view(&self, dressed: Vec<f64>, view: DressedView) -> Result<ObservableSet> {
        let pops = match view {
            DressedView::Labels => dressed,
            DressedView::CycleAveraged => self.averaged(&dressed),
        };
        ObservableSet::from_populations(&self.space, &pops)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DressedView {
    /// Dressed populations attributed to their bare labels.
    Labels,
    /// Bare populations averaged over the dressing oscillations.
    CycleAveraged,
}

/// Dressed-population series of one observable; needs stored states.
pub fn dressed_series(
    trajectory: &Trajectory,
    basis: &DressedBasis,
    view: DressedView,
    selector: Observable,
) -> Result<Vec<f64>> {
    if let Some(states) = &trajectory.states {
        return states
            .iter()
            .map(|s| basis.observables(s, view).map(|o| selector.extract(&o)))
            .collect();
    }
    if let Some(rhos) = &trajectory.densities {
        return rhos
            .iter()
            .map(|r| basis.density_observables(r, view).map(|o| selector.extract(&o)))
            .collect();
    }
    Err(Error::domain("trajectory was run without stored states"))
}

/// [`fit_rabi`] on dressed populations.
pub fn fit_rabi_dressed(
    trajectory: &Trajectory,
    basis: &DressedBasis,
    view: DressedView,
    selector: Observable,
) -> Result<RabiFit> {
    fit_rabi_series(&trajectory.times, &dressed_series(trajectory, basis, view, selector)?)
}
