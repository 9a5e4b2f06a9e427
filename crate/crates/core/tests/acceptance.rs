//! End-to-end acceptance run; prints one PASS/FAIL line per check and per
//! criterion. Runs for several minutes.

use std::f64::consts::PI;
use std::time::Instant;

use dicke_core::dispersive::{
    eta_resonant, evolve_effective, rwa_solution, spectrum_exact, spectrum_perturbative, transition_rate_general,
    two_photon_rate_closed_form, EffectiveModel, EffectiveState,
};
use dicke_core::dynamics::{evolve_lindblad, evolve_schrodinger, EvolveOptions, Observable, Propagation, Trajectory};
use dicke_core::hilbert::{coherent_state, dicke_fock_state, DensityMatrix, SpaceSpec, StateVector};
use dicke_core::model::{
    hamiltonian_at, DissipationRates, ModulatedHamiltonian, ModulationSchedule, ModulationTarget, QubitParams,
    RealisticParams, SystemParams,
};
use dicke_core::presets::{self, Preset, TimeSpan};
use dicke_core::scan::{
    dressed_series, fit_rabi_dressed, refine_peak, sweep_resonance, DressedBasis, DressedView, RabiFit,
};
use dicke_core::{Result, C64};
use nalgebra::DMatrix;

struct Criterion {
    id: u8,
    title: &'static str,
    checks: Vec<(bool, String)>,
}

impl Criterion {
    fn new(id: u8, title: &'static str) -> Self {
        Self {
            id,
            title,
            checks: Vec::new(),
        }
    }

    fn check(&mut self, ok: bool, what: String) {
        println!("  [{}] {}  {what}", self.id, verdict(ok));
        self.checks.push((ok, what));
    }

    /// Records a failed run as a failed check.
    fn attempt<T>(&mut self, what: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(x) => Some(x),
            Err(e) => {
                self.check(false, format!("{what}: {e}"));
                None
            }
        }
    }

    fn passed(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(|c| c.0)
    }
}

fn verdict(ok: bool) -> &'static str {
    if ok {
        "PASS"
    } else {
        "FAIL"
    }
}

fn scale(p: &Preset) -> f64 {
    2.0 * p.reference_detuning().abs()
}

struct Line {
    peak: f64,
    refined: Option<f64>,
}

/// Swept resonance factor, optionally refined to the exact maximum.
fn locate(p: &Preset, lo: f64, hi: f64, points: usize, refine: bool) -> Result<Line> {
    let scenario = p.sweep_scenario(p.sweep_cutoff())?;
    let opts = p.sweep_options(lo, hi, points)?;
    let r = sweep_resonance(&scenario, &opts)?;
    let refined = if refine {
        let h = r.diagnostics.grid_spacing;
        Some(refine_peak(&scenario, r.peak_eta - h, r.peak_eta + h, opts.horizon, 1e-7)? / scale(p))
    } else {
        None
    };
    Ok(Line {
        peak: r.peak_eta / scale(p),
        refined,
    })
}

fn run_at(mut p: Preset, factor: f64, span: f64, samples: usize) -> Result<(Trajectory, DressedBasis)> {
    p.eta_factor = factor;
    p.t_span = TimeSpan::RateUnits(span);
    let ham = p.hamiltonian()?;
    let opts = EvolveOptions::new(p.t_end()?, samples, 1e-10).store_states(true);
    let traj = evolve_schrodinger(&ham, &p.initial_state()?, &opts)?;
    Ok((traj, DressedBasis::new(&ham)?))
}

fn fit_text(f: &RabiFit) -> String {
    format!("rate {:.4e}, amplitude {:.4}", f.rate, f.amplitude)
}

fn contrast(v: &[f64]) -> f64 {
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
    hi - lo
}

fn criterion1_2(c1: &mut Criterion, c2: &mut Criterion, norm_drift: &mut f64) {
    let mut refined = [None, None];
    for (i, (crt, target)) in [(true, 1.0678), (false, 1.0540)].into_iter().enumerate() {
        let p = presets::figure1(crt);
        let label = if crt { "with CRT" } else { "without CRT" };
        if let Some(line) = c1.attempt(label, locate(&p, 1.045, 1.075, 31, true)) {
            c1.check(
                (line.peak - target).abs() <= 0.003,
                format!("Fig. 1 resonance {label}: factor {:.6} (expected {target} +- 0.003)", line.peak),
            );
            refined[i] = line.refined;
        }
    }

    let p = presets::figure1(true);
    let g = p.collective_params().coupling;
    let q = p.closed_form_rate().unwrap();
    let substituted = 0.1 * g * 80f64.sqrt() / (9.0 * 2f64.sqrt()).powi(3);
    c2.check(
        (q - substituted).abs() <= 1e-12 * substituted,
        format!("closed-form |Xi_5,0,2| = {q:.12e}, substitution {substituted:.12e}"),
    );
    for (crt, factor) in [(true, refined[0]), (false, refined[1])] {
        let label = if crt { "exact with CRT" } else { "exact without CRT" };
        let Some(factor) = factor else {
            c2.check(false, format!("{label}: no refined resonance"));
            continue;
        };
        let Some((traj, basis)) = c2.attempt(label, run_at(presets::figure1(crt), factor, 4.0, 801)) else {
            continue;
        };
        *norm_drift = norm_drift.max(traj.stats.max_norm_drift);
        if let Some(fit) = c2.attempt(label, fit_rabi_dressed(&traj, &basis, DressedView::Labels, Observable::AtomicExcitation)) {
            let dev = (fit.rate - q) / q;
            c2.check(
                (0.10..=0.35).contains(&dev.abs()),
                format!("{label} at factor {factor:.7}: fitted {}, {:+.1}% from closed form (10..35%)", fit_text(&fit), 100.0 * dev),
            );
        }
    }
}

fn criterion3_4(c3: &mut Criterion, c4: &mut Criterion, norm_drift: &mut f64) {
    let mut fits = [None, None];
    let mut combined = None;
    for (i, (with_omega, target)) in [(false, 1.0389), (true, 1.0388)].into_iter().enumerate() {
        let p = presets::figure2(with_omega);
        let label = if with_omega { "g+Omega" } else { "g" };
        let Some(line) = c3.attempt(label, locate(&p, 1.032, 1.046, 15, true)) else {
            continue;
        };
        c3.check(
            (line.peak - target).abs() <= 0.003,
            format!("Fig. 2 resonance, {label} modulation: factor {:.6} (expected {target} +- 0.003)", line.peak),
        );
        let factor = line.refined.unwrap();
        let Some((traj, basis)) = c3.attempt(label, run_at(p, factor, 2.0, 401)) else {
            continue;
        };
        *norm_drift = norm_drift.max(traj.stats.max_norm_drift);
        if let Some(fit) = c3.attempt(label, fit_rabi_dressed(&traj, &basis, DressedView::Labels, Observable::AtomicExcitation)) {
            println!("        {label} at factor {factor:.7}: dressed n_at {}", fit_text(&fit));
            fits[i] = Some(fit.rate);
        }
        if with_omega {
            combined = Some((traj, basis));
        }
    }
    if let [Some(a), Some(b)] = fits {
        let ratio = b / a;
        c3.check((ratio - 2.0).abs() <= 0.5, format!("rate ratio (g+Omega) / g = {ratio:.3} (expected 2 +- 0.5)"));
    }

    let Some((traj, basis)) = combined else {
        c4.check(false, "no g+Omega trajectory".into());
        return;
    };
    let view = |o: Observable, v: DressedView| dressed_series(&traj, &basis, v, o).unwrap();
    let ph: Vec<f64> = (0..=10).map(|k| contrast(&view(Observable::PhotonProbability(k), DressedView::Labels))).collect();
    let at: Vec<f64> = (0..=6).map(|m| contrast(&view(Observable::AtomProbability(m), DressedView::Labels))).collect();
    let top2 = |v: &[f64]| {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[b].total_cmp(&v[a]));
        let mut t = [idx[0], idx[1]];
        t.sort();
        t
    };
    c4.check(
        top2(&ph) == [3, 5],
        format!("largest photon swings P_ph(3) {:.4}, P_ph(5) {:.4}; next {:.4}", ph[3], ph[5], {
            let mut rest: Vec<f64> = ph.iter().enumerate().filter(|(k, _)| *k != 3 && *k != 5).map(|x| *x.1).collect();
            rest.sort_by(|a, b| b.total_cmp(a));
            rest[0]
        }),
    );
    c4.check(
        top2(&at) == [0, 2],
        format!("largest atomic swings P_at(0) {:.4}, P_at(2) {:.4}; P_at(1) {:.4}, P_at(3) {:.4}", at[0], at[2], at[1], at[3]),
    );
    let main = fit_rabi_dressed(&traj, &basis, DressedView::Labels, Observable::AtomProbability(2));
    let main_ph = fit_rabi_dressed(&traj, &basis, DressedView::Labels, Observable::PhotonProbability(3));
    let side = fit_rabi_dressed(&traj, &basis, DressedView::CycleAveraged, Observable::AtomProbability(3));
    let side_ph = fit_rabi_dressed(&traj, &basis, DressedView::CycleAveraged, Observable::PhotonProbability(2));
    match &side_ph {
        Ok(f) => println!("        P_ph(2), cycle averaged: {}", fit_text(f)),
        Err(e) => println!("        P_ph(2), cycle averaged: {e}"),
    }
    if let (Some(m), Some(mp), Some(s)) = (
        c4.attempt("P_at(2) fit", main),
        c4.attempt("P_ph(3) fit", main_ph),
        c4.attempt("P_at(3) fit", side),
    ) {
        c4.check(
            ((mp.rate - m.rate) / m.rate).abs() < 0.02,
            format!("P_ph(3) {} and P_at(2) {} share one rate", fit_text(&mp), fit_text(&m)),
        );
        c4.check(
            ((s.rate - m.rate) / m.rate).abs() < 0.05 && s.amplitude > 1e-3 && s.amplitude < 0.5 * m.amplitude,
            format!("secondary P_at(3), cycle averaged: {}, same rate within 5%, smaller amplitude", fit_text(&s)),
        );
    }
}

fn criterion5(c5: &mut Criterion, c6: &mut Criterion) {
    let mut realistic_factor = None;
    for (realistic, target, lo, hi) in [(false, 1.0531, 1.046, 1.060), (true, 1.0632, 1.056, 1.070)] {
        let p = presets::figure4(realistic);
        let label = if realistic { "realistic" } else { "ideal" };
        if let Some(line) = c5.attempt(label, locate(&p, lo, hi, 15, realistic)) {
            c5.check(
                (line.peak - target).abs() <= 0.004,
                format!("Fig. 4 resonance, {label}: factor {:.6} (expected {target} +- 0.004)", line.peak),
            );
            if realistic {
                // the line is ~1e-5 wide in factor units, below the zoom spacing
                realistic_factor = line.refined;
            }
        }
    }
    let Some(factor) = realistic_factor else {
        return;
    };
    println!("        realistic run at refined factor {factor:.7}");
    let mut p = presets::figure4(true);
    p.eta_factor = factor;
    let run = || -> Result<(Trajectory, DressedBasis)> {
        let ham = p.hamiltonian()?;
        let rho0 = DensityMatrix::from_pure(&p.initial_state()?);
        let opts = EvolveOptions::new(p.units.from_microseconds(1.0), 201, 1e-8).store_states(true);
        let traj = evolve_lindblad(&ham, p.dissipation.as_ref().unwrap(), &rho0, &opts)?;
        Ok((traj, DressedBasis::new(&ham)?))
    };
    let Some((traj, basis)) = c5.attempt("realistic Lindblad run", run()) else {
        return;
    };
    let averaged = dressed_series(&traj, &basis, DressedView::CycleAveraged, Observable::AtomicExcitation).unwrap();
    let bare = traj.series(Observable::AtomicExcitation);
    let k = contrast(&averaged);
    c5.check(
        k >= 0.1,
        format!("realistic n_at contrast over t <= 1 us: {k:.4} cycle averaged ({:.4} bare), need >= 0.1", contrast(&bare)),
    );
    let s = &traj.stats;
    c6.check(s.max_trace_drift <= 1e-7, format!("Lindblad trace drift {:.2e} (<= 1e-7), realistic Fig. 4 run", s.max_trace_drift));
    c6.check(s.min_eigenvalue >= -1e-6, format!("Lindblad eigenvalue floor {:.2e} (>= -1e-6)", s.min_eigenvalue));
}

fn criterion6(c6: &mut Criterion, norm_drift: f64) {
    c6.check(norm_drift <= 1e-7, format!("unitary norm drift {norm_drift:.2e} (<= 1e-7), Fig. 1-2 runs"));

    // excitation number under a modulated Tavis-Cummings Hamiltonian
    let tc = || -> Result<f64> {
        let p = presets::figure1(false);
        let ham = p.hamiltonian()?;
        let opts = EvolveOptions::new(5000.0, 101, 1e-12).propagation(Propagation::Direct);
        let traj = evolve_schrodinger(&ham, &p.initial_state()?, &opts)?;
        Ok(traj.observables.iter().map(|o| (o.n_ph + o.n_at - 5.0).abs()).fold(0.0, f64::max))
    };
    if let Some(dev) = c6.attempt("TC conservation", tc()) {
        c6.check(dev <= 1e-10, format!("TC total-excitation drift {dev:.2e} (<= 1e-10, tol 1e-12)"));
    }

    let antisym = || -> Result<f64> {
        let p = SystemParams::from_detuning(1.0, 0.012, -0.5, 3, false);
        let spec = spectrum_exact(&SpaceSpec::collective(3, 8)?, &p)?;
        let sched = [
            ModulationSchedule::new(ModulationTarget::Coupling(None), 0.0012, 1.0, 0.3)?,
            ModulationSchedule::new(ModulationTarget::CavityFreq, 0.02, 1.0, 1.1)?,
            ModulationSchedule::new(ModulationTarget::AtomFreq(None), 0.03, 1.0, 2.5)?,
        ];
        let mut worst = 0.0f64;
        for (t, s) in [(0, 2), (0, 1), (1, 3), (2, 3)] {
            let a = transition_rate_general(6, t, s, &spec, &sched)?.xi;
            let b = transition_rate_general(6, s, t, &spec, &sched)?.xi;
            worst = worst.max((a.conj() + b).norm());
        }
        Ok(worst)
    };
    if let Some(dev) = c6.attempt("antisymmetry", antisym()) {
        c6.check(dev <= 1e-14, format!("Xi_TS + conj(Xi_ST) = {dev:.2e} (<= 1e-14)"));
    }

    let pert_error = |g: f64| -> Result<f64> {
        let p = SystemParams::from_detuning(1.0, g, -9.0 * 0.08, 2, false);
        let space = SpaceSpec::collective(2, 8)?;
        let exact = spectrum_exact(&space, &p)?;
        let approx = spectrum_perturbative(&space, &p, 6)?;
        let mut worst = 0.0f64;
        for e in exact.entries().iter().filter(|e| e.m <= 6) {
            worst = worst.max((e.lambda - approx.entry(e.m, e.label)?.lambda).abs());
        }
        Ok(worst)
    };
    let g = 0.08 / 2f64.sqrt();
    if let (Some(a), Some(b)) = (c6.attempt("scaling", pert_error(g)), c6.attempt("scaling", pert_error(g / 2.0))) {
        c6.check(a / b >= 6.0, format!("perturbative lambda error shrinks {:.2}x when g0 halves (>= 6)", a / b));
    }

    let mut identity = true;
    for n_qubits in 1..=6 {
        let p = SystemParams::from_detuning(1.0, 0.03, -0.7, n_qubits, true);
        for n in 0..12 {
            for k in 0..=n.min(n_qubits) {
                identity &= eta_resonant(n, k, &p) == eta_resonant(n + 3, k + 1, &p);
            }
        }
    }
    c6.check(identity, "eta_r(n, k) == eta_r(n + 3, k + 1) exactly, N = 1..6, n < 12".into());

    let zeros = || -> Result<bool> {
        let mut ok = true;
        for n_qubits in 2..=6 {
            let p = SystemParams::from_detuning(1.0, 0.03, -0.7, n_qubits, true);
            let s = [ModulationSchedule::new(ModulationTarget::Coupling(None), 0.003, 1.4, 0.0)?];
            ok &= two_photon_rate_closed_form(n_qubits + 4, n_qubits - 1, &p, &s)?.magnitude() == 0.0;
            for k in 0..n_qubits.saturating_sub(1) {
                ok &= two_photon_rate_closed_form(k + 1, k, &p, &s)?.magnitude() == 0.0;
                ok &= two_photon_rate_closed_form(k, k, &p, &s)?.magnitude() == 0.0;
                ok &= two_photon_rate_closed_form(k + 2, k, &p, &s)?.magnitude() > 0.0;
            }
        }
        Ok(ok)
    };
    if let Some(ok) = c6.attempt("rate zeros", zeros()) {
        c6.check(ok, "closed-form rate vanishes at k = N - 1 and for K = n - k < 2, N = 2..6".into());
    }

    let cancel = || -> Result<f64> {
        let p = SystemParams::from_detuning(1.0, 0.02, -0.6, 3, false);
        let sched = [
            ModulationSchedule::new(ModulationTarget::CavityFreq, 0.01, 1.2, 0.7)?,
            ModulationSchedule::new(ModulationTarget::AtomFreq(None), 0.01, 1.2, 0.7)?,
        ];
        let closed = two_photon_rate_closed_form(6, 0, &p, &sched)?.magnitude();
        let spec = spectrum_exact(&SpaceSpec::collective(3, 10)?, &p)?;
        let general = transition_rate_general(6, 0, 2, &spec, &sched)?.magnitude();
        Ok(closed.max(general))
    };
    if let Some(x) = c6.attempt("cancellation", cancel()) {
        c6.check(x <= 1e-15, format!("eps_omega = eps_Omega, equal phases, eps_g = 0: |Xi| = {x:.2e}"));
    }

    let decay = || -> Result<f64> {
        let space = SpaceSpec::distinguishable(2, 20)?;
        let params = RealisticParams {
            omega: 1.0,
            qubits: vec![QubitParams { atom_freq: 1.7, coupling: 0.0 }; 2],
            with_crt: true,
        };
        let ham = ModulatedHamiltonian::realistic(&space, &params, &[])?;
        let kappa = 0.01;
        let rates = DissipationRates {
            kappa,
            gamma: vec![0.0; 2],
            gamma_phi: vec![0.0; 2],
        };
        let rho0 = DensityMatrix::from_pure(&coherent_state(&space, C64::new(2.0, 0.0), 0)?);
        let n0 = rho0.observables()?.n_ph;
        let traj = evolve_lindblad(&ham, &rates, &rho0, &EvolveOptions::new(200.0, 21, 1e-10))?;
        Ok(traj
            .times
            .iter()
            .zip(&traj.observables)
            .map(|(t, o)| {
                let expect = n0 * (-kappa * t).exp();
                ((o.n_ph - expect) / expect).abs()
            })
            .fold(0.0, f64::max))
    };
    if let Some(dev) = c6.attempt("empty cavity", decay()) {
        c6.check(dev <= 1e-6, format!("empty cavity n_ph vs n0 exp(-kappa t): max relative error {dev:.2e} (<= 1e-6)"));
    }
}

/// Product of exact exponentials of `H` frozen at each step midpoint.
fn brute_force(space: &SpaceSpec, p: &SystemParams, sched: &[ModulationSchedule], psi0: &StateVector, t_end: f64, steps: usize) -> Result<StateVector> {
    let dt = t_end / steps as f64;
    let mut psi = DMatrix::from_column_slice(space.dim(), 1, psi0.amplitudes());
    for i in 0..steps {
        let h = hamiltonian_at(space, p, sched, (i as f64 + 0.5) * dt)?.to_dense_real();
        let eig = h.symmetric_eigen();
        let v = eig.eigenvectors.map(|x| C64::new(x, 0.0));
        let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * dt)));
        psi = &v * (phases * (v.adjoint() * psi));
    }
    StateVector::normalized(*space, psi.iter().copied().collect())
}

fn criterion7(c7: &mut Criterion) {
    let oracle = || -> Result<(f64, f64)> {
        let space = SpaceSpec::collective(2, 3)?;
        let p = SystemParams::from_detuning(1.0, 0.1, -0.4, 2, true);
        let sched = [
            ModulationSchedule::new(ModulationTarget::Coupling(None), 0.05, 0.8, 0.0)?,
            ModulationSchedule::new(ModulationTarget::AtomFreq(None), 0.1, 0.8, 1.0)?,
        ];
        let psi0 = dicke_fock_state(&space, 0, 2)?;
        let t_end = 40.0;
        let ham = ModulatedHamiltonian::collective(&space, &p, &sched)?;
        let opts = EvolveOptions::new(t_end, 2, 1e-12).store_states(true).propagation(Propagation::Direct);
        let traj = evolve_schrodinger(&ham, &psi0, &opts)?;
        let adaptive = traj.observables.last().unwrap().n_ph;
        let frozen = brute_force(&space, &p, &sched, &psi0, t_end, 80_000)?.observables()?.n_ph;
        Ok((adaptive, frozen))
    };
    if let Some((a, b)) = c7.attempt("brute-force oracle", oracle()) {
        c7.check(
            (a - b).abs() <= 1e-5,
            format!("adaptive n_ph(T) {a:.10} vs piecewise-frozen expm {b:.10}: |diff| {:.2e} (<= 1e-5)", (a - b).abs()),
        );
    }

    let rwa = || -> Result<f64> {
        let space = SpaceSpec::collective(2, 10)?;
        let p = SystemParams::from_detuning(1.0, 0.08 / 2f64.sqrt(), -0.72, 2, false);
        let spec = spectrum_exact(&space, &p)?;
        let sched = [ModulationSchedule::new(ModulationTarget::Coupling(None), 0.1 * p.coupling, 1.5, 0.0)?];
        let model = EffectiveModel::new(&spec, 5, &sched)?.restrict(&[0, 2])?;
        let eta = (model.lambda_tilde[0] - model.lambda_tilde[1]).abs();
        let xi = model.xi[0][1];
        let b0 = EffectiveState::concentrated(&model, 0)?;
        let horizon = 2.0 * PI / xi.norm();
        let grid: Vec<f64> = (0..=80).map(|i| horizon * i as f64 / 80.0).collect();
        let mut worst = 0.0f64;
        for st in evolve_effective(&b0, &model, eta, &grid)? {
            let (bt, bs) = rwa_solution(C64::new(1.0, 0.0), C64::default(), xi, st.t);
            worst = worst.max((st.b[0] - bt).norm()).max((st.b[1] - bs).norm());
        }
        Ok(worst)
    };
    if let Some(dev) = c7.attempt("rwa", rwa()) {
        c7.check(dev <= 1e-8, format!("rwa_solution vs effective equations, two-level restriction: {dev:.2e} (<= 1e-8)"));
    }
}

fn main() {
    // libtest-style arguments (filters, --list) are ignored
    if std::env::args().any(|a| a == "--list") {
        return;
    }
    let start = Instant::now();
    let mut cs: Vec<Criterion> = vec![
        Criterion::new(1, "Fig. 1 resonance factors"),
        Criterion::new(2, "analytic vs exact rate"),
        Criterion::new(3, "Fig. 2 resonances and rate ratio"),
        Criterion::new(4, "Fig. 3 population exchange"),
        Criterion::new(5, "Fig. 4 resonances and realistic contrast"),
        Criterion::new(6, "property suite"),
        Criterion::new(7, "oracle equivalence"),
    ];
    let mut norm_drift = 0.0;
    {
        let (a, b) = cs.split_at_mut(1);
        criterion1_2(&mut a[0], &mut b[0], &mut norm_drift);
    }
    {
        let (a, b) = cs.split_at_mut(3);
        criterion3_4(&mut a[2], &mut b[0], &mut norm_drift);
    }
    {
        let (a, b) = cs.split_at_mut(5);
        criterion5(&mut a[4], &mut b[0]);
    }
    criterion6(&mut cs[5], norm_drift);
    criterion7(&mut cs[6]);

    println!();
    for c in &cs {
        println!("{} criterion {}: {}", verdict(c.passed()), c.id, c.title);
    }
    println!("acceptance run took {:.0} s", start.elapsed().as_secs_f64());
    if cs.iter().any(|c| !c.passed()) {
        std::process::exit(1);
    }
}
