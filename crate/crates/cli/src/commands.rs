//! Subcommands other than the figure reproductions.

use std::f64::consts::PI;
use std::fmt;
use std::path::{Path, PathBuf};

use dicke_core::dispersive::{
    effective_spectrum_to, spectrum_exact, spectrum_perturbative, transition_rate_general, two_photon_rate_closed_form,
    DressedSpectrum,
};
use dicke_core::dynamics::{evolve_lindblad, evolve_schrodinger, EvolveOptions, Observable, Trajectory};
use dicke_core::hilbert::{DensityMatrix, SpaceSpec};
use dicke_core::model::ModulationSchedule;
use dicke_core::presets::{self, Preset, TimeSpan};
use dicke_core::scan::{
    fit_rabi_dressed, refine_peak, sweep_resonance, DressedBasis, DressedView, HamiltonianSpec, RabiFit, SweepResult,
};
use dicke_core::{Error, Result};

use crate::config::{ScenarioConfig, SweepConfig};
use crate::output::Table;

/// `n_ph`, `n_at`, `p_ph:k` or `p_at:m`.
pub fn parse_observable(name: &str) -> Result<Observable> {
    let bad = || Error::Config(format!("unknown observable '{name}' (use n_ph, n_at, p_ph:K or p_at:M)"));
    match name {
        "n_ph" => return Ok(Observable::PhotonNumber),
        "n_at" => return Ok(Observable::AtomicExcitation),
        _ => {}
    }
    let (kind, index) = name.split_once(':').ok_or_else(bad)?;
    let index: usize = index.trim().parse().map_err(|_| bad())?;
    match kind {
        "p_ph" => Ok(Observable::PhotonProbability(index)),
        "p_at" => Ok(Observable::AtomProbability(index)),
        _ => Err(bad()),
    }
}

pub fn observable_column(o: Observable) -> String {
    match o {
        Observable::PhotonNumber => "n_ph".into(),
        Observable::AtomicExcitation => "n_at".into(),
        Observable::PhotonProbability(k) => format!("p_ph_{k}"),
        Observable::AtomProbability(m) => format!("p_at_{m}"),
    }
}

/// Command-line overrides shared by every subcommand.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub eta_factor: Option<f64>,
    pub no_crt: bool,
    pub t_span: Option<f64>,
    pub samples: Option<usize>,
    pub svg: bool,
}

impl Overrides {
    pub fn apply(&self, preset: &mut Preset) -> Result<()> {
        if let Some(f) = self.eta_factor {
            if !(f > 0.0 && f.is_finite()) {
                return Err(Error::Config(format!("--eta-factor must be positive, got {f}")));
            }
            preset.eta_factor = f;
        }
        if self.no_crt {
            preset.set_crt(false);
        }
        if let Some(x) = self.t_span {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::Config(format!("--t-span must be positive, got {x}")));
            }
            preset.t_span = match preset.t_span {
                TimeSpan::RateUnits(_) => TimeSpan::RateUnits(x),
                TimeSpan::Microseconds(_) => TimeSpan::Microseconds(x),
                TimeSpan::Dimensionless(_) => TimeSpan::Dimensionless(x),
            };
        }
        Ok(())
    }
}

/// A preset or scenario file with its run settings.
#[derive(Clone, Debug)]
pub struct Job {
    pub preset: Preset,
    pub observables: Vec<Observable>,
    pub samples: usize,
    pub tol: f64,
    pub svg: bool,
    pub sweep: Option<SweepConfig>,
    pub source: String,
}

impl Job {
    pub fn from_config(config: &ScenarioConfig, path: &Path) -> Result<Self> {
        Ok(Self {
            preset: config.to_preset()?,
            observables: config
                .outputs
                .observables
                .iter()
                .map(|o| parse_observable(o))
                .collect::<Result<_>>()?,
            samples: config.run.sample_count,
            tol: config.run.tol,
            svg: config.outputs.svg,
            sweep: config.sweep.clone(),
            source: format!("scenario file {}", path.display()),
        })
    }

    pub fn from_preset(name: &str) -> Result<Self> {
        Ok(Self {
            preset: presets::by_name(name)?,
            observables: vec![Observable::PhotonNumber, Observable::AtomicExcitation],
            samples: 401,
            tol: 1e-10,
            svg: false,
            sweep: None,
            source: format!("built-in preset {name}"),
        })
    }

    pub fn with_overrides(mut self, o: &Overrides) -> Result<Self> {
        o.apply(&mut self.preset)?;
        if let Some(n) = o.samples {
            if n < 2 {
                return Err(Error::Config("--samples must be at least 2".into()));
            }
            self.samples = n;
        }
        self.svg |= o.svg;
        Ok(self)
    }

    fn header(&self, table: &mut Table, command: &str) {
        table.meta(format!("command: {command}"));
        table.meta(format!("source: {}", self.source));
        for line in &self.preset.provenance {
            table.meta(format!("provenance: {line}"));
        }
        let p = &self.preset;
        table.meta(format!(
            "n_qubits: {}, n_max: {}, with_crt: {}, eta_factor: {}, eta: {:.16e}",
            p.n_qubits(),
            p.n_max,
            p.with_crt(),
            p.eta_factor,
            p.eta()
        ));
    }

    fn evolve_options(&self) -> Result<EvolveOptions> {
        Ok(EvolveOptions::new(t_end(&self.preset)?, self.samples, self.tol).store_states(true))
    }
}

/// One line per key of the printed summary.
#[derive(Clone, Debug, Default)]
pub struct Summary {
    pub title: String,
    pub rows: Vec<(String, String)>,
    pub files: Vec<PathBuf>,
}

impl Summary {
    pub fn new(title: impl Into<String>) -> Self {
        Self {
            title: title.into(),
            ..Default::default()
        }
    }

    pub fn row(&mut self, key: impl Into<String>, value: impl Into<String>) {
        self.rows.push((key.into(), value.into()));
    }

    pub fn value(&self, key: &str) -> Option<&str> {
        self.rows.iter().find(|r| r.0 == key).map(|r| r.1.as_str())
    }

    pub fn emit(&mut self, table: &Table, dir: &Path, svg: bool, title: &str) -> Result<()> {
        self.files.push(table.write_csv(dir)?);
        if svg {
            self.files.push(table.write_svg(dir, title)?);
        }
        Ok(())
    }
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{}", self.title)?;
        let width = self.rows.iter().map(|r| r.0.len()).max().unwrap_or(0);
        for (k, v) in &self.rows {
            writeln!(f, "  {k:<width$}  {v}")?;
        }
        for file in &self.files {
            writeln!(f, "  {:<width$}  {}", "wrote", file.display())?;
        }
        Ok(())
    }
}

pub fn t_end(preset: &Preset) -> Result<f64> {
    let t = preset.t_end()?;
    if !(t.is_finite() && t > 0.0) {
        return Err(Error::Config(
            "the driven transition has a zero rate; give the run length in omega units".into(),
        ));
    }
    Ok(t)
}

/// Name of the time column and the factor taking `omega0 t` to it.
pub fn time_axis(preset: &Preset) -> Result<(&'static str, f64)> {
    Ok(match preset.t_span {
        TimeSpan::RateUnits(_) => ("t_q_over_pi", preset.time_unit_rate()? / PI),
        TimeSpan::Microseconds(_) => ("t_us", preset.units.to_microseconds(1.0)),
        TimeSpan::Dimensionless(_) => ("t_omega0", 1.0),
    })
}

pub fn fmt_rate(x: f64) -> String {
    format!("{x:.6e}")
}

pub fn fmt_fit(fit: &Result<RabiFit>) -> String {
    match fit {
        Ok(f) => format!("rate {:.6e}, amplitude {:.4}", f.rate, f.amplitude),
        Err(e) => format!("rejected ({e})"),
    }
}

/// Dressed-population fit of `n_at`, reported next to the closed form.
fn fit_summary(summary: &mut Summary, key: &str, traj: &Trajectory, basis: &DressedBasis, closed_form: f64) {
    let fit = fit_rabi_dressed(traj, basis, DressedView::Labels, Observable::AtomicExcitation);
    summary.row(key, fmt_fit(&fit));
    if let Ok(f) = fit {
        if closed_form > 0.0 {
            summary.row(format!("{key} / closed form"), format!("{:.4}", f.rate / closed_form));
        }
    }
}

pub fn schrodinger(preset: &Preset, opts: &EvolveOptions) -> Result<(Trajectory, DressedBasis)> {
    let ham = preset.hamiltonian()?;
    let traj = evolve_schrodinger(&ham, &preset.initial_state()?, opts)?;
    Ok((traj, DressedBasis::new(&ham)?))
}

pub fn lindblad(preset: &Preset, opts: &EvolveOptions) -> Result<(Trajectory, DressedBasis)> {
    let ham = preset.hamiltonian()?;
    let rates = preset.dissipation.clone().unwrap_or_default();
    let rho0 = DensityMatrix::from_pure(&preset.initial_state()?);
    let traj = evolve_lindblad(&ham, &rates, &rho0, opts)?;
    Ok((traj, DressedBasis::new(&ham)?))
}

fn trajectory_table(job: &Job, name: &str, command: &str, traj: &Trajectory) -> Result<Table> {
    let (axis, scale) = time_axis(&job.preset)?;
    let mut columns = vec![axis.to_string()];
    columns.extend(job.observables.iter().map(|&o| observable_column(o)));
    let mut table = Table::new(name, columns);
    job.header(&mut table, command);
    table.meta(format!("tol: {:e}, t_end: {:.16e} (1/omega0)", job.tol, traj.times.last().unwrap()));
    for (t, o) in traj.times.iter().zip(&traj.observables) {
        let mut row = vec![t * scale];
        row.extend(job.observables.iter().map(|s| s.extract(o)));
        table.push(row);
    }
    Ok(table)
}

fn driven(preset: &Preset) -> bool {
    let (n, k) = preset.transition;
    !preset.drives.is_empty() && n >= k + 2
}

pub fn evolve(job: &Job, out: &Path) -> Result<Summary> {
    let p = &job.preset;
    let mut summary = Summary::new(format!("evolve ({})", job.source));
    if p.dissipation.is_some() {
        summary.row("note", "dissipation ignored; use the lindblad command");
    }
    let (traj, basis) = schrodinger(p, &job.evolve_options()?)?;
    summary.row("dimension", p.space()?.dim().to_string());
    summary.row("max norm drift", format!("{:.3e}", traj.stats.max_norm_drift));
    summary.row("max cutoff population", format!("{:.3e}", traj.stats.max_cutoff_population));
    if driven(p) {
        let q = p.closed_form_rate()?;
        summary.row("closed-form rate", fmt_rate(q));
        fit_summary(&mut summary, "fitted rate (n_at)", &traj, &basis, q);
    }
    for w in &traj.stats.warnings {
        summary.row("warning", w.clone());
    }
    let table = trajectory_table(job, "evolve", "evolve", &traj)?;
    summary.emit(&table, out, job.svg, "evolve")?;
    Ok(summary)
}

pub fn lindblad_command(job: &Job, out: &Path) -> Result<Summary> {
    let p = &job.preset;
    let mut summary = Summary::new(format!("lindblad ({})", job.source));
    let (traj, basis) = lindblad(p, &job.evolve_options()?)?;
    let rates = p.dissipation.clone().unwrap_or_default();
    summary.row("dimension", p.space()?.dim().to_string());
    summary.row("kappa", format!("{:.3e}", rates.kappa));
    summary.row("max trace drift", format!("{:.3e}", traj.stats.max_trace_drift));
    summary.row("min eigenvalue", format!("{:.3e}", traj.stats.min_eigenvalue));
    summary.row("max cutoff population", format!("{:.3e}", traj.stats.max_cutoff_population));
    if driven(p) {
        let averaged = dicke_core::scan::dressed_series(&traj, &basis, DressedView::CycleAveraged, Observable::AtomicExcitation)?;
        summary.row("n_at contrast (cycle averaged)", format!("{:.4}", contrast(&averaged)));
    }
    let table = trajectory_table(job, "lindblad", "lindblad", &traj)?;
    summary.emit(&table, out, job.svg, "lindblad")?;
    Ok(summary)
}

pub fn contrast(values: &[f64]) -> f64 {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &v| (a.min(v), b.max(v)));
    hi - lo
}

fn analytic_space(preset: &Preset) -> Result<SpaceSpec> {
    SpaceSpec::collective(preset.n_qubits(), preset.n_max)
}

fn collective_schedules(preset: &Preset) -> Result<Vec<ModulationSchedule>> {
    preset
        .drives
        .iter()
        .map(|d| ModulationSchedule::new(d.target, d.epsilon, preset.eta(), d.phi))
        .collect()
}

fn note_realistic(preset: &Preset, table: &mut Table, summary: &mut Summary) {
    if matches!(preset.hamiltonian, HamiltonianSpec::Realistic(_)) {
        let msg = "analytics use identical qubits with the parameters of qubit 0";
        table.meta(format!("note: {msg}"));
        summary.row("note", msg);
    }
}

pub fn spectrum(job: &Job, out: &Path) -> Result<Summary> {
    let p = &job.preset;
    let params = p.collective_params();
    let space = analytic_space(p)?;
    let exact = spectrum_exact(&space, &params)?;
    let top = exact.max_m().unwrap_or(0);
    let perturbative = spectrum_perturbative(&space, &params, top)?;
    let effective: Option<DressedSpectrum> = effective_spectrum_to(&space, &params, top.min(p.n_max.saturating_sub(2))).ok();
    let mut table = Table::new(
        "spectrum",
        ["m", "label", "lambda_exact", "lambda_perturbative", "nu", "lambda_tilde"]
            .map(String::from)
            .to_vec(),
    );
    job.header(&mut table, "spectrum");
    let mut summary = Summary::new(format!("spectrum ({})", job.source));
    note_realistic(p, &mut table, &mut summary);
    let mut max_dev = 0.0f64;
    for e in exact.entries() {
        let lp = perturbative.entry(e.m, e.label)?.lambda;
        max_dev = max_dev.max((lp - e.lambda).abs());
        let shifted = effective.as_ref().and_then(|s| s.entry(e.m, e.label).ok());
        let (nu, tilde) = shifted.map_or((f64::NAN, f64::NAN), |s| (s.nu, s.lambda_tilde()));
        table.push(vec![e.m as f64, e.label as f64, e.lambda, lp, nu, tilde]);
    }
    summary.row("subspaces", format!("0..={top}"));
    summary.row("levels", exact.entries().len().to_string());
    summary.row("max |exact - perturbative|", format!("{max_dev:.3e}"));
    summary.emit(&table, out, false, "spectrum")?;
    Ok(summary)
}

pub fn rates(job: &Job, out: &Path) -> Result<Summary> {
    let p = &job.preset;
    let params = p.collective_params();
    let space = analytic_space(p)?;
    let (n, k0) = p.transition;
    let schedules = collective_schedules(p)?;
    let top = if params.with_crt { p.n_max.saturating_sub(2) } else { p.n_max };
    if n > top {
        return Err(Error::Cutoff {
            required: n + 2,
            reason: format!("rates of subspace {n}"),
        });
    }
    let effective = effective_spectrum_to(&space, &params, n)?;
    let scale = 2.0 * p.reference_detuning().abs();
    let mut table = Table::new(
        "rates",
        [
            "n",
            "k",
            "xi_closed_form",
            "xi_general",
            "eta_analytic_factor",
            "eta_effective_factor",
        ]
        .map(String::from)
        .to_vec(),
    );
    job.header(&mut table, "rates");
    let mut summary = Summary::new(format!("rates ({})", job.source));
    note_realistic(p, &mut table, &mut summary);
    for k in 0..=n.min(params.n_qubits) {
        if k + 2 > n.min(params.n_qubits) {
            break;
        }
        let closed = two_photon_rate_closed_form(n, k, &params, &schedules)?;
        let general = transition_rate_general(n, k, k + 2, &effective, &schedules)?;
        table.push(vec![
            n as f64,
            k as f64,
            closed.magnitude(),
            general.magnitude(),
            closed.eta_res / scale,
            general.eta_res / scale,
        ]);
        if k == k0 {
            summary.row(format!("closed-form |Xi| ({n},{k})"), fmt_rate(closed.magnitude()));
            summary.row(format!("dressed |Xi| ({n},{k})"), fmt_rate(general.magnitude()));
            summary.row("analytic eta factor", format!("{:.6}", closed.eta_res / scale));
            summary.row("dressed eta factor", format!("{:.6}", general.eta_res / scale));
        }
    }
    if table.rows.is_empty() {
        return Err(Error::Domain(format!(
            "subspace n = {n} has no two-photon transition for N = {}",
            params.n_qubits
        )));
    }
    summary.emit(&table, out, false, "rates")?;
    Ok(summary)
}

/// Default sweep: 17 points 0.001 apart around the preset factor.
fn sweep_settings(job: &Job) -> SweepConfig {
    job.sweep.clone().unwrap_or(SweepConfig {
        factor_min: job.preset.eta_factor - 0.008,
        factor_max: job.preset.eta_factor + 0.008,
        grid_points: 17,
        zoom: true,
        horizon: None,
        refine: false,
    })
}

fn sweep_table(job: &Job, name: &str, result: &SweepResult, scale: f64) -> Table {
    let mut table = Table::new(name, vec!["eta_factor".into(), "transfer".into()]);
    job.header(&mut table, "sweep");
    for (eta, tr) in result.etas.iter().zip(&result.transfer) {
        table.push(vec![eta / scale, *tr]);
    }
    table
}

pub fn sweep(job: &Job, out: &Path) -> Result<Summary> {
    let p = &job.preset;
    let (n, k) = p.transition;
    if n < k + 2 {
        return Err(Error::Config(format!("transition (n = {n}, k = {k}) has no two-photon partner")));
    }
    let cfg = sweep_settings(job);
    let scenario = p.sweep_scenario(p.sweep_cutoff())?;
    let mut opts = p.sweep_options(cfg.factor_min, cfg.factor_max, cfg.grid_points)?.zoom(cfg.zoom);
    if let Some(h) = cfg.horizon {
        opts.horizon = h;
    }
    let result = sweep_resonance(&scenario, &opts)?;
    let scale = 2.0 * p.reference_detuning().abs();
    let mut summary = Summary::new(format!("sweep ({})", job.source));
    if p.dissipation.is_some() {
        summary.row("note", "sweeps are unitary; dissipation ignored");
    }
    summary.row("peak eta factor", format!("{:.6}", result.peak_eta / scale));
    summary.row("peak width (factor)", format!("{:.3e}", result.peak_width / scale));
    summary.row("peak transfer", format!("{:.4}", result.diagnostics.peak_transfer));
    summary.row("background", format!("{:.3e}", result.diagnostics.background));
    summary.row("analytic eta factor", format!("{:.6}", p.analytic_eta() / scale));
    if cfg.refine {
        let h = result.diagnostics.grid_spacing;
        let refined = refine_peak(&scenario, result.peak_eta - h, result.peak_eta + h, opts.horizon, 1e-7)?;
        summary.row("refined eta factor", format!("{:.7}", refined / scale));
    }
    let mut table = sweep_table(job, "sweep", &result, scale);
    table.meta(format!("horizon: {:.16e} (1/omega0), n_max: {}", opts.horizon, p.sweep_cutoff()));
    summary.emit(&table, out, job.svg, "transfer vs eta factor")?;
    if let Some(coarse) = &result.diagnostics.coarse {
        let table = sweep_table(job, "sweep_coarse", coarse, scale);
        summary.emit(&table, out, false, "")?;
    }
    Ok(summary)
}
