//! One-command reproductions of the four reference figures.

use std::path::Path;

use dicke_core::dispersive::{phase_phi, reconstruct_state, rwa_solution, spectrum_perturbative, two_photon_rate_closed_form, EffectiveState};
use dicke_core::dynamics::{EvolveOptions, Observable, Trajectory};
use dicke_core::hilbert::{observables, SpaceSpec};
use dicke_core::presets::{self, Preset};
use dicke_core::scan::{dressed_series, fit_rabi_dressed, DressedBasis, DressedView};
use dicke_core::{Error, Result, C64};

use crate::commands::{contrast, fmt_fit, fmt_rate, lindblad, schrodinger, t_end, time_axis, Overrides, Summary};
use crate::output::Table;

const SAMPLES: usize = 401;
const TOL: f64 = 1e-10;
/// Lindblad runs: tighter settings cost minutes per microsecond.
const LINDBLAD_TOL: f64 = 1e-8;

pub fn run(figure: u8, overrides: &Overrides, out: &Path) -> Result<Summary> {
    match figure {
        1 => figure1(overrides, out),
        2 => figure2(overrides, out),
        3 => figure3(overrides, out),
        4 => figure4(overrides, out),
        _ => Err(Error::Config(format!("no figure {figure}"))),
    }
}

fn prepared(mut preset: Preset, overrides: &Overrides) -> Result<Preset> {
    overrides.apply(&mut preset)?;
    Ok(preset)
}

fn samples(overrides: &Overrides) -> Result<usize> {
    match overrides.samples {
        Some(n) if n < 2 => Err(Error::Config("--samples must be at least 2".into())),
        Some(n) => Ok(n),
        None => Ok(SAMPLES),
    }
}

fn header(table: &mut Table, figure: &str, runs: &[&Preset]) {
    table.meta(format!("command: {figure}"));
    let mut seen: Vec<&String> = Vec::new();
    for p in runs {
        for line in &p.provenance {
            if !seen.contains(&line) {
                seen.push(line);
                table.meta(format!("provenance: {line}"));
            }
        }
        table.meta(format!(
            "run {}: n_max {}, with_crt {}, eta_factor {}, eta {:.16e}",
            p.name,
            p.n_max,
            p.with_crt(),
            p.eta_factor,
            p.eta()
        ));
    }
}

fn series(traj: &Trajectory, o: Observable) -> Vec<f64> {
    traj.series(o)
}

fn fit_row(summary: &mut Summary, key: &str, traj: &Trajectory, basis: &DressedBasis, view: DressedView, o: Observable) -> Option<f64> {
    let fit = fit_rabi_dressed(traj, basis, view, o);
    summary.row(key, fmt_fit(&fit));
    fit.ok().map(|f| f.rate)
}

/// Resonant two-level solution mapped back onto the full space.
fn analytic_figure1(preset: &Preset, times: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    let params = preset.collective_params();
    let (n, k) = preset.transition;
    let space = SpaceSpec::collective(preset.n_qubits(), preset.n_max)?;
    let spectrum = spectrum_perturbative(&space, &params, n)?;
    let schedules = preset.schedules()?;
    let xi = two_photon_rate_closed_form(n, k, &params, &schedules)?.xi;
    let (mut n_ph, mut n_at) = (Vec::new(), Vec::new());
    for &t in times {
        let (bt, bs) = rwa_solution(C64::new(1.0, 0.0), C64::default(), xi, t);
        let state = EffectiveState {
            m: n,
            labels: vec![k, k + 2],
            b: vec![bt, bs],
            phi: vec![
                phase_phi(n, k, t, &spectrum, &schedules)?,
                phase_phi(n, k + 2, t, &spectrum, &schedules)?,
            ],
            t,
        };
        let o = observables(&reconstruct_state(&state, &spectrum)?)?;
        n_ph.push(o.n_ph);
        n_at.push(o.n_at);
    }
    Ok((n_ph, n_at))
}

fn figure1(overrides: &Overrides, out: &Path) -> Result<Summary> {
    let crt = prepared(presets::figure1(true), overrides)?;
    let mut tc = prepared(presets::figure1(false), overrides)?;
    tc.set_crt(false);
    let opts = EvolveOptions::new(t_end(&crt)?, samples(overrides)?, TOL).store_states(true);
    let (axis, scale) = time_axis(&crt)?;
    let (run_crt, basis_crt) = schrodinger(&crt, &opts)?;
    let (run_tc, basis_tc) = schrodinger(&tc, &opts)?;
    let (an_ph, an_at) = analytic_figure1(&crt, &run_crt.times)?;

    let columns = [
        axis,
        "n_ph_analytic",
        "n_ph_exact_crt",
        "n_ph_exact_tc",
        "n_at_analytic",
        "n_at_exact_crt",
        "n_at_exact_tc",
    ];
    let mut table = Table::new("figure1", columns.map(String::from).to_vec());
    header(&mut table, "figure1", &[&crt, &tc]);
    let cols = [
        an_ph,
        series(&run_crt, Observable::PhotonNumber),
        series(&run_tc, Observable::PhotonNumber),
        an_at,
        series(&run_crt, Observable::AtomicExcitation),
        series(&run_tc, Observable::AtomicExcitation),
    ];
    for (i, t) in run_crt.times.iter().enumerate() {
        let mut row = vec![t * scale];
        row.extend(cols.iter().map(|c| c[i]));
        table.push(row);
    }

    let mut summary = Summary::new("figure1: N = 2, |0> (x) |5>, coupling modulation");
    let q = crt.closed_form_rate()?;
    summary.row("eta factor (CRT / TC)", format!("{} / {}", crt.eta_factor, tc.eta_factor));
    summary.row("closed-form rate", fmt_rate(q));
    for (key, traj, basis) in [("fitted rate CRT", &run_crt, &basis_crt), ("fitted rate TC", &run_tc, &basis_tc)] {
        if let Some(r) = fit_row(&mut summary, key, traj, basis, DressedView::Labels, Observable::AtomicExcitation) {
            summary.row(format!("{key} / closed form"), format!("{:.4}", r / q));
        }
    }
    summary.row("max norm drift", format!("{:.3e}", run_crt.stats.max_norm_drift.max(run_tc.stats.max_norm_drift)));
    summary.emit(&table, out, overrides.svg, "Fig. 1: photon and atomic excitation numbers")?;
    Ok(summary)
}

fn figure2(overrides: &Overrides, out: &Path) -> Result<Summary> {
    let g = prepared(presets::figure2(false), overrides)?;
    let go = prepared(presets::figure2(true), overrides)?;
    // both runs share the time axis of the coupling-only rate
    let opts = EvolveOptions::new(t_end(&g)?, samples(overrides)?, TOL).store_states(true);
    let (axis, scale) = time_axis(&g)?;
    let (run_g, basis_g) = schrodinger(&g, &opts)?;
    let (run_go, basis_go) = schrodinger(&go, &opts)?;

    let columns = [axis, "n_ph_g", "n_ph_g_omega", "n_at_g", "n_at_g_omega"];
    let mut table = Table::new("figure2", columns.map(String::from).to_vec());
    header(&mut table, "figure2", &[&g, &go]);
    let cols = [
        series(&run_g, Observable::PhotonNumber),
        series(&run_go, Observable::PhotonNumber),
        series(&run_g, Observable::AtomicExcitation),
        series(&run_go, Observable::AtomicExcitation),
    ];
    for (i, t) in run_g.times.iter().enumerate() {
        let mut row = vec![t * scale];
        row.extend(cols.iter().map(|c| c[i]));
        table.push(row);
    }

    let mut summary = Summary::new("figure2: N = 6, coherent alpha^2 = 5.5");
    summary.row("eta factor (g / g+Omega)", format!("{} / {}", g.eta_factor, go.eta_factor));
    summary.row("closed-form rate g", fmt_rate(g.closed_form_rate()?));
    summary.row("closed-form rate g+Omega", fmt_rate(go.closed_form_rate()?));
    let a = fit_row(&mut summary, "fitted rate g", &run_g, &basis_g, DressedView::Labels, Observable::AtomicExcitation);
    let b = fit_row(&mut summary, "fitted rate g+Omega", &run_go, &basis_go, DressedView::Labels, Observable::AtomicExcitation);
    if let (Some(a), Some(b)) = (a, b) {
        summary.row("rate ratio (g+Omega) / g", format!("{:.4}", b / a));
    }
    summary.emit(&table, out, overrides.svg, "Fig. 2: g and g+Omega modulation")?;
    Ok(summary)
}

fn figure3(overrides: &Overrides, out: &Path) -> Result<Summary> {
    let p = prepared(presets::figure3(), overrides)?;
    let opts = EvolveOptions::new(t_end(&p)?, samples(overrides)?, TOL).store_states(true);
    let (axis, scale) = time_axis(&p)?;
    let (traj, basis) = schrodinger(&p, &opts)?;

    let photons = 0..=10usize;
    let atoms = 0..=p.n_qubits();
    let mut columns = vec![axis.to_string()];
    columns.extend(photons.clone().map(|k| format!("p_ph_{k}")));
    columns.extend(atoms.clone().map(|m| format!("p_at_{m}")));
    let mut table = Table::new("figure3", columns);
    header(&mut table, "figure3", &[&p]);
    for (t, o) in traj.times.iter().zip(&traj.observables) {
        let mut row = vec![t * scale];
        row.extend(photons.clone().map(|k| Observable::PhotonProbability(k).extract(o)));
        row.extend(atoms.clone().map(|m| Observable::AtomProbability(m).extract(o)));
        table.push(row);
    }

    let mut summary = Summary::new("figure3: photon and atomic probabilities, g+Omega modulation");
    for (key, o) in [
        ("P_ph(5), dressed", Observable::PhotonProbability(5)),
        ("P_ph(3), dressed", Observable::PhotonProbability(3)),
        ("P_at(0), dressed", Observable::AtomProbability(0)),
        ("P_at(2), dressed", Observable::AtomProbability(2)),
    ] {
        fit_row(&mut summary, key, &traj, &basis, DressedView::Labels, o);
    }
    for (key, o) in [
        ("P_ph(2), cycle averaged", Observable::PhotonProbability(2)),
        ("P_at(3), cycle averaged", Observable::AtomProbability(3)),
    ] {
        fit_row(&mut summary, key, &traj, &basis, DressedView::CycleAveraged, o);
    }
    summary.emit(&table, out, overrides.svg, "Fig. 3: P_ph(k) and P_at(m)")?;
    Ok(summary)
}

fn figure4(overrides: &Overrides, out: &Path) -> Result<Summary> {
    let ideal = prepared(presets::figure4(false), overrides)?;
    let real = prepared(presets::figure4(true), overrides)?;
    let n = samples(overrides)?;
    let (axis, scale) = time_axis(&ideal)?;
    let (run_ideal, basis_ideal) = schrodinger(&ideal, &EvolveOptions::new(t_end(&ideal)?, n, TOL).store_states(true))?;
    let (run_real, basis_real) = lindblad(&real, &EvolveOptions::new(t_end(&real)?, n, LINDBLAD_TOL).store_states(true))?;
    let averaged = dressed_series(&run_real, &basis_real, DressedView::CycleAveraged, Observable::AtomicExcitation)?;

    let columns = [
        axis,
        "n_ph_ideal",
        "n_ph_realistic",
        "n_at_ideal",
        "n_at_realistic",
        "n_at_realistic_averaged",
    ];
    let mut table = Table::new("figure4", columns.map(String::from).to_vec());
    header(&mut table, "figure4", &[&ideal, &real]);
    table.meta(format!("lindblad tol: {LINDBLAD_TOL:e}; n_at_realistic_averaged drops the fast dressing oscillation"));
    let cols = [
        series(&run_ideal, Observable::PhotonNumber),
        series(&run_real, Observable::PhotonNumber),
        series(&run_ideal, Observable::AtomicExcitation),
        series(&run_real, Observable::AtomicExcitation),
        averaged.clone(),
    ];
    for (i, t) in run_ideal.times.iter().enumerate() {
        let mut row = vec![t * scale];
        row.extend(cols.iter().map(|c| c[i]));
        table.push(row);
    }

    let mut summary = Summary::new("figure4: two qubits, ideal and realistic, omega0 / 2 pi = 10 GHz");
    summary.row("eta factor (ideal / realistic)", format!("{} / {}", ideal.eta_factor, real.eta_factor));
    fit_row(&mut summary, "fitted rate ideal", &run_ideal, &basis_ideal, DressedView::Labels, Observable::AtomicExcitation);
    let early: Vec<f64> = run_real
        .times
        .iter()
        .zip(&averaged)
        .filter(|(t, _)| **t * scale <= 1.0)
        .map(|(_, v)| *v)
        .collect();
    summary.row("realistic n_at contrast, t <= 1 us", format!("{:.4}", contrast(&early)));
    summary.row("max trace drift", format!("{:.3e}", run_real.stats.max_trace_drift));
    summary.row("min eigenvalue", format!("{:.3e}", run_real.stats.min_eigenvalue));
    summary.emit(&table, out, overrides.svg, "Fig. 4: ideal and realistic n_at, n_ph")?;
    Ok(summary)
}
