//! Protocol runners. Each returns its CSV files in memory plus a small summary
//! table; nothing touches the filesystem here.

use std::f64::consts::TAU;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};
use xxz_core::io;
use xxz_core::meanfield::{evolve, EvolveOptions, Schedule};
use xxz_core::protocols::{
    angle_cut, angular_sweep, fit_angular_law, phase_diagram, run_dephasing, run_susceptibility,
    susceptibility_analytic, DephasingOptions, DiagramCell, SusceptibilityOptions, TomographyOptions,
};
use xxz_core::quantum::{build_system, protection_gap, spectrum};
use xxz_core::{CouplingSet, EnsembleState, Vec3};

use crate::config::{InitialConfig, RunConfig};
use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Protocol {
    Evolve,
    Tomography,
    Susceptibility,
    PhaseDiagram,
    Dephase,
    Spectrum,
}

impl Protocol {
    pub fn name(self) -> &'static str {
        match self {
            Protocol::Evolve => "evolve",
            Protocol::Tomography => "tomography",
            Protocol::Susceptibility => "susceptibility",
            Protocol::PhaseDiagram => "phase-diagram",
            Protocol::Dephase => "dephase",
            Protocol::Spectrum => "spectrum",
        }
    }

    /// Columns of the per-run summary table, also used by sweeps.
    pub fn summary_header(self) -> &'static [&'static str] {
        match self {
            Protocol::Evolve => &["t_s", "Fx_per_atom", "Fy_per_atom", "Fz_per_atom", "Cg", "energy_hz"],
            Protocol::Tomography => &io::TOMOGRAPHY_HEADER,
            Protocol::Susceptibility => &["lambda_eff_hz", "chi", "chi_raw", "chi_analytic", "step_ratio", "cap_flag"],
            Protocol::PhaseDiagram => &PHASE_HEADER,
            Protocol::Dephase => &[
                "lambda_over_muL",
                "slope_over_muL",
                "max_excursion_rad",
                "Cg_initial",
                "Cg_probe",
                "Cg_final",
                "Jxy_hz",
                "Jz_hz",
            ],
            Protocol::Spectrum => &["n", "ground_energy_hz", "gap_hz"],
        }
    }

    pub fn run(self, cfg: &RunConfig) -> Result<Outcome, CliError> {
        match self {
            Protocol::Evolve => run_evolve(cfg),
            Protocol::Tomography => run_tomography(cfg),
            Protocol::Susceptibility => run_scan(cfg),
            Protocol::PhaseDiagram => run_phase_diagram(cfg),
            Protocol::Dephase => run_dephase(cfg),
            Protocol::Spectrum => run_spectrum(cfg),
        }
    }
}

impl FromStr for Protocol {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        Ok(match s {
            "evolve" => Protocol::Evolve,
            "tomography" => Protocol::Tomography,
            "susceptibility" => Protocol::Susceptibility,
            "phase-diagram" | "phase_diagram" => Protocol::PhaseDiagram,
            "dephase" => Protocol::Dephase,
            "spectrum" => Protocol::Spectrum,
            other => return Err(CliError::Config(format!("unknown protocol '{other}'"))),
        })
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

pub const PHASE_HEADER: [&str; 5] = ["lambda_z_hz", "lambda_xy_hz", "lambda_eff_hz", "log_chi", "phase"];

#[derive(Debug, Default)]
pub struct Outcome {
    pub files: Vec<(String, Vec<u8>)>,
    pub summary: Vec<Vec<String>>,
    /// Resolved inputs and derived results for the manifest.
    pub details: Value,
    pub warnings: Vec<String>,
}

/// Summary numbers carry 12 significant digits so eigensolver and
/// unit-conversion noise does not show up in the tables.
pub fn num(x: f64) -> String {
    if !x.is_finite() || x == 0.0 {
        return x.to_string();
    }
    let r: f64 = format!("{x:.11e}").parse().unwrap_or(x);
    if (1e-4..1e15).contains(&r.abs()) {
        r.to_string()
    } else {
        format!("{r:e}")
    }
}

fn hz(x: f64) -> f64 {
    x / TAU
}

fn csv_bytes(f: impl FnOnce(&mut Vec<u8>) -> xxz_core::Result<()>) -> Result<Vec<u8>, CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    Ok(buf)
}

fn couplings_json(c: &CouplingSet) -> Value {
    json!({
        "j_xy_hz": hz(c.j_xy),
        "j_z_hz": hz(c.j_z),
        "h_x_hz": hz(c.h_x),
        "h_z_hz": hz(c.h_z),
        "mu_hz": hz(c.mu),
        "gamma_sc": c.gamma_sc,
        "inhom_hz": c.inhom.as_ref().map(|v| v.iter().map(|x| hz(*x)).collect::<Vec<_>>()),
    })
}

fn ensemble_json(e: &EnsembleState) -> Value {
    json!({
        "n_atoms": e.n_atoms,
        "n_sites": e.n_sites(),
        "extent": [e.extent.0, e.extent.1],
        "z_r_m": e.z_r,
        "contrast0": e.contrast0,
        "coupling_scale": e.coupling_scale,
    })
}

fn unit(v: [f64; 3], what: &str) -> Result<Vec3<f64>, CliError> {
    Vec3::new(v[0], v[1], v[2])
        .normalized()
        .ok_or_else(|| CliError::Config(format!("{what} must be a nonzero finite vector")))
}

/// Rotates each spin by a random angle (uniform, standard deviation `sigma`)
/// about a random axis; lengths are unchanged.
fn perturb(state: &mut EnsembleState, sigma: f64, seed: u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let half = sigma * 3f64.sqrt();
    for s in &mut state.sites {
        let z: f64 = rng.random_range(-1.0..=1.0);
        let phi: f64 = rng.random_range(0.0..TAU);
        let r = (1.0 - z * z).sqrt();
        let axis = Vec3::new(r * phi.cos(), r * phi.sin(), z);
        let angle: f64 = rng.random_range(-half..=half);
        let (sn, cs) = angle.sin_cos();
        let f = s.f;
        s.f = f.scale(cs) + axis.cross(f).scale(sn) + axis.scale(axis.dot(f) * (1.0 - cs));
    }
}

fn run_evolve(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let ev = &cfg.evolve;
    if !(ev.duration_s > 0.0) {
        return Err(CliError::Config("evolve.duration_s must be positive".into()));
    }
    if !(ev.perturbation_rad >= 0.0) {
        return Err(CliError::Config("evolve.perturbation_rad must be >= 0".into()));
    }
    let mut state = cfg.ensemble.build()?;
    let contrast = ev.contrast.unwrap_or(state.contrast0);
    let couplings = cfg.resolve_couplings()?;
    let mut opts = EvolveOptions::new(cfg.sample_dt_or(1e-5)?);
    opts.max_phase_per_step = cfg.max_phase_per_step;
    opts.dt = ev.dt_s;
    opts.winding_length = ev.winding_length;
    opts.keep_snapshots = false;
    match ev.initial {
        InitialConfig::Uniform { direction } => state.prepare_uniform(unit(direction, "evolve.initial.direction")?, contrast)?,
        InitialConfig::Texture { alpha } => {
            let regions = state.default_regions();
            state.prepare_texture(unit(alpha, "evolve.initial.alpha")?, contrast, &regions)?;
            opts.regions = vec![regions.a, regions.b, regions.c];
        }
    }
    if ev.perturbation_rad > 0.0 {
        perturb(&mut state, ev.perturbation_rad, cfg.seed);
    }
    let traj = evolve(&state, &Schedule::constant(&couplings, ev.duration_s), &opts)?;

    let last = traj.samples.last().expect("at least one sample");
    let per_atom = last.weighted.scale(1.0 / state.n_atoms);
    let e0 = traj.samples[0].energy;
    let drift = traj.samples.iter().map(|s| (s.energy - e0).abs()).fold(0.0, f64::max);
    Ok(Outcome {
        files: vec![
            ("trajectory.csv".into(), csv_bytes(|b| io::write_trajectory(b, &traj))?),
            ("final_state.csv".into(), csv_bytes(|b| io::write_state(b, &traj.final_state))?),
        ],
        summary: vec![vec![
            num(last.t),
            num(per_atom.x),
            num(per_atom.y),
            num(per_atom.z),
            num(last.contrast),
            num(hz(last.energy)),
        ]],
        details: json!({
            "ensemble": ensemble_json(&state),
            "couplings": couplings_json(&couplings),
            "initial_contrast": contrast,
            "sample_dt": opts.sample_dt,
            "max_phase_per_step": opts.max_phase_per_step,
            "dt_s": opts.dt,
            "rk4_steps": traj.steps,
            "renormalizations": traj.renormalizations,
            "max_energy_drift_hz": hz(drift),
        }),
        warnings: Vec::new(),
    })
}

fn run_tomography(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let t = &cfg.tomography;
    if t.delta_signs.iter().any(|&s| s != 1 && s != -1) {
        return Err(CliError::Config("tomography.delta_signs entries must be +1 or -1".into()));
    }
    let ens = cfg.ensemble.build()?;
    let params = cfg.physical.to_angular::<f64>();
    let thetas: Vec<f64> = if t.thetas_deg.is_empty() { vec![cfg.physical.theta_deg] } else { t.thetas_deg.clone() }
        .iter()
        .map(|d| d.to_radians())
        .collect();
    let mut results = Vec::new();
    let mut laws = Vec::new();
    for &sign in &t.delta_signs {
        let opts = TomographyOptions {
            theta: 0.0,
            delta_sign: sign,
            duration: t.duration_s,
            n_samples: t.n_samples,
            probe_centers: t.probe_centers,
            probe_half_width: t.probe_half_width,
            max_phase_per_step: cfg.max_phase_per_step,
        };
        let rows = angular_sweep(&ens, &params, &thetas, &opts)?;
        let law = match fit_angular_law(&rows) {
            Ok(l) => json!({
                "delta_sign": sign,
                "jz0_hz": hz(l.j_z0),
                "jxy90_hz": hz(l.j_xy90),
                "r2_cos2": l.r2_z,
                "r2_sin2": l.r2_xy,
                "ratio": l.ratio,
            }),
            Err(e) => json!({ "delta_sign": sign, "unavailable": e.to_string() }),
        };
        laws.push(law);
        results.extend(rows);
    }
    let file = csv_bytes(|b| io::write_tomography(b, &results))?;
    let summary = results
        .iter()
        .map(|r| {
            vec![
                num(r.theta.to_degrees()),
                r.delta_sign.to_string(),
                num(hz(r.j_z)),
                num(hz(r.j_z_err)),
                num(hz(r.j_xy)),
                num(hz(r.j_xy_err)),
            ]
        })
        .collect();
    let truth: Vec<Value> = results
        .iter()
        .map(|r| json!({ "theta_deg": r.theta.to_degrees(), "delta_sign": r.delta_sign, "jz_true_hz": hz(r.j_z_true), "jxy_true_hz": hz(r.j_xy_true) }))
        .collect();
    Ok(Outcome {
        files: vec![("tomography.csv".into(), file)],
        summary,
        details: json!({
            "ensemble": ensemble_json(&ens),
            "bare_coupling_hz": hz(params.bare_coupling()?),
            "max_phase_per_step": cfg.max_phase_per_step,
            "generating_couplings": truth,
            "angular_law": laws,
        }),
        warnings: params.validity_warnings(),
    })
}

fn run_scan(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = &cfg.susceptibility;
    let ens = cfg.ensemble.build()?;
    let mut couplings = cfg.resolve_couplings()?;
    couplings.h_x = TAU * s.h_x_hz;
    couplings.h_z = 0.0;
    let opts = SusceptibilityOptions {
        eps: s.eps,
        ramp_duration: s.ramp_s,
        hold_duration: s.hold_s,
        ramp_segments: s.ramp_segments,
        sample_dt: cfg.sample_dt_or(2e-5)?,
        max_phase_per_step: cfg.max_phase_per_step,
        preparation: s.preparation.resolve(),
        adiabatic_tolerance: s.adiabatic_tolerance,
    };
    let grid: Vec<f64> = s.h_z_hz.iter().map(|h| TAU * h).collect();
    let scan = run_susceptibility(&ens, &couplings, &grid, &opts)?;
    let analytic = susceptibility_analytic(scan.lambda_eff, scan.h_x)?;
    let non_adiabatic: Vec<f64> = scan.points.iter().filter(|p| !p.adiabatic).map(|p| hz(p.h_z)).collect();
    let mut warnings = Vec::new();
    if !non_adiabatic.is_empty() {
        warnings.push(format!("non-adiabatic preparation at h_z = {non_adiabatic:?} Hz"));
    }
    Ok(Outcome {
        files: vec![("scan.csv".into(), csv_bytes(|b| io::write_scan(b, &scan))?)],
        summary: vec![vec![
            num(hz(scan.lambda_eff)),
            num(scan.chi),
            num(scan.chi_raw),
            num(analytic),
            num(scan.step_ratio),
            scan.cap_flag.to_string(),
        ]],
        details: json!({
            "ensemble": ensemble_json(&ens),
            "couplings": couplings_json(&couplings),
            "eps": opts.eps,
            "ramp_s": opts.ramp_duration,
            "hold_s": opts.hold_duration,
            "ramp_segments": opts.ramp_segments,
            "sample_dt": opts.sample_dt,
            "max_phase_per_step": opts.max_phase_per_step,
            "adiabatic_tolerance": opts.adiabatic_tolerance,
            "energy_excess": scan.points.iter().map(|p| p.energy_excess).collect::<Vec<_>>(),
        }),
        warnings,
    })
}

fn phase_row(c: &DiagramCell<f64>) -> Vec<String> {
    let log_chi = match c.log_chi {
        Some(x) if x.is_infinite() => "inf".to_string(),
        Some(x) => num(x),
        None => String::new(),
    };
    let phase = serde_json::to_value(c.phase).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default();
    vec![num(c.lambda_z), num(c.lambda_xy), num(c.lambda_eff), log_chi, phase]
}

fn run_phase_diagram(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let p = &cfg.phase_diagram;
    // χ depends only on ratios, so the map is evaluated directly in Hz
    let cells = match &p.angle_cut {
        Some(cut) => {
            let thetas: Vec<f64> = cut.thetas_deg.iter().map(|d| d.to_radians()).collect();
            angle_cut(cut.lambda0_hz, &thetas, p.h_x_hz)?
        }
        None => phase_diagram(&p.lambda_z_hz, &p.lambda_xy_hz, p.h_x_hz)?,
    };
    let summary: Vec<Vec<String>> = cells.iter().map(phase_row).collect();
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut buf);
        w.write_record(PHASE_HEADER).map_err(|e| CliError::Io(e.to_string()))?;
        for row in &summary {
            w.write_record(row).map_err(|e| CliError::Io(e.to_string()))?;
        }
        w.flush()?;
    }
    Ok(Outcome {
        files: vec![("phase_diagram.csv".into(), buf)],
        summary,
        details: json!({ "cells": cells.len(), "h_x_hz": p.h_x_hz, "critical_band": xxz_core::protocols::CRITICAL_BAND }),
        warnings: Vec::new(),
    })
}

fn run_dephase(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let d = &cfg.dephase;
    let ens = cfg.ensemble.build()?;
    let opts = DephasingOptions {
        mu: TAU * d.mu_hz,
        h_x_pre: d.h_x_pre_hz.map(|h| TAU * h),
        duration: d.duration_s,
        sample_dt: cfg.sample_dt_or(1e-5)?,
        length: d.length,
        gamma_sc: d.gamma_sc,
        interaction: d.interaction.resolve(),
        probe_time: d.probe_time_s,
        relax: Default::default(),
        max_phase_per_step: cfg.max_phase_per_step,
    };
    let run = run_dephasing(&ens, &opts)?;
    let s = &run.summary;
    let slope = s.winding_fit.value("slope") / s.mu_l;
    Ok(Outcome {
        files: vec![("dephasing.csv".into(), csv_bytes(|b| io::write_dephasing(b, std::slice::from_ref(&run)))?)],
        summary: vec![vec![
            num(run.lambda_over_mu_l),
            num(slope),
            num(s.max_excursion),
            num(s.contrast_initial),
            num(s.contrast_at_probe),
            num(s.contrast_final),
            num(hz(run.j_xy)),
            num(hz(run.j_z)),
        ]],
        details: json!({
            "ensemble": ensemble_json(&ens),
            "mu_l_hz": hz(s.mu_l),
            "h_x_pre_hz": hz(opts.resolved_h_x_pre()),
            "sample_dt": opts.sample_dt,
            "max_phase_per_step": opts.max_phase_per_step,
            "relax": { "mixing": opts.relax.mixing, "tolerance": opts.relax.tolerance, "max_iterations": opts.relax.max_iterations },
            "lambda_hz": hz(run.lambda),
            "winding_fit": { "slope_rad_per_s": s.winding_fit.value("slope"), "intercept_rad": s.winding_fit.value("intercept") },
        }),
        warnings: Vec::new(),
    })
}

fn run_spectrum(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let s = &cfg.spectrum;
    let weights = s.weights.clone().unwrap_or_else(|| vec![1.0; s.n]);
    if weights.len() != s.n {
        return Err(CliError::Config(format!("spectrum.weights has {} entries for n = {}", weights.len(), s.n)));
    }
    let sys = build_system(s.n, &weights)?;
    let couplings = CouplingSet {
        j_xy: TAU * s.j_xy_hz,
        j_z: TAU * s.j_z_hz,
        h_x: TAU * s.h_x_hz,
        h_z: TAU * s.h_z_hz,
        ..CouplingSet::zero()
    };
    let spec = spectrum(&sys, &couplings)?;
    let mut warnings = Vec::new();
    let gap = if sys.uniform_weights() && couplings.j_xy < 0.0 {
        Some(hz(protection_gap(&sys, couplings.j_xy)?))
    } else {
        warnings.push("protection gap needs uniform weights and j_xy_hz < 0; not reported".into());
        None
    };
    let ground = spec.energies.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(Outcome {
        files: vec![("spectrum.csv".into(), csv_bytes(|b| io::write_spectrum(b, &spec))?)],
        summary: vec![vec![s.n.to_string(), num(hz(ground)), gap.map(num).unwrap_or_default()]],
        details: json!({
            "dimension": sys.dim,
            "weights": weights,
            "f_conserved": spec.f_conserved,
            "m_conserved": spec.m_labels.is_some(),
        }),
        warnings,
    })
}
