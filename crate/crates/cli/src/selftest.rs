//! Fast invariant checks shipped with the binary.

use std::f64::consts::TAU;

use xxz_core::ensemble::{make_ensemble, CloudSpec, CouplingProfile};
use xxz_core::meanfield::{evolve, EvolveOptions, Schedule};
use xxz_core::protocols::{equilibrium_magnetization, fit_sinusoid, susceptibility_analytic};
use xxz_core::quantum::{build_system, coherent_product_state, evolve_quantum, protection_gap, spectrum};
use xxz_core::{CouplingSet, Vec3};

type Check = (&'static str, fn() -> Result<String, String>);

fn larmor() -> Result<String, String> {
    let mut s = make_ensemble(1.0, 1, &CloudSpec::default_uniform(), &CouplingProfile::Uniform, 1.0).map_err(|e| e.to_string())?;
    s.prepare_uniform(Vec3::unit_x(), 1.0).map_err(|e| e.to_string())?;
    let c = CouplingSet { h_z: TAU * 1e3, ..CouplingSet::zero() };
    let t = evolve(&s, &Schedule::constant(&c, 0.25e-3), &EvolveOptions::new(0.25e-3)).map_err(|e| e.to_string())?;
    let err = t.final_state.sites[0].f.max_abs_diff(Vec3::unit_y());
    if err <= 1e-9 { Ok(format!("error {err:.1e}")) } else { Err(format!("error {err:.1e}")) }
}

fn norm_and_shift() -> Result<String, String> {
    let n = 1e3;
    let mut s = make_ensemble(n, 16, &CloudSpec::default_uniform(), &CouplingProfile::Uniform, 1.0).map_err(|e| e.to_string())?;
    for (k, site) in s.sites.iter_mut().enumerate() {
        let (th, ph) = (0.3 + 0.1 * k as f64, 0.7 * k as f64);
        site.f = Vec3::new(th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos());
    }
    let a = CouplingSet { j_xy: TAU * 500.0 / n, j_z: -TAU * 200.0 / n, h_x: TAU * 300.0, ..CouplingSet::zero() };
    let b = CouplingSet { j_xy: a.j_xy + TAU * 400.0 / n, j_z: a.j_z + TAU * 400.0 / n, ..a.clone() };
    let mut opts = EvolveOptions::new(1e-4);
    opts.dt = Some(1e-7);
    let ta = evolve(&s, &Schedule::constant(&a, 1e-3), &opts).map_err(|e| e.to_string())?;
    let tb = evolve(&s, &Schedule::constant(&b, 1e-3), &opts).map_err(|e| e.to_string())?;
    let shift = ta.samples.iter().zip(&tb.samples).map(|(x, y)| x.unweighted.max_abs_diff(y.unweighted) / n).fold(0.0, f64::max);
    let norm = ta.final_state.sites.iter().map(|x| (x.f.norm() - 1.0).abs()).fold(0.0, f64::max);
    let msg = format!("shift deviation {shift:.1e}, norm drift {norm:.1e}");
    if shift <= 1e-8 && norm <= 1e-9 { Ok(msg) } else { Err(msg) }
}

fn gap_two_atoms() -> Result<String, String> {
    let sys = build_system(2, &[1.0_f64, 1.0]).map_err(|e| e.to_string())?;
    let g = protection_gap(&sys, -1.0).map_err(|e| e.to_string())?;
    if (g - 4.0).abs() <= 1e-10 { Ok(format!("gap {g}")) } else { Err(format!("gap {g}, expected 4")) }
}

fn quantum_conservation() -> Result<String, String> {
    let sys = build_system(3, &[1.0, 0.8, 1.2]).map_err(|e| e.to_string())?;
    let c = CouplingSet { j_xy: -0.7, j_z: 0.4, h_x: 0.3, h_z: 0.1, ..CouplingSet::zero() };
    let spec = spectrum(&sys, &c).map_err(|e| e.to_string())?;
    let psi0 = coherent_product_state(&sys, Vec3::new(0.6, 0.0, 0.8), &[]).map_err(|e| e.to_string())?;
    let psi = evolve_quantum(&spec, &psi0, 7.3).map_err(|e| e.to_string())?;
    let drift = (psi.norm() - 1.0).abs();
    let algebra = sys.algebra_defect();
    let msg = format!("norm drift {drift:.1e}, algebra defect {algebra:.1e}");
    if drift <= 1e-10 && algebra <= 1e-12 { Ok(msg) } else { Err(msg) }
}

fn free_susceptibility() -> Result<String, String> {
    let d = 1e-5;
    let m = |hz: f64| equilibrium_magnetization(0.0, 1.0, hz).map(|e| e.m).map_err(|e| e.to_string());
    let chi = -(m(d)? - m(-d)?) / (2.0 * d);
    let an = susceptibility_analytic(0.0, 1.0).map_err(|e| e.to_string())?;
    if (chi - an).abs() <= 1e-6 && (an - 1.0).abs() <= 1e-12 { Ok(format!("chi {chi:.8}")) } else { Err(format!("chi {chi}")) }
}

fn sinusoid() -> Result<String, String> {
    let t: Vec<f64> = (0..100).map(|k| k as f64 * 1e-3).collect();
    let y: Vec<f64> = t.iter().map(|&x| 0.5 * (TAU * 37.0 * x + 0.4).sin()).collect();
    let fit = fit_sinusoid(&t, &y, None).map_err(|e| e.to_string())?;
    let f = fit.value("frequency");
    if fit.converged() && (f - 37.0).abs() <= 1e-6 { Ok(format!("frequency {f:.6}")) } else { Err(format!("frequency {f}")) }
}

pub const CHECKS: [Check; 6] = [
    ("larmor precession", larmor),
    ("mean-field norm and uniform shift", norm_and_shift),
    ("two-atom protection gap", gap_two_atoms),
    ("exact norm and spin algebra", quantum_conservation),
    ("free-spin susceptibility", free_susceptibility),
    ("sinusoid fit", sinusoid),
];

/// Prints one line per check and returns the number of failures.
pub fn run() -> usize {
    let mut failures = 0;
    for (name, check) in CHECKS {
        match check() {
            Ok(msg) => println!("PASS {name}: {msg}"),
            Err(msg) => {
                failures += 1;
                println!("FAIL {name}: {msg}");
            }
        }
    }
    failures
}
