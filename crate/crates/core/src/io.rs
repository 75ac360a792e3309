//! CSV writers for states, trajectories and protocol results.
//!
//! Frequencies are written in Hz, times in seconds, angles in radians.
//! Numbers use the shortest round-trip decimal form, so reruns are byte-identical.

use std::io::Write;

use crate::ensemble::EnsembleState;
use crate::error::Result;
use crate::meanfield::Trajectory;
use crate::protocols::{DephasingRun, SusceptibilityScan, TomographyResult};
use crate::quantum::{QReal, SpectrumResult};
use crate::scalar::{angular_to_hz, Real};

/// Shortest round-trip decimal; exponent form outside `[1e-4, 1e15)`.
fn num<T: Real>(x: T) -> String {
    let x = x.to_f64_lossy();
    let a = x.abs();
    if a != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        x.to_string()
    }
}

fn opt<T: Real>(x: Option<T>) -> String {
    x.map(num).unwrap_or_default()
}

fn writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

pub const STATE_HEADER: [&str; 7] = ["site_index", "zeta", "c", "w", "fx", "fy", "fz"];
pub const TRAJECTORY_HEADER: [&str; 8] = ["t_s", "region", "phi_rad", "trans_len", "fz_mean", "Cg", "phiL_rad", "energy"];
pub const SPECTRUM_HEADER: [&str; 4] = ["index", "energy_hz", "F_label", "m_label"];
pub const SCAN_HEADER: [&str; 4] = ["h_z_hz", "m_avg", "chi", "cap_flag"];
pub const TOMOGRAPHY_HEADER: [&str; 6] = ["theta_deg", "delta_sign", "Jz_hz", "Jz_err", "Jxy_hz", "Jxy_err"];
pub const DEPHASING_HEADER: [&str; 4] = ["t_s", "phiL_rad", "Cg", "lambda_over_muL"];

pub fn write_state<T: Real, W: Write>(out: W, state: &EnsembleState<T>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(STATE_HEADER)?;
    for (k, s) in state.sites.iter().enumerate() {
        w.write_record([k.to_string(), num(s.zeta), num(s.c), num(s.w), num(s.f.x), num(s.f.y), num(s.f.z)])?;
    }
    w.flush()?;
    Ok(())
}

/// One row per sample and region; `energy` is `E/2π` in Hz.
pub fn write_trajectory<T: Real, W: Write>(out: W, traj: &Trajectory<T>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(TRAJECTORY_HEADER)?;
    for s in &traj.samples {
        for r in &s.regions {
            w.write_record([
                num(s.t),
                r.label.clone(),
                opt(r.phase.phi),
                num(r.phase.transverse),
                num(r.fz),
                num(s.contrast),
                opt(s.winding),
                num(angular_to_hz(s.energy)),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// `F_label` is the integer total spin when conserved, else the `⟨F²⟩`-derived value.
pub fn write_spectrum<T: QReal, W: Write>(out: W, spec: &SpectrumResult<T>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(SPECTRUM_HEADER)?;
    for k in 0..spec.len() {
        let f = match spec.f_integer(k) {
            Some(f) => f.to_string(),
            None => num(spec.f_labels[k]),
        };
        let m = spec.m_labels.as_ref().map(|m| m[k].to_string()).unwrap_or_default();
        w.write_record([k.to_string(), num(angular_to_hz(spec.energies[k])), f, m])?;
    }
    w.flush()?;
    Ok(())
}

/// Grid rows ascending in `h_z`; the zero-field `χ` and cap flag repeat on every row.
pub fn write_scan<T: Real, W: Write>(out: W, scan: &SusceptibilityScan<T>) -> Result<()> {
    let mut w = writer(out);
    w.write_record(SCAN_HEADER)?;
    for p in &scan.points {
        w.write_record([num(angular_to_hz(p.h_z)), num(p.m_avg), num(scan.chi), scan.cap_flag.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_tomography<T: Real, W: Write>(out: W, results: &[TomographyResult<T>]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(TOMOGRAPHY_HEADER)?;
    for r in results {
        w.write_record([
            // undo radian round-off so grid angles print exactly
            num((r.theta.to_degrees().to_f64_lossy() * 1e9).round() / 1e9),
            r.delta_sign.to_string(),
            num(angular_to_hz(r.j_z)),
            num(angular_to_hz(r.j_z_err)),
            num(angular_to_hz(r.j_xy)),
            num(angular_to_hz(r.j_xy_err)),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Concatenated time series of one or more runs, tagged by `Λ/μL`.
pub fn write_dephasing<T: Real, W: Write>(out: W, runs: &[DephasingRun<T>]) -> Result<()> {
    let mut w = writer(out);
    w.write_record(DEPHASING_HEADER)?;
    for run in runs {
        for ((t, phi), cg) in run.times.iter().zip(&run.phi_l).zip(&run.contrast) {
            w.write_record([num(*t), num(*phi), num(*cg), num(run.lambda_over_mu_l)])?;
        }
    }
    w.flush()?;
    Ok(())
}
