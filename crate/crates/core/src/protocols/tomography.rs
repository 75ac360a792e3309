//! Quench tomography of the Ising and spin-exchange couplings.
//!
//! A polarized region A sources a collective field; probe windows in B and C
//! precess about it. With A along `-ẑ` the probes rotate in the equatorial
//! plane at `φ̇ = 2J_z c 𝓕_z^A`; with A along `-ŷ` they rotate about `ŷ` at
//! `ω = 2J_xy c 𝓕_y^A`, seen as a sinusoidal `⟨f_z⟩`.

use rayon::prelude::*;

use crate::ensemble::{EnsembleState, Region, RegionLabel};
use crate::error::{Error, Result};
use crate::hamiltonian::{couplings_from_angle, CouplingSet, PhysicalParams};
use crate::meanfield::{evolve, EvolveOptions, Schedule};
use crate::observables::{region_mean_coupling, region_mean_spin, DEFAULT_TRANSVERSE_EPS};
use crate::scalar::{unwrap_towards, Real};
use crate::vec3::Vec3;

use super::fit::{fit_linear, fit_proportional, fit_sinusoid, FitResult, FitStatus};

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyOptions<T> {
    /// Field angle from the cavity axis, radians.
    pub theta: T,
    /// Sign applied to the drive detuning.
    pub delta_sign: i8,
    pub duration: T,
    pub n_samples: usize,
    /// Probe window centres, units of `z_R`.
    pub probe_centers: (T, T),
    pub probe_half_width: T,
    pub max_phase_per_step: T,
}

impl<T: Real> Default for TomographyOptions<T> {
    fn default() -> Self {
        Self {
            theta: T::zero(),
            delta_sign: 1,
            duration: T::lit(2e-3),
            n_samples: 200,
            probe_centers: (T::lit(-0.25), T::lit(0.25)),
            probe_half_width: T::lit(0.02),
            max_phase_per_step: T::lit(crate::meanfield::DEFAULT_MAX_PHASE_PER_STEP),
        }
    }
}

/// Couplings inferred from one probe window.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeEstimate<T> {
    pub label: String,
    pub zeta: T,
    /// Population-weighted mean coupling in the window.
    pub c: T,
    pub j_z: T,
    pub j_z_err: T,
    pub j_xy: T,
    pub j_xy_err: T,
    pub ising_fit: FitResult<T>,
    pub xy_fit: FitResult<T>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TomographyResult<T> {
    pub theta: T,
    pub delta_sign: i8,
    /// Couplings used to generate the data.
    pub j_z_true: T,
    pub j_xy_true: T,
    /// Probe-averaged estimates.
    pub j_z: T,
    pub j_z_err: T,
    pub j_xy: T,
    pub j_xy_err: T,
    pub probes: Vec<ProbeEstimate<T>>,
    /// Largest relative disagreement between probes, per channel.
    pub probe_spread: (T, T),
}

fn probe_regions<T: Real>(opts: &TomographyOptions<T>) -> Result<[Region<T>; 2]> {
    let w = opts.probe_half_width * T::lit(2.0);
    Ok([
        Region::window(RegionLabel::Custom("probe_B".into()), opts.probe_centers.0, w)?,
        Region::window(RegionLabel::Custom("probe_C".into()), opts.probe_centers.1, w)?,
    ])
}

fn source_strength<T: Real>(state: &EnsembleState<T>, region: &Region<T>) -> Vec3<T> {
    state.sites_in(region).fold(Vec3::zero(), |a, s| a + s.f.scale(s.w * s.c))
}

struct ProbeSeries<T> {
    t: Vec<T>,
    spins: Vec<Vec<Vec3<T>>>,
}

fn quench<T: Real>(
    ensemble: &EnsembleState<T>,
    alpha: Vec3<T>,
    couplings: &CouplingSet<T>,
    probes: &[Region<T>; 2],
    opts: &TomographyOptions<T>,
) -> Result<(Vec3<T>, ProbeSeries<T>)> {
    let mut state = ensemble.clone();
    let regions = ensemble.default_regions();
    for (p, host) in probes.iter().zip([&regions.b, &regions.c]) {
        if !(host.contains(p.lo) && host.contains(p.hi - (p.hi - p.lo) * T::lit(1e-9))) {
            return Err(Error::InvalidArgument(format!("{} must lie inside region {}", p.label, host.label)));
        }
    }
    state.prepare_texture(alpha, ensemble.contrast0, &regions)?;
    let source = source_strength(&state, &regions.a);
    let sched = Schedule::constant(couplings, opts.duration);
    let mut eo = EvolveOptions::new(opts.duration / T::count(opts.n_samples.max(1)));
    eo.max_phase_per_step = opts.max_phase_per_step;
    eo.keep_snapshots = true;
    let traj = evolve(&state, &sched, &eo)?;
    let n = traj.samples.len();
    let mut spins = vec![Vec::with_capacity(n), Vec::with_capacity(n)];
    for snap in &traj.snapshots {
        for (k, p) in probes.iter().enumerate() {
            let (f, _) = region_mean_spin(snap, p).ok_or_else(|| Error::EmptyRegion(p.label.to_string()))?;
            spins[k].push(f);
        }
    }
    Ok((source, ProbeSeries { t: traj.times(), spins }))
}

fn unwrapped<T: Real>(angles: impl Iterator<Item = T>) -> Vec<T> {
    let mut out: Vec<T> = Vec::new();
    for a in angles {
        let next = match out.last() {
            Some(&prev) => unwrap_towards(prev, a),
            None => a,
        };
        out.push(next);
    }
    out
}

/// Runs both quenches at one field angle and inverts the probe rates.
pub fn run_tomography<T: Real>(
    ensemble: &EnsembleState<T>,
    params: &PhysicalParams<T>,
    opts: &TomographyOptions<T>,
) -> Result<TomographyResult<T>> {
    if opts.delta_sign != 1 && opts.delta_sign != -1 {
        return Err(Error::InvalidArgument("delta sign must be +1 or -1".into()));
    }
    if opts.n_samples < 6 {
        return Err(Error::InvalidArgument("tomography needs at least 6 samples".into()));
    }
    if !(opts.duration > T::zero()) {
        return Err(Error::NonPositive { what: "tomography duration", value: opts.duration.to_f64_lossy() });
    }
    for w in params.validity_warnings() {
        log::debug!("{w}");
    }
    let mut p = *params;
    if opts.delta_sign < 0 {
        p.delta_drive = -p.delta_drive;
    }
    let j0 = p.bare_coupling()?;
    let (j_xy, j_z) = couplings_from_angle(j0, opts.theta)?;
    let couplings = CouplingSet { j_xy, j_z, ..CouplingSet::zero() };
    let probes = probe_regions(opts)?;
    let eps = T::lit(DEFAULT_TRANSVERSE_EPS);

    let (ising_src, ising) = quench(ensemble, -Vec3::unit_z(), &couplings, &probes, opts)?;
    let (xy_src, xy) = quench(ensemble, -Vec3::unit_y(), &couplings, &probes, opts)?;
    let two = T::lit(2.0);

    let mut estimates = Vec::with_capacity(2);
    for (k, region) in probes.iter().enumerate() {
        let c = region_mean_coupling(ensemble, region).ok_or_else(|| Error::EmptyRegion(region.label.to_string()))?;

        // Ising channel: equatorial phase grows linearly.
        let series = &ising.spins[k];
        if let Some(i) = series.iter().position(|f| f.transverse() <= eps) {
            return Err(Error::ProbeDepolarized(format!("{} at t = {:e} s", region.label, ising.t[i].to_f64_lossy())));
        }
        let phase = unwrapped(series.iter().map(|f| f.y.atan2(f.x)));
        let ising_fit = fit_linear(&ising.t, &phase, None)?;
        let rate_z = two * c * ising_src.z;
        let j_z_est = ising_fit.value("slope") / rate_z;
        let j_z_err = ising_fit.error("slope") / rate_z.abs();

        // Spin-exchange channel: rotation about ŷ in the x–z plane.
        let series = &xy.spins[k];
        if let Some(i) = series.iter().position(|f| f.x.hypot(f.z) <= eps) {
            return Err(Error::ProbeDepolarized(format!("{} at t = {:e} s", region.label, xy.t[i].to_f64_lossy())));
        }
        let angle = unwrapped(series.iter().map(|f| (-f.z).atan2(f.x)));
        let line = fit_linear(&xy.t, &angle, None)?;
        let omega_lin = line.value("slope");
        let rate_xy = two * c * xy_src.y;
        let fz: Vec<T> = series.iter().map(|f| f.z).collect();
        let (omega, omega_err, xy_fit) = if omega_lin.abs() * opts.duration >= T::lit(0.5) {
            let prior = omega_lin.abs() / T::two_pi();
            let fit = fit_sinusoid(&xy.t, &fz, Some(prior))?;
            if fit.status != FitStatus::Converged {
                return Err(Error::Fit(format!("{}: sinusoid fit {:?}", region.label, fit.status)));
            }
            let sign = if omega_lin < T::zero() { -T::one() } else { T::one() };
            (sign * T::two_pi() * fit.value("frequency"), T::two_pi() * fit.error("frequency"), fit)
        } else {
            // Less than half a radian of rotation: the linear rate is the estimate.
            let fit = fit_sinusoid(&xy.t, &fz, None)?;
            (omega_lin, line.error("slope"), fit)
        };
        estimates.push(ProbeEstimate {
            label: region.label.to_string(),
            zeta: (region.lo + region.hi) / two,
            c,
            j_z: j_z_est,
            j_z_err,
            j_xy: omega / rate_xy,
            j_xy_err: omega_err / rate_xy.abs(),
            ising_fit,
            xy_fit,
        });
    }

    let avg = |f: &dyn Fn(&ProbeEstimate<T>) -> T| (f(&estimates[0]) + f(&estimates[1])) / two;
    let quad = |f: &dyn Fn(&ProbeEstimate<T>) -> T| f(&estimates[0]).hypot(f(&estimates[1])) / two;
    let spread = |f: &dyn Fn(&ProbeEstimate<T>) -> T, scale: T| {
        if scale == T::zero() {
            T::zero()
        } else {
            (f(&estimates[0]) - f(&estimates[1])).abs() / scale.abs()
        }
    };
    let j0_abs = j0.abs();
    Ok(TomographyResult {
        theta: opts.theta,
        delta_sign: opts.delta_sign,
        j_z_true: j_z,
        j_xy_true: j_xy,
        j_z: avg(&|e| e.j_z),
        j_z_err: quad(&|e| e.j_z_err),
        j_xy: avg(&|e| e.j_xy),
        j_xy_err: quad(&|e| e.j_xy_err),
        probe_spread: (spread(&|e| e.j_z, j0_abs), spread(&|e| e.j_xy, j0_abs)),
        probes: estimates,
    })
}

/// Tomography at each field angle, run concurrently, returned in input order.
pub fn angular_sweep<T: Real>(
    ensemble: &EnsembleState<T>,
    params: &PhysicalParams<T>,
    thetas: &[T],
    opts: &TomographyOptions<T>,
) -> Result<Vec<TomographyResult<T>>> {
    thetas
        .par_iter()
        .map(|&theta| run_tomography(ensemble, params, &TomographyOptions { theta, ..opts.clone() }))
        .collect()
}

/// Fits of the angular laws `J_z(θ) = J_z(0) cos²θ` and `J_xy(θ) = J_xy(π/2) sin²θ`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AngularLaw<T> {
    pub j_z0: T,
    pub j_xy90: T,
    pub r2_z: T,
    pub r2_xy: T,
    /// `J_z(0) / J_xy(π/2)` from the fitted amplitudes.
    pub ratio: T,
}

pub fn fit_angular_law<T: Real>(results: &[TomographyResult<T>]) -> Result<AngularLaw<T>> {
    let cos2: Vec<T> = results.iter().map(|r| r.theta.cos().powi(2)).collect();
    let sin2: Vec<T> = results.iter().map(|r| r.theta.sin().powi(2)).collect();
    let jz: Vec<T> = results.iter().map(|r| r.j_z).collect();
    let jxy: Vec<T> = results.iter().map(|r| r.j_xy).collect();
    let (a, r2_z) = fit_proportional(&cos2, &jz)?;
    let (b, r2_xy) = fit_proportional(&sin2, &jxy)?;
    Ok(AngularLaw { j_z0: a, j_xy90: b, r2_z, r2_xy, ratio: a / b })
}
