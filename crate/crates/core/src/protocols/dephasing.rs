//! Gap-protected dephasing: prepare against a gradient, quench the aligning
//! field, and follow phase winding and global contrast.

use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;
use crate::meanfield::{evolve, EvolveOptions, Schedule, Trajectory};
use crate::observables::{global_contrast, phase_winding, weighted_collective_spin};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::fit::{fit_linear, FitResult};
use super::relax::{relax_to_ground, RelaxOptions};

/// Interaction strength, either explicit or as `Λ/μL` with `Λ = J|𝓕|` of the prepared state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Interaction<T> {
    Explicit { j_xy: T, j_z: T },
    /// Spin-exchange only, `Λ_xy / μL`.
    XyRatio(T),
    /// Ising only, `Λ_z / μL`.
    IsingRatio(T),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DephasingOptions<T> {
    /// Gradient, angular frequency per `z_R`.
    pub mu: T,
    /// Aligning field during preparation, removed at `t = 0`; `None` means
    /// `μL/2`, the largest gradient field inside the window.
    pub h_x_pre: Option<T>,
    pub duration: T,
    pub sample_dt: T,
    /// Winding length `L`, units of `z_R`.
    pub length: T,
    pub gamma_sc: T,
    pub interaction: Interaction<T>,
    /// Time at which the contrast is reported.
    pub probe_time: T,
    pub relax: RelaxOptions<T>,
    pub max_phase_per_step: T,
}

impl<T: Real> Default for DephasingOptions<T> {
    fn default() -> Self {
        Self {
            mu: T::two_pi() * T::lit(2.1e3),
            h_x_pre: None,
            duration: T::lit(1e-3),
            sample_dt: T::lit(1e-5),
            length: T::lit(0.714),
            gamma_sc: T::zero(),
            interaction: Interaction::Explicit { j_xy: T::zero(), j_z: T::zero() },
            probe_time: T::lit(5e-4),
            relax: RelaxOptions::default(),
            max_phase_per_step: T::lit(crate::meanfield::DEFAULT_MAX_PHASE_PER_STEP),
        }
    }
}

impl<T: Real> DephasingOptions<T> {
    pub fn resolved_h_x_pre(&self) -> T {
        self.h_x_pre.unwrap_or_else(|| (self.mu * self.length).abs() / T::lit(2.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DephasingSummary<T> {
    /// Linear fit of `φ_L(t)`.
    pub winding_fit: FitResult<T>,
    pub mu_l: T,
    /// `max_t |φ_L(t) - φ_L(0)|`.
    pub max_excursion: T,
    pub contrast_initial: T,
    pub contrast_at_probe: T,
    pub contrast_final: T,
}

#[derive(Debug, Clone)]
pub struct DephasingRun<T> {
    pub times: Vec<T>,
    pub phi_l: Vec<T>,
    pub contrast: Vec<T>,
    pub j_xy: T,
    pub j_z: T,
    /// `J|𝓕|` of the prepared state for the active coupling.
    pub lambda: T,
    pub lambda_over_mu_l: T,
    pub prepared: EnsembleState<T>,
    pub trajectory: Trajectory<T>,
    pub summary: DephasingSummary<T>,
}

fn prepare<T: Real>(
    ensemble: &EnsembleState<T>,
    j_xy: T,
    j_z: T,
    opts: &DephasingOptions<T>,
) -> Result<EnsembleState<T>> {
    let mut state = ensemble.clone();
    state.prepare_uniform(-Vec3::unit_x(), ensemble.contrast0)?;
    let pre = CouplingSet { j_xy, j_z, h_x: opts.resolved_h_x_pre(), mu: opts.mu, ..CouplingSet::zero() };
    relax_to_ground(&mut state, &pre, &opts.relax)?;
    Ok(state)
}

fn resolve<T: Real>(
    ensemble: &EnsembleState<T>,
    opts: &DephasingOptions<T>,
    mu_l: T,
) -> Result<(T, T, EnsembleState<T>)> {
    let (ratio, xy) = match opts.interaction {
        Interaction::Explicit { j_xy, j_z } => {
            let s = prepare(ensemble, j_xy, j_z, opts)?;
            return Ok((j_xy, j_z, s));
        }
        Interaction::XyRatio(r) => (r, true),
        Interaction::IsingRatio(r) => (r, false),
    };
    let couple = |j: T| if xy { (j, T::zero()) } else { (T::zero(), j) };
    let mut f = ensemble.sites.iter().fold(T::zero(), |a, s| a + s.w * s.c) * ensemble.contrast0;
    for _ in 0..100 {
        let j = ratio * mu_l / f;
        let (j_xy, j_z) = couple(j);
        let state = prepare(ensemble, j_xy, j_z, opts)?;
        let f_new = weighted_collective_spin(&state).norm();
        if (f_new - f).abs() <= T::lit(1e-12) * f {
            return Ok((j_xy, j_z, state));
        }
        f = f_new;
    }
    Err(Error::PreparationFailed { iterations: 100, residual: f64::NAN })
}

/// Linear interpolation of a sampled series.
pub fn sample_at<T: Real>(times: &[T], values: &[T], t: T) -> T {
    let i = times.partition_point(|&x| x <= t);
    if i == 0 {
        return values[0];
    }
    if i >= times.len() {
        return values[values.len() - 1];
    }
    let (t0, t1) = (times[i - 1], times[i]);
    values[i - 1] + (values[i] - values[i - 1]) * (t - t0) / (t1 - t0)
}

pub fn run_dephasing<T: Real>(ensemble: &EnsembleState<T>, opts: &DephasingOptions<T>) -> Result<DephasingRun<T>> {
    if !(opts.length > T::zero()) {
        return Err(Error::NonPositive { what: "winding length", value: opts.length.to_f64_lossy() });
    }
    let mu_l = opts.mu * opts.length;
    if mu_l == T::zero() {
        return Err(Error::InvalidArgument("dephasing needs a nonzero gradient".into()));
    }
    let (j_xy, j_z, prepared) = resolve(ensemble, opts, mu_l)?;

    let after = CouplingSet { j_xy, j_z, mu: opts.mu, gamma_sc: opts.gamma_sc, ..CouplingSet::zero() };
    let schedule = Schedule::constant(&after, opts.duration);
    let mut eo = EvolveOptions::new(opts.sample_dt);
    eo.max_phase_per_step = opts.max_phase_per_step;
    eo.keep_snapshots = true;
    eo.winding_length = Some(opts.length);
    let trajectory = evolve(&prepared, &schedule, &eo)?;

    let times = trajectory.times();
    let phi_l = trajectory
        .snapshots
        .iter()
        .map(|s| phase_winding(s, opts.length))
        .collect::<Result<Vec<T>>>()?;
    let contrast: Vec<T> = trajectory.samples.iter().map(|s| s.contrast).collect();
    let winding_fit = fit_linear(&times, &phi_l, None)?;
    let max_excursion = phi_l.iter().fold(T::zero(), |m, &p| m.max((p - phi_l[0]).abs()));

    let big_f = weighted_collective_spin(&prepared).norm();
    let j_active = if j_xy != T::zero() { j_xy } else { j_z };
    let lambda = j_active * big_f;
    let summary = DephasingSummary {
        winding_fit,
        mu_l,
        max_excursion,
        contrast_initial: contrast[0],
        contrast_at_probe: sample_at(&times, &contrast, opts.probe_time),
        contrast_final: contrast[contrast.len() - 1],
    };
    Ok(DephasingRun {
        times,
        phi_l,
        contrast,
        j_xy,
        j_z,
        lambda,
        lambda_over_mu_l: lambda / mu_l,
        prepared,
        trajectory,
        summary,
    })
}

/// Global contrast of non-interacting spins after free precession about their
/// local z-fields for time `t`.
pub fn analytic_dephasing_envelope<T: Real>(state: &EnsembleState<T>, couplings: &CouplingSet<T>, t: T) -> T {
    let mut evolved = state.clone();
    for (k, s) in evolved.sites.iter_mut().enumerate() {
        let angle = (couplings.h_z + couplings.inhomogeneous_field(k, s.zeta)) * t;
        let (sn, cs) = angle.sin_cos();
        s.f = Vec3::new(s.f.x * cs - s.f.y * sn, s.f.x * sn + s.f.y * cs, s.f.z);
    }
    global_contrast(&evolved)
}
