use crate::ensemble::{EnsembleState, Region, RegionLabel};
use crate::error::{Error, Result};
use crate::observables::{
    global_contrast, local_magnetization, mean_spin_length, local_phase, phase_winding, unweighted_collective_spin,
    weighted_collective_spin, PhaseReading,
};
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::{energy_at, Integrator, Schedule};

/// Default cap on the rotation angle per internal step, radians.
pub const DEFAULT_MAX_PHASE_PER_STEP: f64 = 1e-3;

#[derive(Debug, Clone)]
pub struct EvolveOptions<T> {
    /// Spacing of recorded samples, seconds.
    pub sample_dt: T,
    /// Internal steps are capped at this rotation angle for the largest field.
    pub max_phase_per_step: T,
    /// Fixed internal step, overriding the field-based cap.
    pub dt: Option<T>,
    /// Regions for per-region phase and magnetization; empty means the whole cloud.
    pub regions: Vec<Region<T>>,
    /// Window length for phase winding, units of `z_R`.
    pub winding_length: Option<T>,
    pub keep_snapshots: bool,
}

impl<T: Real> EvolveOptions<T> {
    pub fn new(sample_dt: T) -> Self {
        Self {
            sample_dt,
            max_phase_per_step: T::lit(DEFAULT_MAX_PHASE_PER_STEP),
            dt: None,
            regions: Vec::new(),
            winding_length: None,
            keep_snapshots: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegionSample<T> {
    pub label: String,
    pub phase: PhaseReading<T>,
    pub fz: T,
}

/// Observables recorded at one sample time.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample<T> {
    pub t: T,
    pub regions: Vec<RegionSample<T>>,
    pub contrast: T,
    /// `None` when no window was requested or some bin had no defined phase.
    pub winding: Option<T>,
    pub energy: T,
    pub weighted: Vec3<T>,
    pub unweighted: Vec3<T>,
    /// Population-weighted mean `|f|`.
    pub spin_length: T,
}

#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub samples: Vec<Sample<T>>,
    /// One snapshot per sample when requested, otherwise empty.
    pub snapshots: Vec<EnsembleState<T>>,
    pub final_state: EnsembleState<T>,
    /// Internal RK4 steps taken.
    pub steps: usize,
    pub renormalizations: usize,
}

impl<T: Real> Trajectory<T> {
    pub fn times(&self) -> Vec<T> {
        self.samples.iter().map(|s| s.t).collect()
    }

    /// Time series of one region's magnetization.
    pub fn region_fz(&self, label: &str) -> Option<Vec<T>> {
        self.samples
            .iter()
            .map(|s| s.regions.iter().find(|r| r.label == label).map(|r| r.fz))
            .collect()
    }

    pub fn region_phase(&self, label: &str) -> Option<Vec<PhaseReading<T>>> {
        self.samples
            .iter()
            .map(|s| s.regions.iter().find(|r| r.label == label).map(|r| r.phase))
            .collect()
    }
}

fn whole_cloud<T: Real>(state: &EnsembleState<T>) -> Region<T> {
    let (lo, hi) = state.extent;
    let pad = (hi - lo) * T::lit(1e-9);
    Region { label: RegionLabel::Custom("all".into()), lo: lo - pad, hi: hi + pad }
}

fn record<T: Real>(
    state: &EnsembleState<T>,
    t: T,
    sched: &Schedule<T>,
    regions: &[Region<T>],
    winding_length: Option<T>,
) -> Result<Sample<T>> {
    let regions = regions
        .iter()
        .map(|r| {
            Ok(RegionSample {
                label: r.label.to_string(),
                phase: local_phase(state, r)?,
                fz: local_magnetization(state, r)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let winding = winding_length.and_then(|l| phase_winding(state, l).ok());
    Ok(Sample {
        t,
        regions,
        contrast: global_contrast(state),
        winding,
        energy: energy_at(state, &sched.at(t)),
        weighted: weighted_collective_spin(state),
        unweighted: unweighted_collective_spin(state),
        spin_length: mean_spin_length(state),
    })
}

/// Integrates `state` under `schedule` over `[0, duration]`, recording
/// observables every `sample_dt` and at the final time.
pub fn evolve<T: Real>(state: &EnsembleState<T>, schedule: &Schedule<T>, opts: &EvolveOptions<T>) -> Result<Trajectory<T>> {
    schedule.validate()?;
    if !(opts.sample_dt > T::zero()) {
        return Err(Error::NonPositive { what: "sample interval", value: opts.sample_dt.to_f64_lossy() });
    }
    if !(opts.max_phase_per_step > T::zero()) {
        return Err(Error::NonPositive { what: "phase per step", value: opts.max_phase_per_step.to_f64_lossy() });
    }
    if let Some(dt) = opts.dt {
        if !(dt > T::zero()) {
            return Err(Error::NonPositive { what: "time step", value: dt.to_f64_lossy() });
        }
    }
    let regions = if opts.regions.is_empty() { vec![whole_cloud(state)] } else { opts.regions.clone() };

    let duration = schedule.duration;
    let n_intervals = {
        let ratio = (duration / opts.sample_dt).to_f64_lossy();
        (ratio - 1e-9).ceil().max(1.0) as usize
    };
    let time_of = |j: usize| (opts.sample_dt * T::count(j)).min(duration);

    let mut current = state.clone();
    let mut integ = Integrator::new(state);
    let mut samples = Vec::with_capacity(n_intervals + 1);
    let mut snapshots = Vec::new();
    let mut steps = 0usize;

    samples.push(record(&current, T::zero(), schedule, &regions, opts.winding_length)?);
    if opts.keep_snapshots {
        snapshots.push(current.clone());
    }
    let mut spins: Vec<Vec3<T>> = Vec::with_capacity(current.sites.len());
    for j in 0..n_intervals {
        let t0 = time_of(j);
        let t1 = time_of(j + 1);
        let span = t1 - t0;
        if span <= T::zero() {
            continue;
        }
        let dt_target = match opts.dt {
            Some(dt) => dt,
            None => {
                spins.clear();
                spins.extend(current.sites.iter().map(|s| s.f));
                let b = integ.max_field(&spins, &schedule.at(t0));
                if b > T::zero() {
                    (opts.max_phase_per_step / b).min(span)
                } else {
                    span
                }
            }
        };
        let m = (span / dt_target).to_f64_lossy().ceil().max(1.0) as usize;
        let dt = span / T::count(m);
        for i in 0..m {
            integ.step(&mut current, schedule, t0 + dt * T::count(i), dt)?;
        }
        steps += m;
        samples.push(record(&current, t1, schedule, &regions, opts.winding_length)?);
        if opts.keep_snapshots {
            snapshots.push(current.clone());
        }
    }
    Ok(Trajectory { samples, snapshots, final_state: current, steps, renormalizations: integ.renormalizations })
}
