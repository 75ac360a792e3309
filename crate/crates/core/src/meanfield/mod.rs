//! Classical precession of every macro-spin about its local field.
//!
//! Each site obeys `ḟ_k = B_k × f_k` with `B_k = ∂H/∂f_k`:
//!
//! ```text
//! B_k = c_k (2 J_xy 𝓕_x, 2 J_xy 𝓕_y, 2 J_z 𝓕_z) + (h_x, 0, h_z + μ ζ_k + h_{k,z})
//! ```
//!
//! A positive `h_z` therefore rotates `x̂` towards `ŷ`. The uniform Raman fields
//! enter without the coupling weight.

mod evolve;
mod schedule;

pub use evolve::{evolve, EvolveOptions, RegionSample, Sample, Trajectory, DEFAULT_MAX_PHASE_PER_STEP};
pub use schedule::{InstantCouplings, Profile, Schedule};

use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;
use crate::observables::{unweighted_collective_spin, weighted_collective_spin};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Largest rotation a single step may apply before it is rejected.
pub const MAX_STEP_PHASE: f64 = 0.5;

/// Spin-length drift tolerated before a site is projected back onto its norm.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-12;

#[inline]
fn field_with<T: Real>(
    c: T,
    zeta: T,
    site: usize,
    wcs: Vec3<T>,
    k: &InstantCouplings<'_, T>,
) -> Vec3<T> {
    let two = T::lit(2.0);
    Vec3::new(
        c * two * k.j_xy * wcs.x + k.h_x,
        c * two * k.j_xy * wcs.y,
        c * two * k.j_z * wcs.z + k.h_z + k.inhomogeneous_field(site, zeta),
    )
}

/// Field `B_k` (angular frequency) acting on site `k`.
pub fn local_field<T: Real>(state: &EnsembleState<T>, couplings: &CouplingSet<T>, k: usize) -> Vec3<T> {
    let wcs = weighted_collective_spin(state);
    let site = &state.sites[k];
    field_with(site.c, site.zeta, k, wcs, &InstantCouplings::from_set(couplings))
}

/// Fields on every site, sharing one evaluation of `𝓕`.
pub fn local_fields<T: Real>(state: &EnsembleState<T>, couplings: &CouplingSet<T>) -> Vec<Vec3<T>> {
    let wcs = weighted_collective_spin(state);
    let k = InstantCouplings::from_set(couplings);
    state
        .sites
        .iter()
        .enumerate()
        .map(|(i, s)| field_with(s.c, s.zeta, i, wcs, &k))
        .collect()
}

/// Mean-field energy `J_xy(𝓕_x²+𝓕_y²) + J_z 𝓕_z² + h_x F_x + h_z F_z + Σ w h_{k,z} f_{k,z}`.
pub fn energy<T: Real>(state: &EnsembleState<T>, couplings: &CouplingSet<T>) -> T {
    energy_at(state, &InstantCouplings::from_set(couplings))
}

pub fn energy_at<T: Real>(state: &EnsembleState<T>, k: &InstantCouplings<'_, T>) -> T {
    let wcs = weighted_collective_spin(state);
    let f = unweighted_collective_spin(state);
    let inh = state
        .sites
        .iter()
        .enumerate()
        .fold(T::zero(), |acc, (i, s)| acc + s.w * k.inhomogeneous_field(i, s.zeta) * s.f.z);
    k.j_xy * (wcs.x * wcs.x + wcs.y * wcs.y) + k.j_z * wcs.z * wcs.z + k.h_x * f.x + k.h_z * f.z + inh
}

/// Scales every spin by `exp(-Γ dt)`.
pub fn apply_scattering<T: Real>(state: &mut EnsembleState<T>, gamma_sc: T, dt: T) {
    if gamma_sc == T::zero() {
        return;
    }
    let decay = (-gamma_sc * dt).exp();
    for s in &mut state.sites {
        s.f = s.f.scale(decay);
    }
}

/// One fixed RK4 step under static couplings, followed by scattering decay.
pub fn step<T: Real>(state: &EnsembleState<T>, couplings: &CouplingSet<T>, dt: T) -> Result<EnsembleState<T>> {
    if !(dt > T::zero()) {
        return Err(Error::NonPositive { what: "time step", value: dt.to_f64_lossy() });
    }
    couplings.validate()?;
    let mut out = state.clone();
    let mut integ = Integrator::new(state);
    let sched = Schedule::constant(couplings, dt);
    integ.step(&mut out, &sched, T::zero(), dt)?;
    Ok(out)
}

/// Reusable RK4 buffers for one ensemble.
pub(crate) struct Integrator<T> {
    c: Vec<T>,
    wc: Vec<T>,
    zeta: Vec<T>,
    y0: Vec<Vec3<T>>,
    tmp: Vec<Vec3<T>>,
    acc: Vec<Vec3<T>>,
    k: Vec<Vec3<T>>,
    pub renormalizations: usize,
}

impl<T: Real> Integrator<T> {
    pub fn new(state: &EnsembleState<T>) -> Self {
        let n = state.sites.len();
        Self {
            c: state.sites.iter().map(|s| s.c).collect(),
            wc: state.sites.iter().map(|s| s.w * s.c).collect(),
            zeta: state.sites.iter().map(|s| s.zeta).collect(),
            y0: vec![Vec3::zero(); n],
            tmp: vec![Vec3::zero(); n],
            acc: vec![Vec3::zero(); n],
            k: vec![Vec3::zero(); n],
            renormalizations: 0,
        }
    }

    fn weighted_sum(&self, spins: &[Vec3<T>]) -> Vec3<T> {
        spins
            .iter()
            .zip(&self.wc)
            .fold(Vec3::zero(), |a, (f, &wc)| a + f.scale(wc))
    }

    fn derivative(&self, spins: &[Vec3<T>], k: &InstantCouplings<'_, T>, out: &mut [Vec3<T>]) {
        let wcs = self.weighted_sum(spins);
        for (i, (f, d)) in spins.iter().zip(out.iter_mut()).enumerate() {
            *d = field_with(self.c[i], self.zeta[i], i, wcs, k).cross(*f);
        }
    }

    /// Largest `|B_k|` over all sites for the given spins and couplings.
    pub fn max_field(&self, spins: &[Vec3<T>], k: &InstantCouplings<'_, T>) -> T {
        let wcs = self.weighted_sum(spins);
        (0..spins.len()).fold(T::zero(), |m, i| m.max(field_with(self.c[i], self.zeta[i], i, wcs, k).norm()))
    }

    // stages update several parallel buffers per index
    #[allow(clippy::needless_range_loop)]
    pub fn step(&mut self, state: &mut EnsembleState<T>, sched: &Schedule<T>, t: T, dt: T) -> Result<()> {
        for (y, s) in self.y0.iter_mut().zip(&state.sites) {
            *y = s.f;
        }
        let start = sched.at(t);
        let phase = dt * self.max_field(&self.y0, &start);
        if phase > T::lit(MAX_STEP_PHASE) {
            return Err(Error::StepTooLarge { phase: phase.to_f64_lossy() });
        }
        let half = dt / T::lit(2.0);
        let mid = sched.at(t + half);
        let end = sched.at(t + dt);
        let sixth = dt / T::lit(6.0);
        let third = dt / T::lit(3.0);

        // k1
        let mut k = std::mem::take(&mut self.k);
        self.derivative(&self.y0, &start, &mut k);
        for i in 0..k.len() {
            self.acc[i] = self.y0[i] + k[i].scale(sixth);
            self.tmp[i] = self.y0[i] + k[i].scale(half);
        }
        // k2
        let tmp = std::mem::take(&mut self.tmp);
        self.derivative(&tmp, &mid, &mut k);
        self.tmp = tmp;
        for i in 0..k.len() {
            self.acc[i] += k[i].scale(third);
            self.tmp[i] = self.y0[i] + k[i].scale(half);
        }
        // k3
        let tmp = std::mem::take(&mut self.tmp);
        self.derivative(&tmp, &mid, &mut k);
        self.tmp = tmp;
        for i in 0..k.len() {
            self.acc[i] += k[i].scale(third);
            self.tmp[i] = self.y0[i] + k[i].scale(dt);
        }
        // k4
        let tmp = std::mem::take(&mut self.tmp);
        self.derivative(&tmp, &end, &mut k);
        self.tmp = tmp;
        for i in 0..k.len() {
            self.acc[i] += k[i].scale(sixth);
        }
        self.k = k;

        let gamma = sched.gamma_sc.eval(t + half);
        let decay = if gamma == T::zero() { T::one() } else { (-gamma * dt).exp() };
        let tol = T::lit(NORM_DRIFT_TOLERANCE);
        for (i, s) in state.sites.iter_mut().enumerate() {
            let target = self.y0[i].norm();
            let mut f = self.acc[i];
            let len = f.norm();
            if (len - target).abs() > tol && len > T::zero() {
                f = f.scale(target / len);
                self.renormalizations += 1;
                log::trace!("site {i}: spin length drift {:e} renormalized", (len - target).to_f64_lossy());
            }
            s.f = f.scale(decay);
        }
        Ok(())
    }
}
