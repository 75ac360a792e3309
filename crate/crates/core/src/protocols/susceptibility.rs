//! Equilibrium magnetization model and the dynamical susceptibility protocol.

use rayon::prelude::*;

use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::hamiltonian::CouplingSet;
use crate::meanfield::{energy, evolve, EvolveOptions, Profile, Schedule};
use crate::observables::weighted_collective_spin;
use crate::scalar::Real;
use crate::vec3::Vec3;

use super::relax::{relax_to_ground, RelaxOptions};

/// Global minimizer of `E(m)/|𝓕| = Λ m² - h_x √(1-m²) + h_z m`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Equilibrium<T> {
    /// `m = cos θ` of the spin vector; negative for `h_z > 0`.
    pub m: T,
    pub energy: T,
    /// Two mirror-image global minima (ferromagnet at zero field); `m` is the positive one.
    pub degenerate: bool,
}

fn reduced_energy<T: Real>(lambda: T, h_x: T, h_z: T, theta: T) -> T {
    let (s, c) = theta.sin_cos();
    lambda * c * c - h_x * s + h_z * c
}

fn reduced_slope<T: Real>(lambda: T, h_x: T, h_z: T, theta: T) -> T {
    let (s, c) = theta.sin_cos();
    -T::lit(2.0) * lambda * c * s - h_x * c - h_z * s
}

pub fn equilibrium_magnetization<T: Real>(lambda_eff: T, h_x: T, h_z: T) -> Result<Equilibrium<T>> {
    if !(lambda_eff.is_finite() && h_x.is_finite() && h_z.is_finite()) {
        return Err(Error::InvalidArgument("equilibrium inputs must be finite".into()));
    }
    if h_x < T::zero() {
        return Err(Error::NonPositive { what: "transverse field", value: h_x.to_f64_lossy() });
    }
    // θ ∈ [0, π] parametrizes the spin in the x–z half-plane facing -h_x.
    const GRID: usize = 512;
    let pi = T::PI();
    let at = |k: usize| pi * T::count(k) / T::count(GRID);
    let slope = |th: T| reduced_slope(lambda_eff, h_x, h_z, th);
    let en = |th: T| reduced_energy(lambda_eff, h_x, h_z, th);
    let mut candidates = vec![T::zero(), pi];
    for k in 0..GRID {
        let (mut lo, mut hi) = (at(k), at(k + 1));
        let (slo, shi) = (slope(lo), slope(hi));
        if slo < T::zero() && shi >= T::zero() {
            for _ in 0..200 {
                let mid = (lo + hi) / T::lit(2.0);
                if mid <= lo || mid >= hi {
                    break;
                }
                if slope(mid) < T::zero() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            candidates.push((lo + hi) / T::lit(2.0));
        }
    }
    let best = candidates
        .iter()
        .copied()
        .min_by(|a, b| en(*a).partial_cmp(&en(*b)).unwrap())
        .expect("non-empty");
    let e_best = en(best);
    let m = best.cos();
    let scale = h_x.abs() + lambda_eff.abs() + h_z.abs();
    let tol = T::lit(1e-12) * scale.max(T::min_positive_value());
    let degenerate = h_z == T::zero()
        && m.abs() > T::lit(1e-9)
        && candidates.iter().any(|&th| (th.cos() + m).abs() < T::lit(1e-9) && (en(th) - e_best).abs() <= tol);
    Ok(Equilibrium { m: if degenerate { m.abs() } else { m }, energy: e_best, degenerate })
}

/// `χ = 1 / (2Λ_eff/h_x + 1)`; `+∞` at the critical point.
pub fn susceptibility_analytic<T: Real>(lambda_eff: T, h_x: T) -> Result<T> {
    if !(h_x > T::zero()) {
        return Err(Error::NonPositive { what: "transverse field", value: h_x.to_f64_lossy() });
    }
    let d = T::lit(2.0) * lambda_eff / h_x + T::one();
    if d.abs() <= T::lit(1e-12) {
        return Ok(T::infinity());
    }
    Ok(T::one() / d)
}

/// How spins reach the paramagnetic starting point before interactions are ramped on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Preparation<T> {
    /// Each spin placed antiparallel to its local single-particle field.
    Analytic,
    /// Spins start antiparallel to a far-detuned field `h_z = start_factor·h_x`
    /// (sign of the target), which is swept linearly to the target value.
    Sweep { duration: T, start_factor: T },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityOptions<T> {
    /// Finite-difference half-step in units of `h_x`; the detectable slope is capped at `1/eps`.
    pub eps: T,
    pub ramp_duration: T,
    pub hold_duration: T,
    pub ramp_segments: usize,
    pub sample_dt: T,
    pub max_phase_per_step: T,
    pub preparation: Preparation<T>,
    /// Relative energy excess over the static ground state that counts as non-adiabatic.
    pub adiabatic_tolerance: T,
}

impl<T: Real> Default for SusceptibilityOptions<T> {
    fn default() -> Self {
        Self {
            eps: T::lit(0.01),
            ramp_duration: T::lit(5e-3),
            hold_duration: T::lit(2e-3),
            ramp_segments: 100,
            sample_dt: T::lit(2e-5),
            max_phase_per_step: T::lit(crate::meanfield::DEFAULT_MAX_PHASE_PER_STEP),
            preparation: Preparation::Analytic,
            adiabatic_tolerance: T::lit(0.05),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanPoint<T> {
    pub h_z: T,
    /// Hold-averaged `Σ w f_z / Σ w |f|`.
    pub m_avg: T,
    /// `(E_final - E_ground) / |E_ground|`.
    pub energy_excess: T,
    pub adiabatic: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SusceptibilityScan<T> {
    pub h_x: T,
    /// `J_eff |𝓕|` of the prepared zero-field state.
    pub lambda_eff: T,
    /// Requested grid, ascending.
    pub points: Vec<ScanPoint<T>>,
    /// Capped susceptibility `-∂m/∂(h_z/h_x)` at zero field.
    pub chi: T,
    /// Uncapped central-difference estimate.
    pub chi_raw: T,
    /// Response at `±eps/4` relative to `±eps`; `≈ 1/4` in linear response, `≈ 1` at a step.
    pub step_ratio: T,
    pub cap_flag: bool,
    pub eps: T,
}

fn prepare_point<T: Real>(
    base: &EnsembleState<T>,
    couplings: &CouplingSet<T>,
    h_z0: T,
) -> Result<EnsembleState<T>> {
    let mut state = base.clone();
    let c0 = state.contrast0;
    for (k, site) in state.sites.iter_mut().enumerate() {
        let b = Vec3::new(couplings.h_x, T::zero(), h_z0 + couplings.inhomogeneous_field(k, site.zeta));
        let dir = b.normalized().ok_or_else(|| Error::InvalidArgument("zero preparation field".into()))?;
        site.f = dir.scale(-c0);
    }
    Ok(state)
}

fn run_point<T: Real>(
    base: &EnsembleState<T>,
    couplings: &CouplingSet<T>,
    h_z: T,
    opts: &SusceptibilityOptions<T>,
) -> Result<ScanPoint<T>> {
    let (t_prep, h_z_profile, start) = match opts.preparation {
        Preparation::Analytic => (T::zero(), Profile::constant(h_z), h_z),
        Preparation::Sweep { duration, start_factor } => {
            let sign = if h_z < T::zero() { -T::one() } else { T::one() };
            let from = sign * start_factor * couplings.h_x;
            (duration, Profile::linear_ramp(from, h_z, T::zero(), duration), from)
        }
    };
    let state = prepare_point(base, couplings, start)?;
    let ramp = |target: T| Profile::smooth_ramp(T::zero(), target, t_prep, opts.ramp_duration, opts.ramp_segments);
    let duration = t_prep + opts.ramp_duration + opts.hold_duration;
    let schedule = Schedule {
        j_xy: ramp(couplings.j_xy),
        j_z: ramp(couplings.j_z),
        h_x: Profile::constant(couplings.h_x),
        h_z: h_z_profile,
        mu: Profile::constant(couplings.mu),
        gamma_sc: Profile::constant(couplings.gamma_sc),
        inhom: couplings.inhom.clone(),
        duration,
    };
    let mut eo = EvolveOptions::new(opts.sample_dt);
    eo.max_phase_per_step = opts.max_phase_per_step;
    eo.keep_snapshots = false;
    let traj = evolve(&state, &schedule, &eo)?;

    let hold_start = duration - opts.hold_duration;
    let n_tot = base.n_atoms;
    let held: Vec<T> = traj
        .samples
        .iter()
        .filter(|s| s.t >= hold_start)
        .filter(|s| s.spin_length > T::zero())
        .map(|s| s.unweighted.z / (n_tot * s.spin_length))
        .collect();
    if held.is_empty() {
        return Err(Error::InvalidArgument("hold window contains no samples".into()));
    }
    let m_avg = held.iter().fold(T::zero(), |a, &b| a + b) / T::count(held.len());

    let final_couplings = CouplingSet { h_z, ..couplings.clone() };
    let e_final = energy(&traj.final_state, &final_couplings);
    let mut ground = traj.final_state.clone();
    let relaxed = relax_to_ground(&mut ground, &final_couplings, &RelaxOptions::default());
    let e_ground = energy(&ground, &final_couplings);
    let energy_excess = (e_final - e_ground) / e_ground.abs().max(T::min_positive_value());
    let adiabatic = relaxed.is_ok() && energy_excess.abs() <= opts.adiabatic_tolerance;
    if !adiabatic {
        log::warn!(
            "h_z = {:e} rad/s: final energy exceeds the static ground state by {:.3}%",
            h_z.to_f64_lossy(),
            100.0 * energy_excess.to_f64_lossy()
        );
    }
    Ok(ScanPoint { h_z, m_avg, energy_excess, adiabatic })
}

/// Ramps interactions on at each longitudinal field of `h_z_grid` and records
/// the spatially averaged magnetization; estimates `χ` at zero field.
///
/// `couplings` supplies the final interactions, `h_x` and any inhomogeneity;
/// its `h_z` is ignored.
pub fn run_susceptibility<T: Real>(
    ensemble: &EnsembleState<T>,
    couplings: &CouplingSet<T>,
    h_z_grid: &[T],
    opts: &SusceptibilityOptions<T>,
) -> Result<SusceptibilityScan<T>> {
    couplings.validate()?;
    let h_x = couplings.h_x;
    if !(h_x > T::zero()) {
        return Err(Error::NonPositive { what: "transverse field", value: h_x.to_f64_lossy() });
    }
    if !(opts.eps > T::zero()) {
        return Err(Error::NonPositive { what: "finite-difference step", value: opts.eps.to_f64_lossy() });
    }
    let mut grid = h_z_grid.to_vec();
    if grid.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("h_z grid must be finite".into()));
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let scale = grid.iter().fold(h_x, |m, x| m.max(x.abs()));
    let symmetric = grid
        .iter()
        .zip(grid.iter().rev())
        .all(|(a, b)| (*a + *b).abs() <= T::lit(1e-9) * scale);
    if !symmetric {
        return Err(Error::InvalidArgument("h_z grid must be symmetric about zero".into()));
    }

    let e = opts.eps * h_x;
    let probes = [-e, e, -e / T::lit(4.0), e / T::lit(4.0)];
    let all: Vec<T> = grid.iter().copied().chain(probes).collect();
    let results: Vec<ScanPoint<T>> = all
        .par_iter()
        .map(|&h| run_point(ensemble, couplings, h, opts))
        .collect::<Result<_>>()?;
    let (points, extra) = results.split_at(grid.len());
    let (m_minus, m_plus, q_minus, q_plus) = (extra[0].m_avg, extra[1].m_avg, extra[2].m_avg, extra[3].m_avg);

    let chi_raw = -(m_plus - m_minus) / (T::lit(2.0) * opts.eps);
    let full = m_plus - m_minus;
    let step_ratio = if full != T::zero() { (q_plus - q_minus) / full } else { T::zero() };
    let cap = T::one() / opts.eps;
    let cap_flag = step_ratio > T::lit(0.5) || chi_raw > cap;
    let chi = if cap_flag { cap } else { chi_raw };

    let zero_state = prepare_point(ensemble, couplings, T::zero())?;
    let lambda_eff = couplings.effective_ising() * weighted_collective_spin(&zero_state).norm();

    Ok(SusceptibilityScan {
        h_x,
        lambda_eff,
        points: points.to_vec(),
        chi,
        chi_raw,
        step_ratio,
        cap_flag,
        eps: opts.eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn free_spin_equilibrium() {
        let eq = equilibrium_magnetization(0.0_f64, 1.0, 1.0).unwrap();
        assert!((eq.m + std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        let eq = equilibrium_magnetization(0.3_f64, 1.0, 0.0).unwrap();
        assert!(eq.m.abs() < 1e-12 && !eq.degenerate);
    }

    #[test]
    fn ferromagnetic_branch() {
        let (lambda, h_x) = (-1.0_f64, 1.0);
        let eq = equilibrium_magnetization(lambda, h_x, 0.0).unwrap();
        assert!(eq.degenerate);
        let want = (1.0 - (h_x / (2.0 * lambda)).powi(2)).sqrt();
        assert!((eq.m - want).abs() < 1e-12);
        let biased = equilibrium_magnetization(lambda, h_x, 1e-6).unwrap();
        assert!(biased.m < -0.8 && !biased.degenerate);
    }

    #[test]
    fn analytic_susceptibility() {
        assert_eq!(susceptibility_analytic(0.0, 2.0).unwrap(), 1.0);
        assert!((susceptibility_analytic(1.0_f64, 2.0).unwrap() - 0.5).abs() < 1e-15);
        assert!(susceptibility_analytic(-1.0_f64, 2.0).unwrap().is_infinite());
        assert!(susceptibility_analytic(0.0, 0.0).is_err());
    }

    #[test]
    fn asymmetric_grid_rejected() {
        let s = crate::ensemble::make_ensemble(
            1e3,
            1,
            &crate::ensemble::CloudSpec::default_uniform(),
            &crate::ensemble::CouplingProfile::Uniform,
            1.0,
        )
        .unwrap();
        let c = CouplingSet { h_x: 1.0, ..CouplingSet::zero() };
        assert!(run_susceptibility(&s, &c, &[-1.0, 2.0], &SusceptibilityOptions::default()).is_err());
    }
}
