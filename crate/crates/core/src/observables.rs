//! Collective spins, local phases and contrast of an [`EnsembleState`].

use crate::ensemble::{EnsembleState, Region, RegionLabel};
use crate::error::{Error, Result};
use crate::scalar::{unwrap_towards, Real};
use crate::vec3::Vec3;

/// Transverse spin length below which a phase is undefined.
pub const DEFAULT_TRANSVERSE_EPS: f64 = 1e-6;

/// Bins per window used by [`phase_winding`].
pub const WINDING_BINS: usize = 20;

/// `𝓕 = Σ w c f`.
pub fn weighted_collective_spin<T: Real>(state: &EnsembleState<T>) -> Vec3<T> {
    state
        .sites
        .iter()
        .fold(Vec3::zero(), |acc, s| acc + s.f.scale(s.w * s.c))
}

/// `F = Σ w f`.
pub fn unweighted_collective_spin<T: Real>(state: &EnsembleState<T>) -> Vec3<T> {
    state.sites.iter().fold(Vec3::zero(), |acc, s| acc + s.f.scale(s.w))
}

/// Population-weighted mean spin and total population of the sites in `region`.
pub fn region_mean_spin<T: Real>(state: &EnsembleState<T>, region: &Region<T>) -> Option<(Vec3<T>, T)> {
    let (sum, weight) = state
        .sites_in(region)
        .fold((Vec3::zero(), T::zero()), |(v, w), s| (v + s.f.scale(s.w), w + s.w));
    (weight > T::zero()).then(|| (sum.scale(T::one() / weight), weight))
}

/// Population-weighted mean of `c` over a region.
pub fn region_mean_coupling<T: Real>(state: &EnsembleState<T>, region: &Region<T>) -> Option<T> {
    let (cw, w) = state
        .sites_in(region)
        .fold((T::zero(), T::zero()), |(cw, w), s| (cw + s.c * s.w, w + s.w));
    (w > T::zero()).then(|| cw / w)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseReading<T> {
    /// `arg(⟨f_x⟩ + i⟨f_y⟩)` in `(-π, π]`; `None` when the transverse length is too small.
    pub phi: Option<T>,
    /// `√(⟨f_x⟩² + ⟨f_y⟩²)`.
    pub transverse: T,
}

pub fn local_phase<T: Real>(state: &EnsembleState<T>, region: &Region<T>) -> Result<PhaseReading<T>> {
    local_phase_with_eps(state, region, T::lit(DEFAULT_TRANSVERSE_EPS))
}

pub fn local_phase_with_eps<T: Real>(
    state: &EnsembleState<T>,
    region: &Region<T>,
    eps: T,
) -> Result<PhaseReading<T>> {
    let (mean, _) =
        region_mean_spin(state, region).ok_or_else(|| Error::EmptyRegion(region.label.to_string()))?;
    Ok(phase_of(mean, eps))
}

fn phase_of<T: Real>(mean: Vec3<T>, eps: T) -> PhaseReading<T> {
    let transverse = mean.transverse();
    let phi = (transverse > eps).then(|| mean.y.atan2(mean.x));
    PhaseReading { phi, transverse }
}

/// Population-weighted mean `f_z` over a region.
pub fn local_magnetization<T: Real>(state: &EnsembleState<T>, region: &Region<T>) -> Result<T> {
    region_mean_spin(state, region)
        .map(|(m, _)| m.z)
        .ok_or_else(|| Error::EmptyRegion(region.label.to_string()))
}

/// `C_g = √(F_x² + F_y²) / N` using the unweighted collective spin.
pub fn global_contrast<T: Real>(state: &EnsembleState<T>) -> T {
    unweighted_collective_spin(state).transverse() / state.n_atoms
}

/// Population-weighted mean spin length.
pub fn mean_spin_length<T: Real>(state: &EnsembleState<T>) -> T {
    state.sites.iter().fold(T::zero(), |a, s| a + s.w * s.f.norm()) / state.n_atoms
}

/// Normalized magnetization `Σ w f_z / Σ w |f|`, i.e. the mean `cos θ` of the spin vector.
pub fn normalized_magnetization<T: Real>(state: &EnsembleState<T>) -> T {
    let (fz, len) = state
        .sites
        .iter()
        .fold((T::zero(), T::zero()), |(a, b), s| (a + s.w * s.f.z, b + s.w * s.f.norm()));
    if len > T::zero() {
        fz / len
    } else {
        T::zero()
    }
}

/// Unwrapped phase difference across a window of length `length` (units of
/// `z_R`) centred on the cloud.
pub fn phase_winding<T: Real>(state: &EnsembleState<T>, length: T) -> Result<T> {
    let c = state.center();
    let half = length / T::lit(2.0);
    phase_winding_between(state, c - half, c + half, WINDING_BINS)
}

/// Unwrapped phase difference `φ(hi) - φ(lo)`.
///
/// Local phases are taken in `bins` equal bins and placed at each bin's
/// population centroid; successive bins are unwrapped onto the nearest branch
/// and the end values are linearly extrapolated to `lo` and `hi`.
pub fn phase_winding_between<T: Real>(state: &EnsembleState<T>, lo: T, hi: T, bins: usize) -> Result<T> {
    if !(lo < hi) {
        return Err(Error::InvalidArgument("winding window must satisfy lo < hi".into()));
    }
    if bins < 2 {
        return Err(Error::InvalidArgument("phase winding needs at least two bins".into()));
    }
    let eps = T::lit(DEFAULT_TRANSVERSE_EPS);
    let width = (hi - lo) / T::count(bins);
    let mut profile: Vec<(T, T)> = Vec::with_capacity(bins);
    for j in 0..bins {
        let b_lo = lo + width * T::count(j);
        let b_hi = if j + 1 == bins { hi } else { b_lo + width };
        let region = Region { label: RegionLabel::Custom(format!("bin{j}")), lo: b_lo, hi: b_hi };
        let (sum, zw, w) = state.sites_in(&region).fold(
            (Vec3::zero(), T::zero(), T::zero()),
            |(v, zw, w), s| (v + s.f.scale(s.w), zw + s.zeta * s.w, w + s.w),
        );
        if w == T::zero() {
            return Err(Error::UndefinedPhase { bin: j, transverse: 0.0 });
        }
        let reading = phase_of(sum.scale(T::one() / w), eps);
        let phi = reading.phi.ok_or(Error::UndefinedPhase {
            bin: j,
            transverse: reading.transverse.to_f64_lossy(),
        })?;
        let phi = match profile.last() {
            Some(&(_, prev)) => unwrap_towards(prev, phi),
            None => phi,
        };
        profile.push((zw / w, phi));
    }
    let extrapolate = |a: (T, T), b: (T, T), x: T| {
        if b.0 == a.0 {
            a.1
        } else {
            a.1 + (b.1 - a.1) * (x - a.0) / (b.0 - a.0)
        }
    };
    let n = profile.len();
    let start = extrapolate(profile[0], profile[1], lo);
    let end = extrapolate(profile[n - 1], profile[n - 2], hi);
    Ok(end - start)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{make_ensemble, CloudSpec, CouplingProfile};
    use std::f64::consts::PI;

    fn uniform(n_sites: usize) -> EnsembleState<f64> {
        make_ensemble(1e5_f64, n_sites, &CloudSpec::default_uniform(), &CouplingProfile::Uniform, 1.0).unwrap()
    }

    fn all() -> Region<f64> {
        Region::new(RegionLabel::Custom("all".into()), -1.0, 1.0).unwrap()
    }

    #[test]
    fn collective_spin_examples() {
        let mut s = uniform(100);
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        let f = weighted_collective_spin(&s);
        assert!((f.x - 1e5).abs() < 1e-7 && f.y == 0.0 && f.z == 0.0);

        let n = s.sites.len();
        for (k, site) in s.sites.iter_mut().enumerate() {
            site.f = if k < n / 2 { Vec3::unit_x() } else { -Vec3::unit_x() };
        }
        assert!(weighted_collective_spin(&s).norm() < 1e-9);
        assert!(unweighted_collective_spin(&s).norm() < 1e-9);

        let mut one = make_ensemble(1.0, 1, &CloudSpec::default_uniform(), &CouplingProfile::Uniform, 1.0).unwrap();
        one.sites[0].f = Vec3::new(0.0, 0.0, 0.5);
        assert_eq!(weighted_collective_spin(&one), Vec3::new(0.0, 0.0, 0.5));
    }

    #[test]
    fn unweighted_ignores_coupling() {
        let mut s = make_ensemble(1e5_f64, 50, &CloudSpec::default_uniform(), &CouplingProfile::Lorentzian, 1.0).unwrap();
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        assert!((unweighted_collective_spin(&s).x - 1e5).abs() < 1e-7);
        assert!((weighted_collective_spin(&s).x - 1e5).abs() < 1e-6);
        s.sites[0].f = Vec3::unit_z();
        let fw = weighted_collective_spin(&s);
        let fu = unweighted_collective_spin(&s);
        assert!((fw.z - s.sites[0].w * s.sites[0].c).abs() < 1e-9);
        assert!((fu.z - s.sites[0].w).abs() < 1e-9);
    }

    #[test]
    fn local_phase_examples() {
        let mut s = uniform(30);
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        assert_eq!(local_phase(&s, &all()).unwrap().phi, Some(0.0));
        s.prepare_uniform(-Vec3::unit_x(), 1.0).unwrap();
        assert_eq!(local_phase(&s, &all()).unwrap().phi, Some(PI));
        let d = Vec3::new(1.0, 1.0, 0.0).normalized().unwrap();
        s.prepare_uniform(d, 1.0).unwrap();
        let r = local_phase(&s, &all()).unwrap();
        assert!((r.phi.unwrap() - PI / 4.0).abs() < 1e-12);
        assert!((r.transverse - 1.0).abs() < 1e-12);
        s.prepare_uniform(Vec3::unit_z(), 1.0).unwrap();
        assert_eq!(local_phase(&s, &all()).unwrap().phi, None);
        let empty = Region::new(RegionLabel::Custom("e".into()), 5.0, 6.0).unwrap();
        assert!(local_phase(&s, &empty).is_err());
    }

    #[test]
    fn magnetization_examples() {
        let mut s = uniform(10);
        s.prepare_uniform(Vec3::unit_z(), 1.0).unwrap();
        assert_eq!(local_magnetization(&s, &all()).unwrap(), 1.0);
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        assert_eq!(local_magnetization(&s, &all()).unwrap(), 0.0);
        s.prepare_uniform(-Vec3::unit_z(), 0.3).unwrap();
        assert!((local_magnetization(&s, &all()).unwrap() + 0.3).abs() < 1e-15);
    }

    #[test]
    fn contrast_examples() {
        let mut s = uniform(400);
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        assert!((global_contrast(&s) - 1.0).abs() < 1e-12);
        s.prepare_uniform(Vec3::unit_x(), 0.67).unwrap();
        assert!((global_contrast(&s) - 0.67).abs() < 1e-12);
        // total winding 2π across the cloud: |∫₀¹ e^{2πiu} du| = 0
        for site in &mut s.sites {
            let a = 2.0 * PI * (site.zeta + 0.5);
            site.f = Vec3::new(a.cos(), a.sin(), 0.0);
        }
        assert!(global_contrast(&s) < 1e-12);
    }

    fn linear_texture(s: &mut EnsembleState<f64>, slope: f64) {
        for site in &mut s.sites {
            let a = slope * site.zeta;
            site.f = Vec3::new(a.cos(), a.sin(), 0.0);
        }
    }

    #[test]
    fn winding_examples() {
        let mut s = uniform(200);
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        assert!(phase_winding(&s, 0.714).unwrap().abs() < 1e-12);
        let length = 0.714;
        linear_texture(&mut s, PI / length);
        assert!((phase_winding(&s, length).unwrap() - PI).abs() < 1e-9);
        // several full turns across the window
        linear_texture(&mut s, 4.71 / length);
        assert!((phase_winding(&s, length).unwrap() - 4.71).abs() < 1e-9);
    }

    #[test]
    fn winding_reports_undefined_bin() {
        let mut s = uniform(200);
        s.prepare_uniform(Vec3::unit_x(), 1.0).unwrap();
        for site in s.sites.iter_mut().filter(|x| x.zeta > 0.12 && x.zeta < 0.28) {
            site.f = Vec3::unit_z();
        }
        match phase_winding(&s, 0.9) {
            Err(Error::UndefinedPhase { bin, .. }) => assert!(bin > 10),
            other => panic!("expected undefined phase, got {other:?}"),
        }
    }
}
