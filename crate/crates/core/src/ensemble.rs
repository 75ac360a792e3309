//! Coarse-grained representation of an inhomogeneously coupled atomic cloud.
//!
//! The physical cloud of `N` atoms is represented by `n_sites` macro-spins
//! placed at bin midpoints along the cavity axis. Each site carries a
//! population weight `w` (atoms represented) and a coupling weight `c`; all
//! collective quantities are `w`-weighted sums so interaction scales keep
//! their physical magnitude regardless of the discretization.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::vec3::Vec3;

/// Tolerance on `| |u| - 1 |` for direction arguments.
pub const UNIT_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Site<T> {
    /// Axial position in units of the Rayleigh range.
    pub zeta: T,
    /// Coupling weight; population-weighted mean over the ensemble is one.
    pub c: T,
    /// Number of physical atoms represented.
    pub w: T,
    /// Classical spin vector, `|f| <= 1`.
    pub f: Vec3<T>,
}

/// Atom density along the cavity axis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CloudSpec<T> {
    /// Flat density on `[lo, hi]`.
    Uniform { lo: T, hi: T },
    /// Gaussian density truncated to `[lo, hi]`.
    Gaussian { center: T, sigma: T, lo: T, hi: T },
}

impl<T: Real> CloudSpec<T> {
    pub fn default_uniform() -> Self {
        CloudSpec::Uniform { lo: T::lit(-0.5), hi: T::lit(0.5) }
    }

    pub fn extent(&self) -> (T, T) {
        match *self {
            CloudSpec::Uniform { lo, hi } | CloudSpec::Gaussian { lo, hi, .. } => (lo, hi),
        }
    }

    fn density(&self, zeta: T) -> T {
        match *self {
            CloudSpec::Uniform { .. } => T::one(),
            CloudSpec::Gaussian { center, sigma, .. } => {
                let u = (zeta - center) / sigma;
                (-(u * u) / T::lit(2.0)).exp()
            }
        }
    }
}

/// Coupling strength versus axial position, before normalization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CouplingProfile<T> {
    Uniform,
    /// `1 / (1 + ζ²)`: axial intensity of a Gaussian cavity mode.
    Lorentzian,
    /// Piecewise-linear table of `(ζ, c)` knots, clamped outside the range.
    Table { knots: Vec<(T, T)> },
}

impl<T: Real> CouplingProfile<T> {
    pub fn eval(&self, zeta: T) -> T {
        match self {
            CouplingProfile::Uniform => T::one(),
            CouplingProfile::Lorentzian => T::one() / (T::one() + zeta * zeta),
            CouplingProfile::Table { knots } => interpolate(knots, zeta),
        }
    }
}

/// Piecewise-linear interpolation through time- or position-ordered knots.
pub(crate) fn interpolate<T: Real>(knots: &[(T, T)], x: T) -> T {
    match knots {
        [] => T::zero(),
        [(_, y)] => *y,
        _ => {
            let first = knots[0];
            let last = knots[knots.len() - 1];
            if x <= first.0 {
                return first.1;
            }
            if x >= last.0 {
                return last.1;
            }
            let i = knots.partition_point(|k| k.0 <= x);
            let (x0, y0) = knots[i - 1];
            let (x1, y1) = knots[i];
            if x1 == x0 {
                y1
            } else {
                y0 + (y1 - y0) * (x - x0) / (x1 - x0)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RegionLabel {
    A,
    B,
    C,
    Custom(String),
}

impl fmt::Display for RegionLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RegionLabel::A => f.write_str("A"),
            RegionLabel::B => f.write_str("B"),
            RegionLabel::C => f.write_str("C"),
            RegionLabel::Custom(s) => f.write_str(s),
        }
    }
}

/// Half-open interval `[lo, hi)` of axial positions.
#[derive(Debug, Clone, PartialEq)]
pub struct Region<T> {
    pub label: RegionLabel,
    pub lo: T,
    pub hi: T,
}

impl<T: Real> Region<T> {
    pub fn new(label: RegionLabel, lo: T, hi: T) -> Result<Self> {
        if !(lo < hi) {
            return Err(Error::InvalidArgument(format!("region {label}: lo must be < hi")));
        }
        Ok(Self { label, lo, hi })
    }

    /// Window of total width `width` centred on `center`.
    pub fn window(label: RegionLabel, center: T, width: T) -> Result<Self> {
        let half = width / T::lit(2.0);
        Self::new(label, center - half, center + half)
    }

    pub fn contains(&self, zeta: T) -> bool {
        zeta >= self.lo && zeta < self.hi
    }

    pub fn overlaps(&self, other: &Region<T>) -> bool {
        self.lo < other.hi && other.lo < self.hi
    }
}

/// Source region `A` and the two probe regions `B`, `C` of the tomography texture.
#[derive(Debug, Clone, PartialEq)]
pub struct TextureRegions<T> {
    pub a: Region<T>,
    pub b: Region<T>,
    pub c: Region<T>,
}

impl<T: Real> TextureRegions<T> {
    /// Thirds of `[lo, hi]`: probes `B` (left) and `C` (right) flank the source `A`.
    pub fn thirds(lo: T, hi: T) -> Self {
        let third = (hi - lo) / T::lit(3.0);
        let m1 = lo + third;
        let m2 = lo + third + third;
        // upper edge nudged so the last site midpoint is always inside C
        let top = hi + (hi - lo) * T::lit(1e-9);
        Self {
            a: Region { label: RegionLabel::A, lo: m1, hi: m2 },
            b: Region { label: RegionLabel::B, lo, hi: m1 },
            c: Region { label: RegionLabel::C, lo: m2, hi: top },
        }
    }

    pub fn check_disjoint(&self) -> Result<()> {
        let pairs = [(&self.a, &self.b), (&self.a, &self.c), (&self.b, &self.c)];
        for (p, q) in pairs {
            if p.overlaps(q) {
                return Err(Error::OverlappingRegions(p.label.to_string(), q.label.to_string()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleState<T> {
    pub sites: Vec<Site<T>>,
    /// Total represented atom number, `Σ w`.
    pub n_atoms: T,
    /// Rayleigh range in meters.
    pub z_r: T,
    /// Cloud interval in units of `z_R`.
    pub extent: (T, T),
    /// Default preparation contrast `C_0`.
    pub contrast0: T,
    /// Factor mapping the raw profile onto normalized couplings.
    pub coupling_scale: T,
    /// Population-weighted mean of the raw profile before normalization.
    pub raw_mean_coupling: T,
    pub profile: CouplingProfile<T>,
}

/// Default Rayleigh range, meters.
pub const DEFAULT_Z_R: f64 = 1.4e-3;

/// Builds a coarse-grained ensemble with unset (zero) spins.
pub fn make_ensemble<T: Real>(
    n_atoms: T,
    n_sites: usize,
    cloud: &CloudSpec<T>,
    profile: &CouplingProfile<T>,
    contrast0: T,
) -> Result<EnsembleState<T>> {
    if !(n_atoms > T::zero()) || !n_atoms.is_finite() {
        return Err(Error::NonPositive { what: "atom number", value: n_atoms.to_f64_lossy() });
    }
    if n_sites == 0 {
        return Err(Error::NonPositive { what: "site count", value: 0.0 });
    }
    check_contrast(contrast0)?;
    let (lo, hi) = cloud.extent();
    if !(lo < hi) {
        return Err(Error::InvalidArgument("cloud interval must satisfy lo < hi".into()));
    }
    if let CloudSpec::Gaussian { sigma, .. } = cloud {
        if !(*sigma > T::zero()) {
            return Err(Error::NonPositive { what: "cloud sigma", value: sigma.to_f64_lossy() });
        }
    }

    let width = (hi - lo) / T::count(n_sites);
    let zetas: Vec<T> = (0..n_sites)
        .map(|k| lo + width * (T::count(k) + T::lit(0.5)))
        .collect();
    let density: Vec<T> = zetas.iter().map(|&z| cloud.density(z)).collect();
    let total_density = density.iter().fold(T::zero(), |a, &d| a + d);
    if !(total_density > T::zero()) || !total_density.is_finite() {
        return Err(Error::EmptySupport);
    }

    let raw: Vec<T> = zetas.iter().map(|&z| profile.eval(z)).collect();
    if let Some(bad) = raw.iter().find(|c| !(**c > T::zero()) || !c.is_finite()) {
        return Err(Error::NonPositive { what: "coupling weight", value: bad.to_f64_lossy() });
    }

    let weights: Vec<T> = density.iter().map(|&d| n_atoms * d / total_density).collect();
    let weighted_raw = weights
        .iter()
        .zip(&raw)
        .fold(T::zero(), |acc, (&w, &c)| acc + w * c);
    let coupling_scale = n_atoms / weighted_raw;

    let sites = zetas
        .into_iter()
        .zip(weights)
        .zip(raw)
        .map(|((zeta, w), c_raw)| Site { zeta, c: c_raw * coupling_scale, w, f: Vec3::zero() })
        .collect();

    Ok(EnsembleState {
        sites,
        n_atoms,
        z_r: T::lit(DEFAULT_Z_R),
        extent: (lo, hi),
        contrast0,
        coupling_scale,
        raw_mean_coupling: weighted_raw / n_atoms,
        profile: profile.clone(),
    })
}

fn check_contrast<T: Real>(c0: T) -> Result<()> {
    if c0 > T::zero() && c0 <= T::one() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("contrast must lie in (0, 1], got {c0}")))
    }
}

fn check_unit<T: Real>(u: Vec3<T>) -> Result<()> {
    let n = u.norm();
    if (n - T::one()).abs() <= T::lit(UNIT_TOLERANCE) {
        Ok(())
    } else {
        Err(Error::NonUnitDirection(n.to_f64_lossy()))
    }
}

impl<T: Real> EnsembleState<T> {
    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    /// Normalized coupling weight at an arbitrary position.
    pub fn coupling_at(&self, zeta: T) -> T {
        self.profile.eval(zeta) * self.coupling_scale
    }

    /// Midpoint of the cloud.
    pub fn center(&self) -> T {
        (self.extent.0 + self.extent.1) / T::lit(2.0)
    }

    pub fn default_regions(&self) -> TextureRegions<T> {
        TextureRegions::thirds(self.extent.0, self.extent.1)
    }

    pub fn sites_in<'a>(&'a self, region: &'a Region<T>) -> impl Iterator<Item = &'a Site<T>> + 'a {
        self.sites.iter().filter(move |s| region.contains(s.zeta))
    }

    /// Points every spin along `direction` with length `contrast`.
    pub fn prepare_uniform(&mut self, direction: Vec3<T>, contrast: T) -> Result<()> {
        check_unit(direction)?;
        check_contrast(contrast)?;
        for s in &mut self.sites {
            s.f = direction.scale(contrast);
        }
        Ok(())
    }

    /// Polarizes every site in `region` along `direction` with length `contrast`.
    pub fn prepare_polarized(&mut self, region: &Region<T>, direction: Vec3<T>, contrast: T) -> Result<()> {
        check_unit(direction)?;
        check_contrast(contrast)?;
        let mut touched = false;
        for s in self.sites.iter_mut().filter(|s| region.contains(s.zeta)) {
            s.f = direction.scale(contrast);
            touched = true;
        }
        if touched {
            Ok(())
        } else {
            Err(Error::EmptyRegion(region.label.to_string()))
        }
    }

    /// Tomography texture `|α⟩_A |x⟩_B |-x⟩_C`.
    ///
    /// The probe region with the larger coupling-weighted population has its
    /// contrast reduced so that the probes' weighted collective spins cancel.
    pub fn prepare_texture(&mut self, alpha: Vec3<T>, contrast: T, regions: &TextureRegions<T>) -> Result<()> {
        regions.check_disjoint()?;
        self.prepare_polarized(&regions.a, alpha, contrast)?;
        let strength = |r: &Region<T>| {
            self.sites_in(r).fold(T::zero(), |acc, s| acc + s.w * s.c)
        };
        let sb = strength(&regions.b);
        let sc = strength(&regions.c);
        if sb == T::zero() {
            return Err(Error::EmptyRegion(regions.b.label.to_string()));
        }
        if sc == T::zero() {
            return Err(Error::EmptyRegion(regions.c.label.to_string()));
        }
        let (cb, cc) = if sb > sc {
            (contrast * sc / sb, contrast)
        } else {
            (contrast, contrast * sb / sc)
        };
        self.prepare_polarized(&regions.b, Vec3::unit_x(), cb)?;
        self.prepare_polarized(&regions.c, -Vec3::unit_x(), cc)?;
        Ok(())
    }

    /// Largest spin length in the ensemble.
    pub fn max_spin_length(&self) -> T {
        self.sites.iter().fold(T::zero(), |m, s| m.max(s.f.norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lorentz(n_sites: usize) -> EnsembleState<f64> {
        make_ensemble(
            1e5,
            n_sites,
            &CloudSpec::default_uniform(),
            &CouplingProfile::Lorentzian,
            1.0,
        )
        .unwrap()
    }

    fn weighted_mean_c(s: &EnsembleState<f64>) -> f64 {
        s.sites.iter().map(|x| x.w * x.c).sum::<f64>() / s.n_atoms
    }

    #[test]
    fn single_site_has_unit_coupling() {
        let s = make_ensemble(1e5_f64, 1, &CloudSpec::default_uniform(), &CouplingProfile::Lorentzian, 1.0).unwrap();
        assert_eq!(s.n_sites(), 1);
        assert!((s.sites[0].c - 1.0).abs() < 1e-15);
        assert_eq!(s.sites[0].w, 1e5);
        assert_eq!(s.sites[0].f, Vec3::zero());
    }

    #[test]
    fn lorentzian_is_normalized() {
        let s = lorentz(200);
        assert!((weighted_mean_c(&s) - 1.0).abs() < 1e-12);
        let total: f64 = s.sites.iter().map(|x| x.w).sum();
        assert!((total - 1e5).abs() < 1e-6);
    }

    #[test]
    fn lorentzian_raw_mean_matches_quadrature() {
        // ∫_{-1/2}^{1/2} dζ/(1+ζ²) = 2 atan(1/2) = 0.927295...
        let s = lorentz(200);
        let exact = 2.0 * 0.5f64.atan();
        assert!((s.raw_mean_coupling - exact).abs() < 1e-5, "{}", s.raw_mean_coupling);
        assert!((s.raw_mean_coupling - 0.927).abs() < 1e-3);
        let ratio = s.coupling_at(0.0) / s.coupling_at(0.5);
        assert!((ratio - 1.25).abs() < 1e-12);
    }

    #[test]
    fn construction_errors() {
        let cloud = CloudSpec::default_uniform();
        let p = CouplingProfile::Uniform;
        assert!(matches!(make_ensemble(0.0, 10, &cloud, &p, 1.0), Err(Error::NonPositive { .. })));
        assert!(matches!(make_ensemble(1e5_f64, 0, &cloud, &p, 1.0), Err(Error::NonPositive { .. })));
        assert!(make_ensemble(1e5_f64, 10, &cloud, &p, 0.0).is_err());
        let far = CloudSpec::Gaussian { center: 1e6, sigma: 1e-3, lo: -0.5, hi: 0.5 };
        assert_eq!(make_ensemble(1e5_f64, 10, &far, &p, 1.0), Err(Error::EmptySupport));
        let neg = CouplingProfile::Table { knots: vec![(-1.0, -1.0), (1.0, 1.0)] };
        assert!(make_ensemble(1e5_f64, 10, &cloud, &neg, 1.0).is_err());
    }

    #[test]
    fn table_profile_interpolates() {
        let p = CouplingProfile::Table { knots: vec![(-1.0, 1.0), (0.0, 3.0), (1.0, 1.0)] };
        assert_eq!(p.eval(-0.5), 2.0);
        assert_eq!(p.eval(5.0), 1.0);
        assert_eq!(p.eval(0.0), 3.0);
    }

    #[test]
    fn gaussian_cloud_weights_follow_density() {
        let g = CloudSpec::Gaussian { center: 0.0_f64, sigma: 0.2, lo: -0.5, hi: 0.5 };
        let s = make_ensemble(1e5_f64, 101, &g, &CouplingProfile::Lorentzian, 1.0).unwrap();
        let mid = &s.sites[50];
        assert!(mid.zeta.abs() < 1e-12);
        assert!(mid.w > s.sites[0].w * 10.0);
        assert!((weighted_mean_c(&s) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn polarized_preparation() {
        let mut s = lorentz(60);
        let r = s.default_regions();
        s.prepare_polarized(&r.a, -Vec3::unit_z(), 1.0).unwrap();
        assert!(s.sites_in(&r.a).all(|x| x.f == -Vec3::unit_z()));
        s.prepare_polarized(&r.b, Vec3::unit_x(), 0.67).unwrap();
        assert!(s.sites_in(&r.b).all(|x| (x.f.norm() - 0.67).abs() < 1e-15));
        assert!(matches!(
            s.prepare_polarized(&r.b, Vec3::new(1.0, 1.0, 0.0), 1.0),
            Err(Error::NonUnitDirection(_))
        ));
        let empty = Region::new(RegionLabel::Custom("far".into()), 2.0, 3.0).unwrap();
        assert!(matches!(s.prepare_polarized(&empty, Vec3::unit_x(), 1.0), Err(Error::EmptyRegion(_))));
    }

    #[test]
    fn thirds_cover_every_site_once() {
        let s = lorentz(99);
        let r = s.default_regions();
        for site in &s.sites {
            let hits = [&r.a, &r.b, &r.c].iter().filter(|q| q.contains(site.zeta)).count();
            assert_eq!(hits, 1, "zeta {}", site.zeta);
        }
        r.check_disjoint().unwrap();
    }

    #[test]
    fn overlapping_texture_regions_rejected() {
        let mut s = lorentz(30);
        let mut r = s.default_regions();
        r.b.hi = r.a.lo + 0.05;
        assert!(matches!(
            s.prepare_texture(Vec3::unit_x(), 1.0, &r),
            Err(Error::OverlappingRegions(_, _))
        ));
    }
}
