//! Cavity-QED parameters and the coupling constants of the effective XXZ model.
//!
//! All frequencies are angular (rad/s). The Hz-denominated [`PhysicalParamsHz`]
//! is the serialized form; conversion applies the factor 2π.

use serde::{Deserialize, Serialize};

use crate::ensemble::EnsembleState;
use crate::error::{Error, Result};
use crate::observables::weighted_collective_spin;
use crate::scalar::{hz_to_angular, Real};
use crate::vec3::Vec3;

/// Microscopic constants from which the couplings derive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhysicalParams<T> {
    /// Vacuum Rabi half-splitting `g`.
    pub g: T,
    /// Atomic detuning `Δ`.
    pub delta_atom: T,
    /// Drive detuning from cavity resonance `δ`.
    pub delta_drive: T,
    /// Effective vector shift per photon for an average atom, `Ω`.
    pub omega: T,
    pub n_photons: T,
    pub kappa: T,
    /// Larmor frequency `ω_Z`.
    pub larmor: T,
    /// Angle between magnetic field and cavity axis, radians.
    pub theta: T,
}

/// Serialized physical parameters, ordinary frequencies in Hz and angle in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhysicalParamsHz {
    pub g_hz: f64,
    pub delta_atom_hz: f64,
    pub delta_drive_hz: f64,
    pub omega_per_photon_hz: f64,
    pub n_photons: f64,
    pub kappa_hz: f64,
    pub larmor_hz: f64,
    pub theta_deg: f64,
}

impl Default for PhysicalParamsHz {
    fn default() -> Self {
        Self {
            g_hz: 1.25e6,
            delta_atom_hz: -11e9,
            delta_drive_hz: 5.3e6,
            omega_per_photon_hz: 7.0,
            n_photons: 5000.0,
            kappa_hz: 200e3,
            larmor_hz: 2.1e6,
            theta_deg: 53.0,
        }
    }
}

impl PhysicalParamsHz {
    pub fn to_angular<T: Real>(&self) -> PhysicalParams<T> {
        let hz = |x: f64| hz_to_angular(T::lit(x));
        PhysicalParams {
            g: hz(self.g_hz),
            delta_atom: hz(self.delta_atom_hz),
            delta_drive: hz(self.delta_drive_hz),
            omega: hz(self.omega_per_photon_hz),
            n_photons: T::lit(self.n_photons),
            kappa: hz(self.kappa_hz),
            larmor: hz(self.larmor_hz),
            theta: T::lit(self.theta_deg.to_radians()),
        }
    }
}

impl<T: Real> PhysicalParams<T> {
    /// Human-readable violations of the large-detuning conditions.
    ///
    /// The effective model is used regardless; these are advisory only.
    pub fn validity_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.n_photons < T::zero() {
            out.push(format!("negative photon number {}", self.n_photons));
        }
        if !(self.kappa > T::zero()) {
            out.push(format!("cavity linewidth must be positive (got {})", self.kappa));
        }
        let floor = T::lit(2.0) * self.larmor.abs().max(self.kappa.abs());
        if self.delta_drive.abs() < floor {
            out.push(format!(
                "|delta| = {:.3e} rad/s is not >> max(omega_Z, kappa) = {:.3e} rad/s",
                self.delta_drive.abs().to_f64_lossy(),
                (floor / T::lit(2.0)).to_f64_lossy()
            ));
        }
        out
    }

    /// `J₀ = nΩ²/δ` for these parameters.
    pub fn bare_coupling(&self) -> Result<T> {
        bare_coupling(self.n_photons, self.omega, self.delta_drive)
    }

    /// Couplings at the configured field angle, all fields zero.
    pub fn couplings(&self) -> Result<CouplingSet<T>> {
        let (j_xy, j_z) = couplings_from_angle(self.bare_coupling()?, self.theta)?;
        Ok(CouplingSet { j_xy, j_z, ..CouplingSet::zero() })
    }
}

/// Coupling constants of `H_tot = H_XXZ + h_x F_x + h_z F_z + H_inh`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingSet<T> {
    pub j_xy: T,
    pub j_z: T,
    pub h_x: T,
    pub h_z: T,
    /// Field gradient per unit `ζ`: contributes `μ ζ_k` to site `k`'s z-field.
    pub mu: T,
    /// Isotropic contrast decay rate from free-space scattering.
    pub gamma_sc: T,
    /// Additional per-site z-fields, indexed like the ensemble sites.
    pub inhom: Option<Vec<T>>,
}

impl<T: Real> Default for CouplingSet<T> {
    fn default() -> Self {
        Self::zero()
    }
}

impl<T: Real> CouplingSet<T> {
    pub fn zero() -> Self {
        Self {
            j_xy: T::zero(),
            j_z: T::zero(),
            h_x: T::zero(),
            h_z: T::zero(),
            mu: T::zero(),
            gamma_sc: T::zero(),
            inhom: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let scalars = [self.j_xy, self.j_z, self.h_x, self.h_z, self.mu, self.gamma_sc];
        if scalars.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("couplings must be finite".into()));
        }
        if self.gamma_sc < T::zero() {
            return Err(Error::InvalidArgument("scattering rate must be >= 0".into()));
        }
        if let Some(table) = &self.inhom {
            if table.iter().any(|x| !x.is_finite()) {
                return Err(Error::InvalidArgument("inhomogeneous field table must be finite".into()));
            }
        }
        Ok(())
    }

    /// Site-specific z-field `μ ζ + h_{k,z}` (excluding the uniform `h_z`).
    pub fn inhomogeneous_field(&self, site: usize, zeta: T) -> T {
        let table = self
            .inhom
            .as_ref()
            .and_then(|t| t.get(site).copied())
            .unwrap_or_else(T::zero);
        self.mu * zeta + table
    }

    pub fn effective_ising(&self) -> T {
        effective_ising(self.j_xy, self.j_z)
    }
}

/// Maximal vector light shift per circularly polarized photon, `Ω₀ = -g²/6Δ`.
pub fn vector_shift_per_photon<T: Real>(g: T, delta_atom: T) -> Result<T> {
    if delta_atom == T::zero() {
        return Err(Error::ZeroDetuning);
    }
    Ok(-(g * g) / (T::lit(6.0) * delta_atom))
}

/// Large-detuning coupling `J₀ = nΩ²/δ`; red detuning (`δ < 0`) gives the ferromagnetic sign.
pub fn bare_coupling<T: Real>(n_photons: T, omega: T, delta_drive: T) -> Result<T> {
    if delta_drive == T::zero() {
        return Err(Error::ZeroDetuning);
    }
    Ok(n_photons * omega * omega / delta_drive)
}

/// `(J_xy, J_z) = (J₀ sin²θ / 2, J₀ cos²θ)`.
pub fn couplings_from_angle<T: Real>(j0: T, theta: T) -> Result<(T, T)> {
    let slack = T::lit(1e-12);
    if !(theta >= -slack && theta <= T::FRAC_PI_2() + slack) {
        return Err(Error::AngleOutOfRange(theta.to_f64_lossy()));
    }
    let (s, c) = theta.sin_cos();
    Ok((j0 * s * s / T::lit(2.0), j0 * c * c))
}

/// `J_eff = J_z - J_xy`.
pub fn effective_ising<T: Real>(j_xy: T, j_z: T) -> T {
    j_z - j_xy
}

/// `Λ = J |𝓕|`.
pub fn collective_parameter<T: Real>(j: T, state: &EnsembleState<T>) -> T {
    let len = weighted_collective_spin(state).norm();
    if len == T::zero() {
        log::warn!("collective parameter requested for a state with zero collective spin");
    }
    j * len
}

/// Cavity axis in the rotating-frame snapshot: `(sin θ, 0, cos θ)`.
pub fn cavity_axis<T: Real>(theta: T) -> Vec3<T> {
    let (s, c) = theta.sin_cos();
    Vec3::new(s, T::zero(), c)
}

/// `ω_{c+} - ω_{c-} = 2Ω 𝓕·ẑ_c`.
pub fn birefringent_splitting<T: Real>(omega: T, state: &EnsembleState<T>, theta: T) -> T {
    T::lit(2.0) * omega * weighted_collective_spin(state).dot(cavity_axis(theta))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensemble::{make_ensemble, CloudSpec, CouplingProfile};
    use std::f64::consts::{FRAC_PI_2, PI};

    const TAU: f64 = 2.0 * PI;

    #[test]
    fn light_shift_constant() {
        let o = vector_shift_per_photon(TAU * 1.25e6, -TAU * 11e9).unwrap();
        assert!((o / TAU - 23.674).abs() < 1e-2, "{}", o / TAU);
        let flipped = vector_shift_per_photon(TAU * 1.25e6, TAU * 11e9).unwrap();
        assert_eq!(flipped, -o);
        let doubled = vector_shift_per_photon(TAU * 2.5e6, -TAU * 11e9).unwrap();
        assert!((doubled / o - 4.0).abs() < 1e-12);
        assert_eq!(vector_shift_per_photon(1.0, 0.0), Err(Error::ZeroDetuning));
    }

    #[test]
    fn bare_coupling_examples() {
        let j = bare_coupling(5000.0, TAU * 7.0, TAU * 5.3e6).unwrap();
        // 5000 · 49 / 5.3e6 Hz
        assert!((j / TAU - 0.046226).abs() < 1e-5);
        assert_eq!(bare_coupling(5000.0, TAU * 7.0, -TAU * 5.3e6).unwrap(), -j);
        assert_eq!(bare_coupling(0.0, TAU * 7.0, TAU * 5.3e6).unwrap(), 0.0);
        assert_eq!(bare_coupling(1.0, 1.0, 0.0), Err(Error::ZeroDetuning));
    }

    #[test]
    fn angular_law_examples() {
        let (xy, z) = couplings_from_angle(1.0, 0.0).unwrap();
        assert_eq!((xy, z), (0.0, 1.0));
        let (xy, z) = couplings_from_angle(1.0, FRAC_PI_2).unwrap();
        assert!((xy - 0.5).abs() < 1e-15 && z.abs() < 1e-15);
        let (xy, z) = couplings_from_angle(1.0, 53f64.to_radians()).unwrap();
        assert!((xy - 0.319).abs() < 5e-4 && (z - 0.362).abs() < 5e-4);
        assert!(couplings_from_angle(1.0, 2.0).is_err());
    }

    #[test]
    fn effective_ising_examples() {
        assert_eq!(effective_ising(0.3, 0.3), 0.0);
        assert_eq!(effective_ising(0.0, 2.0), 2.0);
        let (xy, z) = couplings_from_angle(-1.0, FRAC_PI_2).unwrap();
        assert!((effective_ising(xy, z) - 0.5).abs() < 1e-15);
    }

    fn polarized(contrast: f64) -> EnsembleState<f64> {
        let mut s = make_ensemble(1e5, 1, &CloudSpec::default_uniform(), &CouplingProfile::Uniform, 1.0).unwrap();
        s.prepare_uniform(Vec3::unit_x(), contrast).unwrap();
        s
    }

    #[test]
    fn collective_parameter_examples() {
        let j = TAU * 46.2e-3;
        let lambda = collective_parameter(j, &polarized(0.67));
        assert!((lambda / TAU - 3095.4).abs() < 1.0, "{}", lambda / TAU);
        assert_eq!(collective_parameter(0.0, &polarized(0.67)), 0.0);
        assert!((collective_parameter(2.0, &polarized(1.0)) - 2e5).abs() < 1e-9);
    }

    #[test]
    fn splitting_examples() {
        let mut s = polarized(1.0);
        s.prepare_uniform(Vec3::unit_z(), 1.0).unwrap();
        let d = birefringent_splitting(TAU * 7.0, &s, 0.0);
        assert!((d / TAU - 1.4e6).abs() < 1e-6);
        // 𝓕 along ŷ is orthogonal to the cavity axis for any angle
        s.prepare_uniform(Vec3::unit_y(), 1.0).unwrap();
        assert_eq!(birefringent_splitting(TAU * 7.0, &s, 0.7), 0.0);
        assert_eq!(birefringent_splitting(0.0, &s, 0.3), 0.0);
    }

    #[test]
    fn validity_flags_small_detuning() {
        let p: PhysicalParams<f64> = PhysicalParamsHz::default().to_angular();
        assert!(p.validity_warnings().is_empty());
        let near = PhysicalParamsHz { delta_drive_hz: 3e6, ..Default::default() }.to_angular::<f64>();
        assert!(!near.validity_warnings().is_empty());
    }

    #[test]
    fn json_keys() {
        let p: PhysicalParamsHz = serde_json::from_str(
            r#"{"g_hz":1.25e6,"delta_atom_hz":-11e9,"delta_drive_hz":-5.3e6,"omega_per_photon_hz":7,
                "n_photons":5000,"kappa_hz":2e5,"larmor_hz":2.1e6,"theta_deg":90}"#,
        )
        .unwrap();
        let c = p.to_angular::<f64>().couplings().unwrap();
        assert!(c.j_xy < 0.0 && c.j_z.abs() < 1e-20);
        assert!(serde_json::from_str::<PhysicalParamsHz>(r#"{"bogus":1}"#).is_err());
    }
}
