//! JSON run configuration. Frequencies are ordinary Hz, times seconds, angles
//! degrees; conversion to angular units happens in the `resolve_*` methods.

use std::f64::consts::TAU;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use xxz_core::ensemble::{make_ensemble, CloudSpec, CouplingProfile};
use xxz_core::hamiltonian::PhysicalParamsHz;
use xxz_core::meanfield::DEFAULT_MAX_PHASE_PER_STEP;
use xxz_core::protocols::{Interaction, Preparation};
use xxz_core::{CouplingSet, EnsembleState};

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Protocol to run; required by `sweep` unless given on the command line.
    pub protocol: Option<String>,
    pub physical: PhysicalParamsHz,
    pub ensemble: EnsembleConfig,
    pub couplings: CouplingConfig,
    pub evolve: EvolveConfig,
    pub tomography: TomographyConfig,
    pub susceptibility: SusceptibilityConfig,
    pub phase_diagram: PhaseDiagramConfig,
    pub dephase: DephaseConfig,
    pub spectrum: SpectrumConfig,
    pub output_dir: PathBuf,
    /// Seeds the initial-direction perturbation of `evolve`.
    pub seed: u64,
    /// Sample spacing for time series; each protocol has its own default.
    pub sample_dt: Option<f64>,
    pub max_phase_per_step: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            protocol: None,
            physical: PhysicalParamsHz::default(),
            ensemble: EnsembleConfig::default(),
            couplings: CouplingConfig::default(),
            evolve: EvolveConfig::default(),
            tomography: TomographyConfig::default(),
            susceptibility: SusceptibilityConfig::default(),
            phase_diagram: PhaseDiagramConfig::default(),
            dephase: DephaseConfig::default(),
            spectrum: SpectrumConfig::default(),
            output_dir: PathBuf::from("out"),
            seed: 0,
            sample_dt: None,
            max_phase_per_step: DEFAULT_MAX_PHASE_PER_STEP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum CloudConfig {
    Uniform { lo: f64, hi: f64 },
    Gaussian { center: f64, sigma: f64, lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    Uniform,
    Lorentzian,
    Table { knots: Vec<(f64, f64)> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnsembleConfig {
    pub n_atoms: f64,
    pub n_sites: usize,
    /// Cloud interval in units of the Rayleigh range.
    pub cloud: CloudConfig,
    pub profile: ProfileConfig,
    pub contrast0: f64,
}

impl Default for EnsembleConfig {
    fn default() -> Self {
        Self {
            n_atoms: 1e5,
            n_sites: 200,
            cloud: CloudConfig::Uniform { lo: -0.5, hi: 0.5 },
            profile: ProfileConfig::Lorentzian,
            contrast0: 0.67,
        }
    }
}

impl EnsembleConfig {
    pub fn build(&self) -> Result<EnsembleState, CliError> {
        let cloud = match self.cloud {
            CloudConfig::Uniform { lo, hi } => CloudSpec::Uniform { lo, hi },
            CloudConfig::Gaussian { center, sigma, lo, hi } => CloudSpec::Gaussian { center, sigma, lo, hi },
        };
        let profile = match &self.profile {
            ProfileConfig::Uniform => CouplingProfile::Uniform,
            ProfileConfig::Lorentzian => CouplingProfile::Lorentzian,
            ProfileConfig::Table { knots } => CouplingProfile::Table { knots: knots.clone() },
        };
        Ok(make_ensemble(self.n_atoms, self.n_sites, &cloud, &profile, self.contrast0)?)
    }
}

/// Coupling overrides. Interactions come from the physical parameters unless
/// given here, either per atom (`j_*_hz`) or collectively (`lambda_*_hz`,
/// meaning `J = Λ / n_atoms`).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CouplingConfig {
    pub j_xy_hz: Option<f64>,
    pub j_z_hz: Option<f64>,
    pub lambda_xy_hz: Option<f64>,
    pub lambda_z_hz: Option<f64>,
    pub h_x_hz: f64,
    pub h_z_hz: f64,
    /// Gradient per Rayleigh range.
    pub mu_hz: f64,
    /// Contrast decay rate, 1/s.
    pub gamma_sc: f64,
    /// Extra per-site z-fields, one per ensemble site.
    pub inhom_hz: Option<Vec<f64>>,
}

fn pick(name: &str, j: Option<f64>, lambda: Option<f64>, n_atoms: f64) -> Result<Option<f64>, CliError> {
    match (j, lambda) {
        (Some(_), Some(_)) => Err(CliError::Config(format!("couplings: give j_{name}_hz or lambda_{name}_hz, not both"))),
        (Some(j), None) => Ok(Some(TAU * j)),
        (None, Some(l)) => Ok(Some(TAU * l / n_atoms)),
        (None, None) => Ok(None),
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))
    }

    /// Angular-frequency couplings: physical-parameter interactions with overrides applied.
    pub fn resolve_couplings(&self) -> Result<CouplingSet, CliError> {
        let c = &self.couplings;
        let n = self.ensemble.n_atoms;
        let xy = pick("xy", c.j_xy_hz, c.lambda_xy_hz, n)?;
        let z = pick("z", c.j_z_hz, c.lambda_z_hz, n)?;
        let (j_xy, j_z) = if xy.is_some() || z.is_some() {
            (xy.unwrap_or(0.0), z.unwrap_or(0.0))
        } else {
            let base = self.physical.to_angular::<f64>().couplings()?;
            (base.j_xy, base.j_z)
        };
        let set = CouplingSet {
            j_xy,
            j_z,
            h_x: TAU * c.h_x_hz,
            h_z: TAU * c.h_z_hz,
            mu: TAU * c.mu_hz,
            gamma_sc: c.gamma_sc,
            inhom: c.inhom_hz.as_ref().map(|v| v.iter().map(|x| TAU * x).collect()),
        };
        set.validate()?;
        Ok(set)
    }

    pub fn sample_dt_or(&self, default: f64) -> Result<f64, CliError> {
        let dt = self.sample_dt.unwrap_or(default);
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(CliError::Config(format!("sample_dt must be positive (got {dt})")));
        }
        Ok(dt)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InitialConfig {
    /// Every spin along `direction`.
    Uniform { direction: [f64; 3] },
    /// Source region along `alpha`, flanking probes along `±x`.
    Texture { alpha: [f64; 3] },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveConfig {
    pub duration_s: f64,
    pub initial: InitialConfig,
    /// Spin length; defaults to the ensemble contrast.
    pub contrast: Option<f64>,
    /// Standard deviation of a random tilt applied to each site, radians.
    pub perturbation_rad: f64,
    /// Fixed internal step, overriding the field-based cap.
    pub dt_s: Option<f64>,
    pub winding_length: Option<f64>,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        Self {
            duration_s: 1e-3,
            initial: InitialConfig::Uniform { direction: [1.0, 0.0, 0.0] },
            contrast: None,
            perturbation_rad: 0.0,
            dt_s: None,
            winding_length: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TomographyConfig {
    /// Field angles; empty means the configured physical angle.
    pub thetas_deg: Vec<f64>,
    pub delta_signs: Vec<i8>,
    pub duration_s: f64,
    pub n_samples: usize,
    pub probe_centers: (f64, f64),
    pub probe_half_width: f64,
}

impl Default for TomographyConfig {
    fn default() -> Self {
        Self {
            thetas_deg: vec![0.0, 15.0, 30.0, 45.0, 60.0, 75.0, 90.0],
            delta_signs: vec![1],
            duration_s: 2e-3,
            n_samples: 200,
            probe_centers: (-0.25, 0.25),
            probe_half_width: 0.02,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum PreparationConfig {
    Analytic,
    Sweep { duration_s: f64, start_factor: f64 },
}

impl PreparationConfig {
    pub fn resolve(&self) -> Preparation<f64> {
        match *self {
            PreparationConfig::Analytic => Preparation::Analytic,
            PreparationConfig::Sweep { duration_s, start_factor } => {
                Preparation::Sweep { duration: duration_s, start_factor }
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SusceptibilityConfig {
    pub h_x_hz: f64,
    /// Symmetric longitudinal-field grid.
    pub h_z_hz: Vec<f64>,
    pub eps: f64,
    pub ramp_s: f64,
    pub hold_s: f64,
    pub ramp_segments: usize,
    pub preparation: PreparationConfig,
    pub adiabatic_tolerance: f64,
}

impl Default for SusceptibilityConfig {
    fn default() -> Self {
        Self {
            h_x_hz: 2e3,
            h_z_hz: vec![-400.0, -200.0, 0.0, 200.0, 400.0],
            eps: 0.01,
            ramp_s: 5e-3,
            hold_s: 2e-3,
            ramp_segments: 100,
            preparation: PreparationConfig::Analytic,
            adiabatic_tolerance: 0.05,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AngleCutConfig {
    pub lambda0_hz: f64,
    pub thetas_deg: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseDiagramConfig {
    pub h_x_hz: f64,
    pub lambda_z_hz: Vec<f64>,
    pub lambda_xy_hz: Vec<f64>,
    /// Replaces the grid with a cut at fixed `J₀|𝓕|` when present.
    pub angle_cut: Option<AngleCutConfig>,
}

impl Default for AngleCutConfig {
    fn default() -> Self {
        Self { lambda0_hz: -2e3, thetas_deg: (0..=18).map(|k| 5.0 * k as f64).collect() }
    }
}

impl Default for PhaseDiagramConfig {
    fn default() -> Self {
        let grid: Vec<f64> = (-4..=4).map(|k| 500.0 * k as f64).collect();
        Self { h_x_hz: 2e3, lambda_z_hz: grid.clone(), lambda_xy_hz: grid, angle_cut: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum InteractionConfig {
    Explicit { j_xy_hz: f64, j_z_hz: f64 },
    /// `Λ_xy / μL`.
    XyRatio { value: f64 },
    /// `Λ_z / μL`.
    IsingRatio { value: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DephaseConfig {
    /// Gradient per Rayleigh range.
    pub mu_hz: f64,
    /// Aligning field before the quench; `None` means `μL/2`.
    pub h_x_pre_hz: Option<f64>,
    pub duration_s: f64,
    pub length: f64,
    pub gamma_sc: f64,
    pub interaction: InteractionConfig,
    pub probe_time_s: f64,
}

impl Default for DephaseConfig {
    fn default() -> Self {
        Self {
            mu_hz: 2.1e3,
            h_x_pre_hz: None,
            duration_s: 1e-3,
            length: 0.714,
            gamma_sc: 0.0,
            interaction: InteractionConfig::XyRatio { value: -0.43 },
            probe_time_s: 5e-4,
        }
    }
}

impl InteractionConfig {
    pub fn resolve(&self) -> Interaction<f64> {
        match *self {
            InteractionConfig::Explicit { j_xy_hz, j_z_hz } => Interaction::Explicit { j_xy: TAU * j_xy_hz, j_z: TAU * j_z_hz },
            InteractionConfig::XyRatio { value } => Interaction::XyRatio(value),
            InteractionConfig::IsingRatio { value } => Interaction::IsingRatio(value),
        }
    }
}

/// Exact-diagonalization inputs, all in Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SpectrumConfig {
    pub n: usize,
    /// Defaults to all ones.
    pub weights: Option<Vec<f64>>,
    pub j_xy_hz: f64,
    pub j_z_hz: f64,
    pub h_x_hz: f64,
    pub h_z_hz: f64,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self { n: 2, weights: None, j_xy_hz: -1.0, j_z_hz: 0.0, h_x_hz: 0.0, h_z_hz: 0.0 }
    }
}
