//! Scripted protocols: tomography, susceptibility, dephasing, and the fits
//! and equilibrium models they rely on.

mod dephasing;
mod fit;
mod phase_diagram;
mod relax;
mod susceptibility;
mod tomography;

pub use dephasing::{
    analytic_dephasing_envelope, run_dephasing, sample_at, DephasingOptions, DephasingRun, DephasingSummary, Interaction,
};
pub use fit::{fit_linear, fit_proportional, fit_sinusoid, r_squared, FitResult, FitStatus, LINEAR_PARAMS, SINUSOID_PARAMS};
pub use phase_diagram::{angle_cut, exchange_cut, ising_cut, phase_diagram, DiagramCell, Phase, CRITICAL_BAND};
pub use relax::{relax_to_ground, RelaxOptions, RelaxReport};
pub use susceptibility::{
    equilibrium_magnetization, run_susceptibility, susceptibility_analytic, Equilibrium, Preparation, ScanPoint,
    SusceptibilityOptions, SusceptibilityScan,
};
pub use tomography::{
    angular_sweep, fit_angular_law, run_tomography, AngularLaw, ProbeEstimate, TomographyOptions, TomographyResult,
};
