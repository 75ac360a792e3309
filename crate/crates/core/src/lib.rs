//! Simulation and analysis toolkit for the cavity-mediated nonlocal XXZ model
//!
//! ```text
//! H_tot = J_xy (𝓕_x² + 𝓕_y²) + J_z 𝓕_z² + h_x F_x + h_z F_z + Σ_i h_{i,z} f_{i,z}
//! ```
//!
//! where `𝓕 = Σ c_i f_i` is the coupling-weighted collective spin. The crate
//! provides a coarse-grained classical (mean-field) layer for large clouds, a
//! dense exact spin-1 oracle for a handful of atoms, and scripted protocols
//! for Hamiltonian tomography, magnetic susceptibility and dephasing.
//!
//! Everything numerical is generic over [`Real`] (`f32` or `f64`); the
//! aliases at the crate root fix the scalar to `f64`.

// `!(x > 0)` is the intended form: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod hamiltonian;
pub mod io;
pub mod meanfield;
pub mod observables;
pub mod protocols;
pub mod quantum;
pub mod scalar;
pub mod vec3;

pub use error::{Error, Result};
pub use scalar::Real;
pub use vec3::Vec3;

pub type EnsembleState = ensemble::EnsembleState<f64>;
pub type Site = ensemble::Site<f64>;
pub type Region = ensemble::Region<f64>;
pub type CouplingSet = hamiltonian::CouplingSet<f64>;
pub type PhysicalParams = hamiltonian::PhysicalParams<f64>;
pub type Schedule = meanfield::Schedule<f64>;
pub type Trajectory = meanfield::Trajectory<f64>;
pub type QuantumSystem = quantum::QuantumSystem<f64>;
pub type SpectrumResult = quantum::SpectrumResult<f64>;
pub type FitResult = protocols::FitResult<f64>;
pub type SusceptibilityScan = protocols::SusceptibilityScan<f64>;

/// Single-precision aliases for memory-bound sweeps.
pub mod f32 {
    pub type EnsembleState = crate::ensemble::EnsembleState<f32>;
    pub type CouplingSet = crate::hamiltonian::CouplingSet<f32>;
    pub type Trajectory = crate::meanfield::Trajectory<f32>;
}
