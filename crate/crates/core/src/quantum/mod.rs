//! Dense exact spin-1 many-body oracle for up to six atoms.
//!
//! Basis states are tensor products of single-site `|m⟩` with digit `0, 1, 2`
//! for `m = +1, 0, -1`; site 0 is the most significant digit. In this basis
//! `f_x`, `f_z` and every Hamiltonian of the model are real, while `f_y` is
//! purely imaginary, so operators are stored as real matrices and `f_y` is kept
//! through its imaginary part (`f_y = i·Y`, `Y` real antisymmetric).

mod dynamics;
mod spectrum;
mod system;

pub use dynamics::{evolve_quantum, Propagator, QuantumObservables};
pub use spectrum::{protection_gap, spectrum, SpectrumResult};
pub use system::{build_system, coherent_product_state, hamiltonian_matrix, Axis, QuantumSystem, MAX_ATOMS};

use nalgebra::RealField;

use crate::scalar::Real;

/// Scalars usable by the dense linear algebra.
pub trait QReal: Real + RealField {}

impl<T: Real + RealField> QReal for T {}
