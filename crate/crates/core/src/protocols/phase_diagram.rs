//! Classical susceptibility map over the interaction plane.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::couplings_from_angle;
use crate::scalar::Real;

use super::susceptibility::susceptibility_analytic;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Paramagnet,
    Critical,
    Ferromagnet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagramCell<T> {
    pub lambda_z: T,
    pub lambda_xy: T,
    pub lambda_eff: T,
    /// `ln χ`; `+∞` on the critical line, `None` in the ferromagnet.
    pub log_chi: Option<T>,
    pub phase: Phase,
}

/// Relative width of the band around `2Λ_eff = -h_x` marked critical.
pub const CRITICAL_BAND: f64 = 1e-9;

fn classify<T: Real>(lambda_z: T, lambda_xy: T, h_x: T) -> Result<DiagramCell<T>> {
    let lambda_eff = lambda_z - lambda_xy;
    let d = T::lit(2.0) * lambda_eff / h_x + T::one();
    let (log_chi, phase) = if d.abs() <= T::lit(CRITICAL_BAND) {
        (Some(T::infinity()), Phase::Critical)
    } else if d < T::zero() {
        (None, Phase::Ferromagnet)
    } else {
        (Some(susceptibility_analytic(lambda_eff, h_x)?.ln()), Phase::Paramagnet)
    };
    Ok(DiagramCell { lambda_z, lambda_xy, lambda_eff, log_chi, phase })
}

/// `ln χ` over the `(Λ_z, Λ_xy)` grid at fixed `h_x`, row-major in `lambda_z`.
pub fn phase_diagram<T: Real>(lambda_z: &[T], lambda_xy: &[T], h_x: T) -> Result<Vec<DiagramCell<T>>> {
    if !(h_x > T::zero()) {
        return Err(Error::NonPositive { what: "transverse field", value: h_x.to_f64_lossy() });
    }
    if lambda_z.iter().chain(lambda_xy).any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("grid values must be finite".into()));
    }
    let mut cells = Vec::with_capacity(lambda_z.len() * lambda_xy.len());
    for &lz in lambda_z {
        for &lxy in lambda_xy {
            cells.push(classify(lz, lxy, h_x)?);
        }
    }
    Ok(cells)
}

/// Pure Ising cut, `Λ_xy = 0`.
pub fn ising_cut<T: Real>(lambda_z: &[T], h_x: T) -> Result<Vec<DiagramCell<T>>> {
    phase_diagram(lambda_z, &[T::zero()], h_x)
}

/// Pure spin-exchange cut, `Λ_z = 0`.
pub fn exchange_cut<T: Real>(lambda_xy: &[T], h_x: T) -> Result<Vec<DiagramCell<T>>> {
    phase_diagram(&[T::zero()], lambda_xy, h_x)
}

/// Fixed drive power, varying field angle: `Λ_z = Λ₀cos²θ`, `Λ_xy = (Λ₀/2)sin²θ`.
pub fn angle_cut<T: Real>(lambda0: T, thetas: &[T], h_x: T) -> Result<Vec<DiagramCell<T>>> {
    thetas
        .iter()
        .map(|&th| {
            let (lxy, lz) = couplings_from_angle(lambda0, th)?;
            classify(lz, lxy, h_x)
        })
        .collect()
}
